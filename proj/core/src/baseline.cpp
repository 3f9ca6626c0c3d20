#include "face/baseline.hpp"

#include <algorithm>
#include <cmath>

#include "face/error.hpp"

namespace face {

namespace {

double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(v.begin(), mid, v.end());
    const double upper = *mid;
    if (n % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), mid);
    return 0.5 * (lower + upper);
}

double l2_distance(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
    return std::sqrt(s);
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

MadScale compute_mad(const Dataset& data) {
    MadScale scale;
    std::vector<double> column(data.size());
    for (std::size_t k = 0; k < data.dim(); ++k) {
        for (std::size_t i = 0; i < data.size(); ++i) column[i] = data.at(i, k);
        const double med = median_of(column);
        for (double& v : column) v = std::abs(v - med);
        scale.values.push_back(median_of(column));
    }
    double smallest = 0.0;
    for (double v : scale.values)
        if (v > 0.0 && (smallest == 0.0 || v < smallest)) smallest = v;
    if (smallest == 0.0) smallest = 1.0;
    for (double& v : scale.values)
        if (!(v > 0.0)) v = smallest;
    return scale;
}

double mad_distance(std::span<const double> x, std::span<const double> y, const MadScale& scale) {
    if (x.size() != y.size() || x.size() != scale.values.size())
        throw Error("dimension mismatch in MAD distance");
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += std::abs(x[k] - y[k]) / scale.values[k];
    return s;
}

void validate(const WachterConfig& c) {
    if (!(c.tolerance > 0.0)) throw Error("tolerance must be positive");
    if (!(c.target_value >= 0.0 && c.target_value <= 1.0)) throw Error("target value must lie in [0, 1]");
    if (!(c.lambda_init > 0.0)) throw Error("lambda_init must be positive");
    if (!(c.lambda_growth > 1.0)) throw Error("lambda_growth must exceed 1");
    if (c.max_outer_iters < 1 || c.max_inner_iters < 1) throw Error("iteration caps must be positive");
    if (!(c.step_size > 0.0)) throw Error("step size must be positive");
}

WachterResult wachter_counterfactual(const Predictor& model, std::span<const double> x,
                                     const WachterConfig& config, const MadScale& scale) {
    validate(config);
    const std::size_t d = x.size();
    if (d != model.input_dim() || d != scale.values.size())
        throw Error("dimension mismatch between instance, model and MAD scale");
    if (config.target_class >= model.num_classes()) throw Error("target class out of range");

    auto dist = [&](std::span<const double> xp) {
        return config.distance == BaselineDistance::mad_l1 ? mad_distance(x, xp, scale)
                                                           : l2_distance(x, xp);
    };
    auto score = [&](std::span<const double> xp) {
        return predict_proba(model, xp)[config.target_class];
    };

    WachterResult res;
    std::vector<double> cur(x.begin(), x.end());
    double lambda = config.lambda_init;
    double f = score(cur);

    auto finish = [&](bool converged) {
        res.counterfactual = cur;
        res.converged = converged;
        res.lambda = lambda;
        res.gap = std::abs(f - config.target_value);
        res.distance = dist(cur);
        res.objective = lambda * (f - config.target_value) * (f - config.target_value) + res.distance;
        return res;
    };

    if (std::abs(f - config.target_value) <= config.tolerance) return finish(true);

    std::vector<double> grad(d), trial(d);
    for (int outer = 0; outer < config.max_outer_iters; ++outer) {
        res.outer_iterations = outer + 1;
        if (outer > 0) lambda *= config.lambda_growth;
        auto objective = [&](std::span<const double> xp, double fx) {
            return lambda * (fx - config.target_value) * (fx - config.target_value) + dist(xp);
        };
        double obj = objective(cur, f);

        for (int inner = 0; inner < config.max_inner_iters; ++inner) {
            ++res.inner_iterations;
            const auto df = model.proba_gradient(cur, config.target_class);
            const double dl = 2.0 * lambda * (f - config.target_value);
            const double l2 = l2_distance(x, cur);
            for (std::size_t k = 0; k < d; ++k) {
                double dd = 0.0;
                const double diff = cur[k] - x[k];
                if (config.distance == BaselineDistance::mad_l1)
                    dd = sign(diff) / scale.values[k];  // subgradient 0 where x'_k == x_k
                else if (l2 > 0.0)
                    dd = diff / l2;
                grad[k] = dl * df[k] + dd;
            }

            // Steps have length step_size along the normalized subgradient;
            // lambda * df spans many orders of magnitude across outer rounds.
            double gnorm = 0.0;
            for (double g : grad) gnorm += g * g;
            gnorm = std::sqrt(gnorm);
            if (!(gnorm > 0.0)) break;

            bool accepted = false;
            double step = config.step_size;
            for (int halving = 0; halving <= 20; ++halving, step *= 0.5) {
                for (std::size_t k = 0; k < d; ++k) trial[k] = cur[k] - step * grad[k] / gnorm;
                const double ft = score(trial);
                const double ot = objective(trial, ft);
                if (ot <= obj) {
                    accepted = trial != cur;
                    cur = trial;
                    f = ft;
                    obj = ot;
                    res.trace.emplace_back(outer, obj);
                    break;
                }
            }
            if (std::abs(f - config.target_value) <= config.tolerance) return finish(true);
            if (!accepted) break;  // no descent direction left at this lambda
        }
    }
    return finish(false);
}

nlohmann::json wachter_config_to_json(const WachterConfig& c) {
    return {{"target_class", c.target_class},
            {"tolerance", c.tolerance},
            {"target_value", c.target_value},
            {"lambda_init", c.lambda_init},
            {"lambda_growth", c.lambda_growth},
            {"max_outer_iters", c.max_outer_iters},
            {"max_inner_iters", c.max_inner_iters},
            {"distance", c.distance == BaselineDistance::mad_l1 ? "mad_l1" : "l2"},
            {"step_size", c.step_size}};
}

nlohmann::json wachter_result_to_json(const WachterResult& r) {
    return {{"counterfactual", r.counterfactual},
            {"converged", r.converged},
            {"outer_iterations", r.outer_iterations},
            {"inner_iterations", r.inner_iterations},
            {"lambda", r.lambda},
            {"objective", r.objective},
            {"gap", r.gap},
            {"distance", r.distance}};
}

}  // namespace face
