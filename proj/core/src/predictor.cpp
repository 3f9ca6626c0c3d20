#include "face/predictor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include "face/error.hpp"
#include "sampling.hpp"

namespace face {

namespace {

void softmax_inplace(std::vector<double>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double& v : z) {
        v = std::exp(v - m);
        s += v;
    }
    for (double& v : z) v /= s;
}

void check_dim(std::size_t expected, std::size_t got) {
    if (expected != got)
        throw Error("dimension mismatch: model expects " + std::to_string(expected) +
                    " features, got " + std::to_string(got));
}

}  // namespace

std::vector<double> Predictor::proba_gradient(std::span<const double> x, std::size_t cls) const {
    check_dim(input_dim(), x.size());
    std::vector<double> probe(x.begin(), x.end());
    std::vector<double> grad(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
        probe[k] = x[k] + h;
        const double up = predict_proba(probe)[cls];
        probe[k] = x[k] - h;
        const double down = predict_proba(probe)[cls];
        probe[k] = x[k];
        grad[k] = (up - down) / (2.0 * h);
    }
    return grad;
}

std::vector<double> predict_proba(const Predictor& model, std::span<const double> x) {
    check_dim(model.input_dim(), x.size());
    for (double v : x)
        if (!std::isfinite(v)) throw Error("predict_proba needs a finite input");
    auto p = model.predict_proba(x);
    if (p.size() != model.num_classes())
        throw Error("predictor returned " + std::to_string(p.size()) + " probabilities, expected " +
                    std::to_string(model.num_classes()));
    double s = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw Error("predictor returned a negative or NaN probability");
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-9)
        throw Error("predictor probabilities sum to " + format_double(s) + ", not 1");
    return p;
}

TablePredictor::TablePredictor(const Dataset& data, std::vector<std::vector<double>> probabilities)
    : dim_(data.dim()), classes_(0), keys_(data.features()), probs_(std::move(probabilities)) {
    if (probs_.size() != data.size())
        throw Error("probability table has " + std::to_string(probs_.size()) + " rows, data has " +
                    std::to_string(data.size()));
    classes_ = probs_.front().size();
    if (classes_ < 2) throw Error("probability table needs at least 2 class columns");
    for (const auto& row : probs_)
        if (row.size() != classes_) throw Error("ragged probability table");
}

std::vector<double> TablePredictor::predict_proba(std::span<const double> x) const {
    check_dim(dim_, x.size());
    const std::size_t n = probs_.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (std::equal(x.begin(), x.end(), keys_.begin() + static_cast<std::ptrdiff_t>(i * dim_)))
            return probs_[i];
    }
    throw Error("probability table has no entry for the requested point");
}

TablePredictor load_probability_table(const Dataset& data, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open probability file: " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw Error("probability file row " + std::to_string(rows.size() + 1) +
                            ": '" + cell + "' is not a number");
            }
        }
        rows.push_back(std::move(row));
    }
    return TablePredictor(data, std::move(rows));
}

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw Error("network needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& L = layers_[l];
        if (L.in == 0 || L.out == 0) throw Error("network layer with zero width");
        if (L.weights.size() != L.in * L.out || L.bias.size() != L.out)
            throw Error("network layer " + std::to_string(l) + " has mismatched parameter sizes");
        if (l > 0 && layers_[l - 1].out != L.in)
            throw Error("network layer " + std::to_string(l) + " input does not match previous output");
    }
    if (layers_.back().out < 2) throw Error("network needs at least 2 output classes");
}

Mlp Mlp::initialize(std::span<const std::size_t> layer_sizes, double init_std, std::uint64_t seed) {
    if (layer_sizes.size() < 2) throw Error("network needs input and output sizes");
    std::mt19937_64 rng(seed);
    std::vector<Layer> layers;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        Layer L;
        L.in = layer_sizes[l];
        L.out = layer_sizes[l + 1];
        L.weights.resize(L.in * L.out);
        L.bias.resize(L.out);
        for (double& w : L.weights) w = detail::normal(rng, 0.0, init_std);
        for (double& b : L.bias) b = detail::normal(rng, 0.0, init_std);
        layers.push_back(std::move(L));
    }
    return Mlp(std::move(layers));
}

std::vector<std::size_t> Mlp::layer_sizes() const {
    std::vector<std::size_t> sizes{layers_.front().in};
    for (const auto& L : layers_) sizes.push_back(L.out);
    return sizes;
}

Mlp::Trace Mlp::forward(std::span<const double> x) const {
    Trace t;
    t.act.emplace_back(x.begin(), x.end());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& L = layers_[l];
        const auto& in = t.act.back();
        std::vector<double> z(L.out);
        for (std::size_t o = 0; o < L.out; ++o) {
            double s = L.bias[o];
            const double* w = L.weights.data() + o * L.in;
            for (std::size_t i = 0; i < L.in; ++i) s += w[i] * in[i];
            z[o] = s;
        }
        std::vector<double> a = z;
        if (l + 1 < layers_.size()) {
            for (double& v : a) v = std::max(v, 0.0);
        } else {
            softmax_inplace(a);
        }
        t.pre.push_back(std::move(z));
        t.act.push_back(std::move(a));
    }
    return t;
}

std::vector<double> Mlp::predict_proba(std::span<const double> x) const {
    check_dim(input_dim(), x.size());
    return forward(x).act.back();
}

std::vector<double> Mlp::proba_gradient(std::span<const double> x, std::size_t cls) const {
    check_dim(input_dim(), x.size());
    if (cls >= num_classes()) throw Error("class index out of range");
    const Trace t = forward(x);
    const auto& p = t.act.back();
    // dp_c/dz_j = p_c (delta_cj - p_j)
    std::vector<double> delta(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) delta[j] = p[cls] * ((j == cls ? 1.0 : 0.0) - p[j]);
    for (std::size_t l = layers_.size(); l-- > 0;) {
        const auto& L = layers_[l];
        std::vector<double> prev(L.in, 0.0);
        for (std::size_t o = 0; o < L.out; ++o) {
            const double* w = L.weights.data() + o * L.in;
            for (std::size_t i = 0; i < L.in; ++i) prev[i] += w[i] * delta[o];
        }
        if (l > 0)
            for (std::size_t i = 0; i < L.in; ++i)
                if (t.pre[l - 1][i] <= 0.0) prev[i] = 0.0;
        delta = std::move(prev);
    }
    return delta;
}

std::size_t Mlp::parameter_count() const {
    std::size_t n = 0;
    for (const auto& L : layers_) n += L.weights.size() + L.bias.size();
    return n;
}

std::vector<double> Mlp::parameters() const {
    std::vector<double> p;
    p.reserve(parameter_count());
    for (const auto& L : layers_) {
        p.insert(p.end(), L.weights.begin(), L.weights.end());
        p.insert(p.end(), L.bias.begin(), L.bias.end());
    }
    return p;
}

void Mlp::set_parameters(std::span<const double> params) {
    if (params.size() != parameter_count()) throw Error("parameter vector has the wrong length");
    auto it = params.begin();
    for (auto& L : layers_) {
        std::copy_n(it, L.weights.size(), L.weights.begin());
        it += static_cast<std::ptrdiff_t>(L.weights.size());
        std::copy_n(it, L.bias.size(), L.bias.begin());
        it += static_cast<std::ptrdiff_t>(L.bias.size());
    }
}

double Mlp::loss(const Dataset& data) const {
    check_dim(input_dim(), data.dim());
    double total = 0.0;
    for (std::size_t n = 0; n < data.size(); ++n) {
        const Trace t = forward(data.row(n));
        const auto& z = t.pre.back();
        const double m = *std::max_element(z.begin(), z.end());
        double s = 0.0;
        for (double v : z) s += std::exp(v - m);
        total += (m + std::log(s)) - z[static_cast<std::size_t>(data.label(n))];
    }
    return total / static_cast<double>(data.size());
}

double Mlp::loss_and_gradient(const Dataset& data, std::vector<double>& grad) const {
    check_dim(input_dim(), data.dim());
    if (data.num_classes() > num_classes()) throw Error("dataset has more classes than the network");
    grad.assign(parameter_count(), 0.0);

    // Offsets of each layer's block inside the flat parameter vector.
    std::vector<std::size_t> offset(layers_.size());
    std::size_t off = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        offset[l] = off;
        off += layers_[l].weights.size() + layers_[l].bias.size();
    }

    const double inv_n = 1.0 / static_cast<double>(data.size());
    double total = 0.0;
    for (std::size_t n = 0; n < data.size(); ++n) {
        const Trace t = forward(data.row(n));
        const auto y = static_cast<std::size_t>(data.label(n));
        const auto& z = t.pre.back();
        const double m = *std::max_element(z.begin(), z.end());
        double s = 0.0;
        for (double v : z) s += std::exp(v - m);
        total += (m + std::log(s)) - z[y];

        std::vector<double> delta = t.act.back();
        delta[y] -= 1.0;
        for (double& v : delta) v *= inv_n;

        for (std::size_t l = layers_.size(); l-- > 0;) {
            const auto& L = layers_[l];
            const auto& in = t.act[l];
            double* gw = grad.data() + offset[l];
            double* gb = gw + L.weights.size();
            for (std::size_t o = 0; o < L.out; ++o) {
                gb[o] += delta[o];
                for (std::size_t i = 0; i < L.in; ++i) gw[o * L.in + i] += delta[o] * in[i];
            }
            if (l == 0) break;
            std::vector<double> prev(L.in, 0.0);
            for (std::size_t o = 0; o < L.out; ++o) {
                const double* w = L.weights.data() + o * L.in;
                for (std::size_t i = 0; i < L.in; ++i) prev[i] += w[i] * delta[o];
            }
            for (std::size_t i = 0; i < L.in; ++i)
                if (t.pre[l - 1][i] <= 0.0) prev[i] = 0.0;
            delta = std::move(prev);
        }
    }
    return total * inv_n;
}

double Mlp::accuracy(const Dataset& data) const {
    std::size_t correct = 0;
    for (std::size_t n = 0; n < data.size(); ++n) {
        const auto p = predict_proba(data.row(n));
        const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        if (best == static_cast<std::size_t>(data.label(n))) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

bool Mlp::operator==(const Mlp& other) const {
    return layer_sizes() == other.layer_sizes() && parameters() == other.parameters();
}

TrainedMlp train_mlp(const Dataset& data, const TrainConfig& config) {
    if (!(config.learning_rate > 0.0)) throw Error("learning rate must be positive");
    if (config.epochs <= 0) throw Error("epoch count must be positive");
    if (!(config.init_std > 0.0)) throw Error("initialization std must be positive");

    std::vector<std::size_t> sizes{data.dim()};
    sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
    sizes.push_back(data.num_classes());
    Mlp model = Mlp::initialize(sizes, config.init_std, config.seed);

    std::vector<double> params = model.parameters();
    std::vector<double> grad;
    double loss = 0.0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        loss = model.loss_and_gradient(data, grad);
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= config.learning_rate * grad[i];
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (!std::isfinite(params[i]))
                throw Error("training diverged at epoch " + std::to_string(epoch + 1) +
                            ": parameter " + std::to_string(i) + " is not finite (loss " +
                            format_double(loss) + ")");
        }
        model.set_parameters(params);
    }
    TrainReport report;
    report.final_loss = model.loss(data);
    report.accuracy = model.accuracy(data);
    report.epochs = config.epochs;
    return {std::move(model), report};
}

nlohmann::json mlp_to_json(const Mlp& model) {
    nlohmann::json doc;
    doc["format"] = "face-mlp";
    doc["version"] = 1;
    doc["layer_sizes"] = model.layer_sizes();
    doc["activation"] = "relu";
    doc["output"] = "softmax";
    auto layers = nlohmann::json::array();
    for (const auto& L : model.layers())
        layers.push_back({{"weights", L.weights}, {"bias", L.bias}});
    doc["layers"] = std::move(layers);
    return doc;
}

Mlp mlp_from_json(const nlohmann::json& doc) {
    try {
        if (doc.value("format", std::string()) != "face-mlp")
            throw Error("not a face-mlp model document");
        const auto sizes = doc.at("layer_sizes").get<std::vector<std::size_t>>();
        const auto& layers = doc.at("layers");
        if (sizes.size() != layers.size() + 1) throw Error("layer_sizes does not match layer count");
        std::vector<Mlp::Layer> out;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            Mlp::Layer L;
            L.in = sizes[l];
            L.out = sizes[l + 1];
            L.weights = layers[l].at("weights").get<std::vector<double>>();
            L.bias = layers[l].at("bias").get<std::vector<double>>();
            out.push_back(std::move(L));
        }
        return Mlp(std::move(out));
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed model document: ") + e.what());
    }
}

}  // namespace face
