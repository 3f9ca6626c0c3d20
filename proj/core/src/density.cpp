#include "face/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "face/error.hpp"

namespace face {

KdeModel::KdeModel(std::vector<double> reference_points, std::size_t dim, double bandwidth)
    : reference_(std::move(reference_points)), dim_(dim), bandwidth_(bandwidth) {
    if (dim_ == 0) throw Error("KDE dimension must be at least 1");
    if (reference_.empty() || reference_.size() % dim_ != 0)
        throw Error("KDE reference buffer is not a whole number of points");
    if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_))
        throw Error("KDE bandwidth must be positive and finite");
    const double n = static_cast<double>(size());
    const double d = static_cast<double>(dim_);
    norm_ = 1.0 / (n * std::pow(bandwidth_, d) * std::pow(2.0 * std::numbers::pi, d / 2.0));
}

double KdeModel::estimate(std::span<const double> x) const {
    if (x.size() != dim_)
        throw Error("dimension mismatch: KDE expects " + std::to_string(dim_) + ", got " +
                    std::to_string(x.size()));
    const double inv_two_h2 = 1.0 / (2.0 * bandwidth_ * bandwidth_);
    double sum = 0.0;
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = reference_.data() + i * dim_;
        double sq = 0.0;
        for (std::size_t k = 0; k < dim_; ++k) {
            const double diff = x[k] - r[k];
            sq += diff * diff;
        }
        sum += std::exp(-sq * inv_two_h2);
    }
    return norm_ * sum;
}

double scott_bandwidth(const Dataset& data) {
    const std::size_t n = data.size();
    const std::size_t d = data.dim();
    double mean_std = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += data.at(i, k);
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = data.at(i, k) - mean;
            ss += diff * diff;
        }
        mean_std += std::sqrt(ss / static_cast<double>(n - 1));
    }
    mean_std /= static_cast<double>(d);
    if (!(mean_std > 0.0))
        throw Error("cannot choose a bandwidth automatically: dataset has zero variance");
    return std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0)) * mean_std;
}

KdeModel fit_kde(const Dataset& data, std::optional<double> bandwidth) {
    double h = 0.0;
    if (bandwidth) {
        h = *bandwidth;
        if (!(h > 0.0) || !std::isfinite(h))
            throw Error("KDE bandwidth must be positive, got " + format_double(h));
    } else {
        h = scott_bandwidth(data);
    }
    return KdeModel(data.features(), data.dim(), h);
}

std::string to_string(WeightKind kind) {
    switch (kind) {
        case WeightKind::neg_log: return "neg_log";
        case WeightKind::identity: return "identity";
        case WeightKind::inverse: return "inverse";
        case WeightKind::custom: return "custom";
    }
    return "unknown";
}

WeightKind parse_weight_kind(const std::string& name) {
    if (name == "neg_log") return WeightKind::neg_log;
    if (name == "identity") return WeightKind::identity;
    if (name == "inverse") return WeightKind::inverse;
    if (name == "custom") return WeightKind::custom;
    throw Error("unknown weight function '" + name + "'");
}

double WeightFunction::operator()(double z) const {
    if (!(z > 0.0)) throw DomainError("weight function needs a positive argument, got " +
                                      format_double(z));
    double raw = 0.0;
    switch (kind) {
        case WeightKind::neg_log: raw = -std::log(z); break;
        case WeightKind::identity: raw = z; break;
        case WeightKind::inverse: raw = 1.0 / z; break;
        case WeightKind::custom:
            if (!custom) throw Error("custom weight function has no callable");
            raw = custom(z);
            break;
    }
    return std::max(raw, floor);
}

double apply_weight(const WeightFunction& w, double z) { return w(z); }

double volume_unit_ball(int d) {
    if (d < 1) throw Error("unit ball volume needs d >= 1, got " + std::to_string(d));
    // V_d = V_{d-2} * 2 pi / d, seeded with V_1 = 2 and V_2 = pi.
    double v = (d % 2 == 1) ? 2.0 : std::numbers::pi;
    for (int k = (d % 2 == 1) ? 3 : 4; k <= d; k += 2) v *= 2.0 * std::numbers::pi / k;
    return v;
}

double path_f_length(std::span<const std::vector<double>> points, const DensityFn& density,
                     const WeightFunction& w) {
    if (points.size() < 2) throw Error("path needs at least 2 points");
    const std::size_t d = points.front().size();
    std::vector<double> mid(d);
    double total = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto& a = points[i - 1];
        const auto& b = points[i];
        if (a.size() != d || b.size() != d) throw Error("path points have mixed dimensions");
        double sq = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            mid[k] = 0.5 * (a[k] + b[k]);
            sq += (a[k] - b[k]) * (a[k] - b[k]);
        }
        const double p = density(mid);
        if (!(p > 0.0))
            throw DomainError("density is not positive at the midpoint of segment " +
                              std::to_string(i));
        total += w(p) * std::sqrt(sq);
    }
    return total;
}

}  // namespace face
