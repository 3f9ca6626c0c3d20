#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "face/dataset.hpp"

namespace face {

// Isotropic Gaussian kernel density estimate over a fixed reference set.
class KdeModel {
public:
    KdeModel(std::vector<double> reference_points, std::size_t dim, double bandwidth);

    double bandwidth() const { return bandwidth_; }
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return reference_.size() / dim_; }

    // (1 / (N h^d (2 pi)^(d/2))) * sum_i exp(-|x - x_i|^2 / (2 h^2))
    double estimate(std::span<const double> x) const;
    double operator()(std::span<const double> x) const { return estimate(x); }

private:
    std::vector<double> reference_;
    std::size_t dim_;
    double bandwidth_;
    double norm_;
};

// Scott's rule: N^(-1/(d+4)) times the mean per-feature sample std.
double scott_bandwidth(const Dataset& data);

// nullopt selects Scott's rule.
KdeModel fit_kde(const Dataset& data, std::optional<double> bandwidth = std::nullopt);

enum class WeightKind { neg_log, identity, inverse, custom };

std::string to_string(WeightKind kind);
WeightKind parse_weight_kind(const std::string& name);

// Positive scalar map from a density (or density surrogate) to a cost per
// unit length. Output is clamped below at `floor`.
struct WeightFunction {
    WeightKind kind = WeightKind::neg_log;
    double floor = 0.0;
    std::function<double(double)> custom;

    double operator()(double z) const;
};

// Throws DomainError for z <= 0.
double apply_weight(const WeightFunction& w, double z);

// pi^(d/2) / Gamma(d/2 + 1)
double volume_unit_ball(int d);

using DensityFn = std::function<double(std::span<const double>)>;

// Midpoint Riemann sum of w(p) along the polyline through `points`.
double path_f_length(std::span<const std::vector<double>> points, const DensityFn& density,
                     const WeightFunction& w);

}  // namespace face
