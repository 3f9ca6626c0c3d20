#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "face/dataset.hpp"
#include "face/predictor.hpp"

namespace face {

// Per-feature median absolute deviation, every entry > 0.
struct MadScale {
    std::vector<double> values;
};

// MAD_k = median_i |x_ik - median_j x_jk|. Zero entries are replaced by the
// smallest positive entry, or by 1 when every feature is constant.
MadScale compute_mad(const Dataset& data);

// sum_k |x_k - y_k| / MAD_k
double mad_distance(std::span<const double> x, std::span<const double> y, const MadScale& scale);

enum class BaselineDistance { mad_l1, l2 };

struct WachterConfig {
    std::size_t target_class = 1;
    double tolerance = 0.05;
    double target_value = 0.55;  // y'; defaults to 0.5 + tolerance
    double lambda_init = 0.1;
    double lambda_growth = 2.0;
    int max_outer_iters = 30;
    int max_inner_iters = 500;
    BaselineDistance distance = BaselineDistance::mad_l1;
    double step_size = 0.01;
};

void validate(const WachterConfig& config);

struct WachterResult {
    std::vector<double> counterfactual;
    bool converged = false;
    int outer_iterations = 0;
    int inner_iterations = 0;
    double lambda = 0.0;
    double objective = 0.0;
    double gap = 0.0;       // |f(x') - y'|
    double distance = 0.0;  // d(x, x') under the configured distance
    // (outer round, objective) after every accepted step.
    std::vector<std::pair<int, double>> trace;
};

// Gradient search for x' near x whose target-class probability reaches y'.
// Each outer round runs backtracking normalized subgradient descent on
//   lambda * (f(x') - y')^2 + d(x, x')
// warm-started from the previous x', then multiplies lambda by
// lambda_growth. Stops as soon as |f(x') - y'| <= tolerance. Running out of
// iterations is reported through `converged`, not thrown.
WachterResult wachter_counterfactual(const Predictor& model, std::span<const double> x,
                                     const WachterConfig& config, const MadScale& scale);

nlohmann::json wachter_config_to_json(const WachterConfig& config);
nlohmann::json wachter_result_to_json(const WachterResult& result);

}  // namespace face
