#pragma once

// The seed-0 toy problem shared by integration-style tests: data, trained
// network, KDE and the explained source row.

#include <cstddef>

#include "face/dataset.hpp"
#include "face/density.hpp"
#include "face/predictor.hpp"

namespace face::testing {

struct ToyProblem {
    Dataset data;
    Mlp model;
    double train_accuracy;
    KdeModel kde;
    std::size_t source;
};

// Class-0 row nearest the centre of the vertical cloud.
inline std::size_t toy_source(const Dataset& data) {
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.label(i) != 0) continue;
        const double dx = data.at(i, 0) - 0.0;
        const double dy = data.at(i, 1) - 5.0;
        if (dx * dx + dy * dy < best_d) {
            best_d = dx * dx + dy * dy;
            best = i;
        }
    }
    return best;
}

inline const ToyProblem& toy_problem() {
    static const ToyProblem problem = [] {
        Dataset data = generate_toy(ToySpec{});
        auto trained = train_mlp(data, TrainConfig{});
        KdeModel kde = fit_kde(data);
        const std::size_t source = toy_source(data);
        return ToyProblem{std::move(data), std::move(trained.model), trained.report.accuracy,
                          std::move(kde), source};
    }();
    return problem;
}

}  // namespace face::testing
