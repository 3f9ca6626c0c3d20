#include <benchmark/benchmark.h>

#include <vector>

#include "face/dataset.hpp"
#include "face/density.hpp"

namespace {

void BM_KdeEstimate(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const face::Dataset data = face::generate_toy(face::ToySpec{.n_blue = n, .n_red_bottom = n, .n_red_cluster = n});
    const face::KdeModel kde = face::fit_kde(data);
    const std::vector<double> x{1.0, 4.0};
    for (auto _ : state) benchmark::DoNotOptimize(kde.estimate(x));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(kde.size()));
}
BENCHMARK(BM_KdeEstimate)->Arg(100)->Arg(1000)->Arg(10000);

}  // namespace
