#include <benchmark/benchmark.h>

#include "face/dataset.hpp"
#include "face/density.hpp"
#include "face/graph.hpp"

namespace {

void BM_BuildGraph(benchmark::State& state) {
    const auto mode = static_cast<face::GraphMode>(state.range(0));
    const face::Dataset data = face::generate_toy(face::ToySpec{});
    const face::KdeModel kde = face::fit_kde(data);
    face::GraphConfig config{.mode = mode, .epsilon = 0.5, .k = 5};
    for (auto _ : state) {
        auto g = face::build_graph(data, config, kde);
        benchmark::DoNotOptimize(g.arc_count());
    }
    state.SetLabel(face::to_string(mode));
}
BENCHMARK(BM_BuildGraph)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_BuildGraphSize(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const face::Dataset data = face::generate_toy(face::ToySpec{.n_blue = 2 * n / 5, .n_red_bottom = 2 * n / 5,
                                                                .n_red_cluster = n / 5});
    const face::KdeModel kde = face::fit_kde(data);
    for (auto _ : state) {
        auto g = face::build_graph(data, face::GraphConfig{}, kde);
        benchmark::DoNotOptimize(g.arc_count());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildGraphSize)->Arg(250)->Arg(500)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond)->Complexity();

}  // namespace
