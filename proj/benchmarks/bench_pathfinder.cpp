#include <benchmark/benchmark.h>

#include "face/dataset.hpp"
#include "face/density.hpp"
#include "face/graph.hpp"
#include "face/pathfinder.hpp"

namespace {

void BM_Dijkstra(benchmark::State& state) {
    const face::Dataset data = face::generate_toy(face::ToySpec{});
    const face::KdeModel kde = face::fit_kde(data);
    const auto graph = face::build_graph(data, face::GraphConfig{.epsilon = state.range(0) / 100.0}, kde);
    for (auto _ : state) {
        auto tree = face::dijkstra(graph, 0);
        benchmark::DoNotOptimize(tree.distance.data());
    }
    state.counters["arcs"] = static_cast<double>(graph.arc_count());
}
BENCHMARK(BM_Dijkstra)->Arg(50)->Arg(100)->Arg(200)->Unit(benchmark::kMicrosecond);

}  // namespace
