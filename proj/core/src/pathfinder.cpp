#include "face/pathfinder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>

#include "face/error.hpp"

namespace face {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

void validate(const FaceQuery& query, std::size_t n_nodes, std::size_t num_classes) {
    if (query.source >= n_nodes)
        throw Error("source index " + std::to_string(query.source) + " is not a node (N = " +
                    std::to_string(n_nodes) + ")");
    if (query.target_class >= num_classes)
        throw Error("target class " + std::to_string(query.target_class) + " outside [0, " +
                    std::to_string(num_classes) + ")");
    if (!(query.t_p >= 0.0 && query.t_p <= 1.0)) throw Error("t_p must lie in [0, 1]");
    if (!(query.t_d >= 0.0)) throw Error("t_d must be nonnegative");
    if (query.num_paths < 1) throw Error("num_paths must be at least 1");
}

std::vector<std::size_t> candidate_targets(const Dataset& data, const Predictor& model,
                                           const KdeModel& density, const FaceQuery& query) {
    validate(query, data.size(), std::max(data.num_classes(), model.num_classes()));
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (i == query.source) continue;
        const auto p = predict_proba(model, data.row(i));
        if (p[query.target_class] < query.t_p) continue;
        if (density.estimate(data.row(i)) < query.t_d) continue;
        out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> ShortestPathTree::path_to(std::size_t v) const {
    std::vector<std::size_t> path;
    if (!reachable(v)) return path;
    for (std::size_t u = v; u != kNoPredecessor; u = predecessor[u]) path.push_back(u);
    std::reverse(path.begin(), path.end());
    return path;
}

ShortestPathTree dijkstra(const FaceGraph& graph, std::size_t source) {
    const std::size_t n = graph.node_count();
    if (source >= n) throw Error("source " + std::to_string(source) + " is not in the graph");
    ShortestPathTree tree{std::vector<double>(n, kInf), std::vector<std::size_t>(n, kNoPredecessor),
                          source};
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    tree.distance[source] = 0.0;
    heap.emplace(0.0, source);
    while (!heap.empty()) {
        const auto [d, u] = heap.top();
        heap.pop();
        if (d > tree.distance[u]) continue;  // stale entry
        for (const auto& arc : graph.arcs_from(u)) {
            const double nd = d + arc.weight;
            if (nd < tree.distance[arc.to]) {
                tree.distance[arc.to] = nd;
                tree.predecessor[arc.to] = u;
                heap.emplace(nd, arc.to);
            }
        }
    }
    return tree;
}

std::vector<PathResult> shortest_paths(const FaceGraph& graph, std::size_t source,
                                       std::span<const std::size_t> targets,
                                       std::size_t num_paths) {
    const auto tree = dijkstra(graph, source);
    std::vector<std::pair<double, std::size_t>> reached;
    for (auto t : targets) {
        if (t >= graph.node_count()) throw Error("target " + std::to_string(t) + " is not in the graph");
        if (t != source && tree.reachable(t)) reached.emplace_back(tree.distance[t], t);
    }
    std::sort(reached.begin(), reached.end());
    reached.erase(std::unique(reached.begin(), reached.end()), reached.end());
    if (reached.size() > num_paths) reached.resize(num_paths);

    std::vector<PathResult> out;
    out.reserve(reached.size());
    for (const auto& [dist, t] : reached) {
        PathResult r;
        r.nodes = tree.path_to(t);
        double total = 0.0;
        for (std::size_t h = 1; h < r.nodes.size(); ++h) {
            const double w = *graph.arc_weight(r.nodes[h - 1], r.nodes[h]);
            r.edge_weights.push_back(w);
            total += w;
        }
        r.total_f_distance = total;
        out.push_back(std::move(r));
    }
    return out;
}

std::string to_string(Outcome outcome) {
    switch (outcome) {
        case Outcome::found: return "found";
        case Outcome::no_candidates: return "no_candidates";
        case Outcome::none_reachable: return "none_reachable";
    }
    return "unknown";
}

Explanation explain(const Dataset& data, const Predictor& model, const KdeModel& density,
                    const FaceGraph& graph, const FaceQuery& query) {
    if (graph.node_count() != data.size() || graph.fingerprint() != data.fingerprint())
        throw Error("graph was not built from this dataset");
    Explanation ex;
    ex.candidates = candidate_targets(data, model, density, query);
    if (ex.candidates.empty()) {
        ex.outcome = Outcome::no_candidates;
        return ex;
    }
    ex.paths = shortest_paths(graph, query.source, ex.candidates, query.num_paths);
    if (ex.paths.empty()) {
        ex.outcome = Outcome::none_reachable;
        return ex;
    }
    for (auto& p : ex.paths) {
        const auto x = data.row(p.endpoint());
        p.target_density = density.estimate(x);
        p.target_confidence = predict_proba(model, x)[query.target_class];
    }
    ex.outcome = Outcome::found;
    return ex;
}

AttachedInstance attach_instance(const Dataset& data, const FaceGraph& graph,
                                 std::span<const double> x, const KdeModel& density,
                                 const Conditions& conditions, int label) {
    if (x.size() != data.dim())
        throw Error("dimension mismatch: data has " + std::to_string(data.dim()) +
                    " features, instance has " + std::to_string(x.size()));
    if (graph.node_count() != data.size() || graph.fingerprint() != data.fingerprint())
        throw Error("graph was not built from this dataset");
    conditions.validate(data.dim());

    const auto& config = graph.config();
    const std::size_t n = data.size();
    const std::size_t node = n;
    Dataset augmented = data.with_row(x, label);

    std::vector<bool> linked(n, true);
    if (config.mode == GraphMode::knn) {
        std::fill(linked.begin(), linked.end(), false);
        std::vector<std::pair<double, std::size_t>> order;
        for (std::size_t j = 0; j < n; ++j)
            order.emplace_back(distance(config.metric, x, data.row(j)), j);
        std::sort(order.begin(), order.end());
        for (std::size_t r = 0; r < std::min(config.k, n); ++r) linked[order[r].second] = true;

        // x enters i's list when it beats i's current k-th neighbour. It carries
        // the highest index, so it loses ties.
        std::vector<double> row_dist;
        for (std::size_t i = 0; i < n; ++i) {
            if (linked[i]) continue;
            row_dist.clear();
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) row_dist.push_back(distance(config.metric, data.row(i), data.row(j)));
            std::nth_element(row_dist.begin(),
                             row_dist.begin() + static_cast<std::ptrdiff_t>(config.k - 1),
                             row_dist.end());
            if (distance(config.metric, data.row(i), x) < row_dist[config.k - 1]) linked[i] = true;
        }
    }

    std::vector<std::vector<Arc>> adjacency = graph.adjacency();
    adjacency.emplace_back();
    for (std::size_t i = 0; i < n; ++i) {
        if (!linked[i]) continue;
        const auto w = pair_weight(config, density, n, data.row(i), x);
        if (!w) continue;
        if (conditions.allows(data.row(i), x)) adjacency[i].push_back({node, *w});
        if (conditions.allows(x, data.row(i))) adjacency[node].push_back({i, *w});
    }
    FaceGraph g(std::move(adjacency), config, graph.bandwidth(), augmented.fingerprint());
    return {std::move(augmented), std::move(g), node};
}

nlohmann::json query_to_json(const FaceQuery& q) {
    return {{"source", q.source},
            {"target_class", q.target_class},
            {"t_p", q.t_p},
            {"t_d", q.t_d},
            {"num_paths", q.num_paths}};
}

nlohmann::json path_to_json(const PathResult& p, const Dataset& data) {
    auto coords = nlohmann::json::array();
    for (auto v : p.nodes) {
        auto row = data.row(v);
        coords.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return {{"nodes", p.nodes},
            {"coordinates", std::move(coords)},
            {"edge_weights", p.edge_weights},
            {"total_f_distance", p.total_f_distance},
            {"target_density", number_or_null(p.target_density)},
            {"target_confidence", number_or_null(p.target_confidence)}};
}

nlohmann::json explanation_to_json(const Explanation& ex, const Dataset& data) {
    auto paths = nlohmann::json::array();
    for (std::size_t r = 0; r < ex.paths.size(); ++r) {
        auto p = path_to_json(ex.paths[r], data);
        p["rank"] = r + 1;
        paths.push_back(std::move(p));
    }
    nlohmann::json doc{{"status", ex.outcome == Outcome::found ? "found" : "no_counterfactual"},
                       {"reason", ex.outcome == Outcome::found ? nlohmann::json(nullptr)
                                                               : nlohmann::json(to_string(ex.outcome))},
                       {"candidate_count", ex.candidates.size()},
                       {"paths", std::move(paths)}};
    return doc;
}

void write_plot_csv(const Explanation& ex, const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write plot data: " + path.string());
    out << "path_id,hop";
    for (const auto& n : data.feature_names()) out << ',' << n;
    out << '\n';
    for (std::size_t r = 0; r < ex.paths.size(); ++r) {
        const auto& nodes = ex.paths[r].nodes;
        for (std::size_t h = 0; h < nodes.size(); ++h) {
            out << r + 1 << ',' << h;
            for (double v : data.row(nodes[h])) out << ',' << format_double(v);
            out << '\n';
        }
    }
    if (!out) throw Error("write failed: " + path.string());
}

}  // namespace face
