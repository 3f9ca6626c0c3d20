#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "face/dataset.hpp"
#include "face/density.hpp"
#include "face/graph.hpp"
#include "face/predictor.hpp"

namespace face {

struct FaceQuery {
    std::size_t source = 0;
    std::size_t target_class = 1;
    double t_p = 0.75;   // minimum target-class probability at the endpoint
    double t_d = 0.001;  // minimum density at the endpoint
    std::size_t num_paths = 5;
};

void validate(const FaceQuery& query, std::size_t n_nodes, std::size_t num_classes);

struct PathResult {
    std::vector<std::size_t> nodes;  // source first
    std::vector<double> edge_weights;
    double total_f_distance = 0.0;   // edge_weights summed left to right
    double target_density = std::numeric_limits<double>::quiet_NaN();
    double target_confidence = std::numeric_limits<double>::quiet_NaN();

    std::size_t endpoint() const { return nodes.back(); }
};

// Nodes whose target-class probability is >= t_p and whose density is
// >= t_d, in index order. The source is never a candidate.
std::vector<std::size_t> candidate_targets(const Dataset& data, const Predictor& model,
                                           const KdeModel& density, const FaceQuery& query);

struct ShortestPathTree {
    std::vector<double> distance;  // +inf when unreachable
    std::vector<std::size_t> predecessor;
    std::size_t source;

    bool reachable(std::size_t v) const { return distance[v] != std::numeric_limits<double>::infinity(); }
    std::vector<std::size_t> path_to(std::size_t v) const;
};

inline constexpr std::size_t kNoPredecessor = std::numeric_limits<std::size_t>::max();

// Binary-heap Dijkstra with lazy deletion. Weights must be nonnegative.
ShortestPathTree dijkstra(const FaceGraph& graph, std::size_t source);

// The num_paths reachable targets closest to `source` (ties by lower index),
// one reconstructed path each. Endpoint metrics are left unset.
std::vector<PathResult> shortest_paths(const FaceGraph& graph, std::size_t source,
                                       std::span<const std::size_t> targets,
                                       std::size_t num_paths);

enum class Outcome { found, no_candidates, none_reachable };
std::string to_string(Outcome outcome);

struct Explanation {
    Outcome outcome = Outcome::found;
    std::vector<std::size_t> candidates;
    std::vector<PathResult> paths;  // ranked; empty unless found
};

Explanation explain(const Dataset& data, const Predictor& model, const KdeModel& density,
                    const FaceGraph& graph, const FaceQuery& query);

struct AttachedInstance {
    Dataset data;
    FaceGraph graph;
    std::size_t node;
};

// Adds x as a new last node, connected under the graph's own construction
// rules. Existing arcs are kept as they are; for knn the radius keeps the
// original N and x joins the neighbour lists it would displace into.
AttachedInstance attach_instance(const Dataset& data, const FaceGraph& graph,
                                 std::span<const double> x, const KdeModel& density,
                                 const Conditions& conditions = {}, int label = 0);

nlohmann::json query_to_json(const FaceQuery& query);
nlohmann::json path_to_json(const PathResult& path, const Dataset& data);
nlohmann::json explanation_to_json(const Explanation& explanation, const Dataset& data);

// One row per path vertex: path_id (the 1-based rank), hop, then the feature
// coordinates.
void write_plot_csv(const Explanation& explanation, const Dataset& data,
                    const std::filesystem::path& path);

}  // namespace face
