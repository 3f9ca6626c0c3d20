#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "face/dataset.hpp"
#include "face/density.hpp"

namespace face {

enum class GraphMode { kde, knn, egraph };
enum class Metric { euclidean, l1 };

std::string to_string(GraphMode mode);
std::string to_string(Metric metric);
GraphMode parse_graph_mode(const std::string& name);
Metric parse_metric(const std::string& name);

struct GraphConfig {
    GraphMode mode = GraphMode::kde;
    double epsilon = 0.5;
    std::size_t k = 5;  // knn only
    WeightFunction weight;
    Metric metric = Metric::euclidean;
};

// Throws if epsilon <= 0, or for knn if k is not in [1, n_nodes).
void validate(const GraphConfig& config, std::size_t n_nodes);

double distance(Metric metric, std::span<const double> a, std::span<const double> b);

// Weight of the edge between a and b under the construction rules, or
// nullopt when the pair is not connected (too far apart, zero density under
// the weight function, non-finite cost). `n_nodes` and the dimension feed the
// knn radius k / (N * eta_d). Does not apply the knn neighbour test.
std::optional<double> pair_weight(const GraphConfig& config, const KdeModel& density,
                                  std::size_t n_nodes, std::span<const double> a,
                                  std::span<const double> b);

// Per-feature feasibility rule for a move from x_i to x_j.
struct Rule {
    enum class Kind { immutable, monotone_increase, monotone_decrease, max_step };
    Kind kind;
    std::size_t feature;
    double param = 0.0;  // max_step only
};

std::string to_string(Rule::Kind kind);

// Pairwise predicate c(from, to). Directional rules make the graph directed.
class Conditions {
public:
    using Predicate = std::function<bool(std::span<const double>, std::span<const double>)>;

    Conditions() = default;
    explicit Conditions(std::vector<Rule> rules, Predicate custom = {});

    bool allows(std::span<const double> from, std::span<const double> to) const;
    bool empty() const { return rules_.empty() && !custom_; }
    void validate(std::size_t dim) const;

    const std::vector<Rule>& rules() const { return rules_; }
    bool has_custom() const { return static_cast<bool>(custom_); }

private:
    std::vector<Rule> rules_;
    Predicate custom_;
};

// Rule records {type, feature, param}; `feature` is an index or a name
// looked up in feature_names.
Conditions conditions_from_json(const nlohmann::json& doc,
                                std::span<const std::string> feature_names);
nlohmann::json conditions_to_json(const Conditions& conditions);
Conditions load_conditions(const std::filesystem::path& path,
                           std::span<const std::string> feature_names);

struct Arc {
    std::size_t to;
    double weight;

    bool operator==(const Arc&) const = default;
};

// Directed arcs over dataset row indices. Undirected constructions store
// both directions with the same weight.
class FaceGraph {
public:
    FaceGraph(std::vector<std::vector<Arc>> adjacency, GraphConfig config, double bandwidth,
              std::string fingerprint);

    std::size_t node_count() const { return adjacency_.size(); }
    std::span<const Arc> arcs_from(std::size_t i) const { return adjacency_.at(i); }
    std::optional<double> arc_weight(std::size_t from, std::size_t to) const;
    bool has_arc(std::size_t from, std::size_t to) const { return arc_weight(from, to).has_value(); }

    std::size_t arc_count() const;
    // Unordered pairs joined by at least one arc.
    std::size_t edge_count() const;
    // True when every arc has a reverse arc of identical weight.
    bool is_symmetric() const;

    const GraphConfig& config() const { return config_; }
    double bandwidth() const { return bandwidth_; }
    const std::string& fingerprint() const { return fingerprint_; }
    const std::vector<std::vector<Arc>>& adjacency() const { return adjacency_; }

private:
    std::vector<std::vector<Arc>> adjacency_;
    GraphConfig config_;
    double bandwidth_;
    std::string fingerprint_;
};

// All pairs with distance <= epsilon (and, for knn, a k-nearest relation in
// either direction) whose move passes `conditions` in that direction.
FaceGraph build_graph(const Dataset& data, const GraphConfig& config, const KdeModel& density,
                      const Conditions& conditions = {});

// Drops every arc whose move fails `conditions`. Never adds arcs.
FaceGraph apply_conditions(const FaceGraph& graph, const Dataset& data,
                           const Conditions& conditions);

struct GraphStats {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::size_t arcs = 0;
    bool directed = false;
    std::size_t components = 0;
    std::vector<std::size_t> component_sizes;  // descending
    std::optional<double> weight_min;
    std::optional<double> weight_mean;
    std::optional<double> weight_max;
};

// Components are weakly connected (arc direction ignored).
GraphStats graph_stats(const FaceGraph& graph);
nlohmann::json stats_to_json(const GraphStats& stats);

nlohmann::json config_to_json(const GraphConfig& config);
GraphConfig config_from_json(const nlohmann::json& doc);

nlohmann::json graph_to_json(const FaceGraph& graph, const Dataset& data,
                             const Conditions& conditions = {});
// Rejects documents whose dataset fingerprint does not match `data`.
FaceGraph graph_from_json(const nlohmann::json& doc, const Dataset& data);

}  // namespace face
