#include "face/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "face/error.hpp"

namespace face {

std::string to_string(GraphMode mode) {
    switch (mode) {
        case GraphMode::kde: return "kde";
        case GraphMode::knn: return "knn";
        case GraphMode::egraph: return "egraph";
    }
    return "unknown";
}

std::string to_string(Metric metric) {
    return metric == Metric::euclidean ? "euclidean" : "l1";
}

GraphMode parse_graph_mode(const std::string& name) {
    if (name == "kde") return GraphMode::kde;
    if (name == "knn") return GraphMode::knn;
    if (name == "egraph") return GraphMode::egraph;
    throw Error("unknown graph mode '" + name + "' (expected kde, knn or egraph)");
}

Metric parse_metric(const std::string& name) {
    if (name == "euclidean" || name == "l2") return Metric::euclidean;
    if (name == "l1") return Metric::l1;
    throw Error("unknown distance metric '" + name + "' (expected euclidean or l1)");
}

void validate(const GraphConfig& config, std::size_t n_nodes) {
    if (!(config.epsilon > 0.0) || !std::isfinite(config.epsilon))
        throw Error("epsilon must be positive and finite");
    if (config.weight.floor < 0.0) throw Error("weight floor must be nonnegative");
    if (config.mode == GraphMode::knn && (config.k < 1 || config.k >= n_nodes))
        throw Error("knn mode needs 1 <= k < N (k = " + std::to_string(config.k) +
                    ", N = " + std::to_string(n_nodes) + ")");
}

double distance(Metric metric, std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    if (metric == Metric::euclidean) {
        for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
        return std::sqrt(s);
    }
    for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(a[k] - b[k]);
    return s;
}

std::optional<double> pair_weight(const GraphConfig& config, const KdeModel& density,
                                  std::size_t n_nodes, std::span<const double> a,
                                  std::span<const double> b) {
    const double dist = distance(config.metric, a, b);
    if (dist > config.epsilon) return std::nullopt;
    if (dist == 0.0) return 0.0;

    const auto d = a.size();
    double z = 0.0;
    switch (config.mode) {
        case GraphMode::kde: {
            std::vector<double> mid(d);
            for (std::size_t k = 0; k < d; ++k) mid[k] = 0.5 * (a[k] + b[k]);
            z = density.estimate(mid);
            break;
        }
        case GraphMode::knn: {
            const double r = static_cast<double>(config.k) /
                             (static_cast<double>(n_nodes) * volume_unit_ball(static_cast<int>(d)));
            z = r / dist;
            break;
        }
        case GraphMode::egraph:
            z = std::pow(config.epsilon, static_cast<double>(d)) / dist;
            break;
    }
    // Zero density is an infinitely expensive move.
    if (!(z > 0.0)) return std::nullopt;
    const double w = config.weight(z) * dist;
    if (!std::isfinite(w)) return std::nullopt;
    return w;
}

std::string to_string(Rule::Kind kind) {
    switch (kind) {
        case Rule::Kind::immutable: return "immutable";
        case Rule::Kind::monotone_increase: return "monotone_increase";
        case Rule::Kind::monotone_decrease: return "monotone_decrease";
        case Rule::Kind::max_step: return "max_step";
    }
    return "unknown";
}

Conditions::Conditions(std::vector<Rule> rules, Predicate custom)
    : rules_(std::move(rules)), custom_(std::move(custom)) {
    for (const auto& r : rules_)
        if (r.kind == Rule::Kind::max_step && !(r.param >= 0.0))
            throw Error("max_step rule needs a nonnegative step");
}

bool Conditions::allows(std::span<const double> from, std::span<const double> to) const {
    for (const auto& r : rules_) {
        const double a = from[r.feature];
        const double b = to[r.feature];
        switch (r.kind) {
            case Rule::Kind::immutable:
                if (b != a) return false;
                break;
            case Rule::Kind::monotone_increase:
                if (b < a) return false;
                break;
            case Rule::Kind::monotone_decrease:
                if (b > a) return false;
                break;
            case Rule::Kind::max_step:
                if (std::abs(b - a) > r.param) return false;
                break;
        }
    }
    return !custom_ || custom_(from, to);
}

void Conditions::validate(std::size_t dim) const {
    for (const auto& r : rules_)
        if (r.feature >= dim)
            throw Error(to_string(r.kind) + " rule references unknown feature " +
                        std::to_string(r.feature) + " (data has " + std::to_string(dim) +
                        " features)");
}

Conditions conditions_from_json(const nlohmann::json& doc,
                                std::span<const std::string> feature_names) {
    const auto& list = doc.is_object() ? doc.at("rules") : doc;
    if (!list.is_array()) throw Error("conditions document must be a list of rule records");
    std::vector<Rule> rules;
    for (const auto& rec : list) {
        const std::string type = rec.at("type").get<std::string>();
        Rule r{};
        if (type == "immutable")
            r.kind = Rule::Kind::immutable;
        else if (type == "monotone_increase")
            r.kind = Rule::Kind::monotone_increase;
        else if (type == "monotone_decrease")
            r.kind = Rule::Kind::monotone_decrease;
        else if (type == "max_step")
            r.kind = Rule::Kind::max_step;
        else
            throw Error("unknown condition type '" + type + "'");

        const auto& f = rec.at("feature");
        if (f.is_string()) {
            const auto name = f.get<std::string>();
            auto it = std::find(feature_names.begin(), feature_names.end(), name);
            if (it == feature_names.end())
                throw Error(type + " rule references unknown feature '" + name + "'");
            r.feature = static_cast<std::size_t>(it - feature_names.begin());
        } else if (f.is_number_integer() && f.get<long long>() >= 0) {
            r.feature = f.get<std::size_t>();
        } else {
            throw Error(type + " rule has an invalid feature reference");
        }
        if (r.kind == Rule::Kind::max_step) {
            if (!rec.contains("param") || !rec.at("param").is_number())
                throw Error("max_step rule needs a numeric param");
            r.param = rec.at("param").get<double>();
        }
        rules.push_back(r);
    }
    Conditions c(std::move(rules));
    c.validate(feature_names.size());
    return c;
}

nlohmann::json conditions_to_json(const Conditions& conditions) {
    auto list = nlohmann::json::array();
    for (const auto& r : conditions.rules()) {
        nlohmann::json rec{{"type", to_string(r.kind)}, {"feature", r.feature}};
        if (r.kind == Rule::Kind::max_step) rec["param"] = r.param;
        list.push_back(std::move(rec));
    }
    return list;
}

Conditions load_conditions(const std::filesystem::path& path,
                           std::span<const std::string> feature_names) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open conditions file: " + path.string());
    try {
        return conditions_from_json(nlohmann::json::parse(in), feature_names);
    } catch (const nlohmann::json::exception& e) {
        throw Error("malformed conditions file " + path.string() + ": " + e.what());
    }
}

FaceGraph::FaceGraph(std::vector<std::vector<Arc>> adjacency, GraphConfig config,
                     double bandwidth, std::string fingerprint)
    : adjacency_(std::move(adjacency)),
      config_(std::move(config)),
      bandwidth_(bandwidth),
      fingerprint_(std::move(fingerprint)) {
    const std::size_t n = adjacency_.size();
    for (std::size_t i = 0; i < n; ++i) {
        auto& arcs = adjacency_[i];
        std::sort(arcs.begin(), arcs.end(), [](const Arc& a, const Arc& b) { return a.to < b.to; });
        for (std::size_t a = 0; a < arcs.size(); ++a) {
            if (arcs[a].to >= n) throw Error("arc target out of range");
            if (arcs[a].to == i) throw Error("self-loop at node " + std::to_string(i));
            if (!(arcs[a].weight >= 0.0) || !std::isfinite(arcs[a].weight))
                throw Error("arc weight must be finite and nonnegative");
            if (a > 0 && arcs[a].to == arcs[a - 1].to) throw Error("duplicate arc");
        }
    }
}

std::optional<double> FaceGraph::arc_weight(std::size_t from, std::size_t to) const {
    const auto& arcs = adjacency_.at(from);
    auto it = std::lower_bound(arcs.begin(), arcs.end(), to,
                               [](const Arc& a, std::size_t t) { return a.to < t; });
    if (it == arcs.end() || it->to != to) return std::nullopt;
    return it->weight;
}

std::size_t FaceGraph::arc_count() const {
    std::size_t n = 0;
    for (const auto& arcs : adjacency_) n += arcs.size();
    return n;
}

std::size_t FaceGraph::edge_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < adjacency_.size(); ++i)
        for (const auto& a : adjacency_[i])
            if (i < a.to || !has_arc(a.to, i)) ++n;
    return n;
}

bool FaceGraph::is_symmetric() const {
    for (std::size_t i = 0; i < adjacency_.size(); ++i)
        for (const auto& a : adjacency_[i]) {
            auto back = arc_weight(a.to, i);
            if (!back || *back != a.weight) return false;
        }
    return true;
}

FaceGraph build_graph(const Dataset& data, const GraphConfig& config, const KdeModel& density,
                      const Conditions& conditions) {
    const std::size_t n = data.size();
    validate(config, n);
    conditions.validate(data.dim());
    if (density.dim() != data.dim()) throw Error("density model dimension does not match data");

    // knn: union of the k-nearest relations, ties broken by lower index.
    std::vector<std::vector<bool>> knn;
    if (config.mode == GraphMode::knn) {
        knn.assign(n, std::vector<bool>(n, false));
        std::vector<std::pair<double, std::size_t>> order;
        for (std::size_t i = 0; i < n; ++i) {
            order.clear();
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) order.emplace_back(distance(config.metric, data.row(i), data.row(j)), j);
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(config.k),
                              order.end());
            for (std::size_t r = 0; r < config.k; ++r) {
                knn[i][order[r].second] = true;
                knn[order[r].second][i] = true;
            }
        }
    }

    std::vector<std::vector<Arc>> adjacency(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!knn.empty() && !knn[i][j]) continue;
            const auto w = pair_weight(config, density, n, data.row(i), data.row(j));
            if (!w) continue;
            if (conditions.allows(data.row(i), data.row(j))) adjacency[i].push_back({j, *w});
            if (conditions.allows(data.row(j), data.row(i))) adjacency[j].push_back({i, *w});
        }
    }
    return FaceGraph(std::move(adjacency), config, density.bandwidth(), data.fingerprint());
}

FaceGraph apply_conditions(const FaceGraph& graph, const Dataset& data,
                           const Conditions& conditions) {
    if (graph.fingerprint() != data.fingerprint() || graph.node_count() != data.size())
        throw Error("graph was not built from this dataset");
    conditions.validate(data.dim());
    std::vector<std::vector<Arc>> adjacency(graph.node_count());
    for (std::size_t i = 0; i < graph.node_count(); ++i)
        for (const auto& a : graph.arcs_from(i))
            if (conditions.allows(data.row(i), data.row(a.to))) adjacency[i].push_back(a);
    return FaceGraph(std::move(adjacency), graph.config(), graph.bandwidth(), graph.fingerprint());
}

GraphStats graph_stats(const FaceGraph& graph) {
    GraphStats s;
    s.nodes = graph.node_count();
    s.edges = graph.edge_count();
    s.arcs = graph.arc_count();
    s.directed = !graph.is_symmetric();

    std::vector<std::size_t> parent(s.nodes);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    double sum = 0.0;
    for (std::size_t i = 0; i < s.nodes; ++i) {
        for (const auto& a : graph.arcs_from(i)) {
            const auto ri = find(i);
            const auto rj = find(a.to);
            if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
            s.weight_min = s.weight_min ? std::min(*s.weight_min, a.weight) : a.weight;
            s.weight_max = s.weight_max ? std::max(*s.weight_max, a.weight) : a.weight;
            sum += a.weight;
        }
    }
    if (s.arcs > 0) s.weight_mean = sum / static_cast<double>(s.arcs);

    std::vector<std::size_t> size(s.nodes, 0);
    for (std::size_t i = 0; i < s.nodes; ++i) ++size[find(i)];
    for (auto c : size)
        if (c > 0) s.component_sizes.push_back(c);
    std::sort(s.component_sizes.begin(), s.component_sizes.end(), std::greater<>());
    s.components = s.component_sizes.size();
    return s;
}

nlohmann::json stats_to_json(const GraphStats& s) {
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    return {{"nodes", s.nodes},
            {"edges", s.edges},
            {"arcs", s.arcs},
            {"directed", s.directed},
            {"components", s.components},
            {"component_sizes", s.component_sizes},
            {"weight_min", opt(s.weight_min)},
            {"weight_mean", opt(s.weight_mean)},
            {"weight_max", opt(s.weight_max)}};
}

nlohmann::json config_to_json(const GraphConfig& c) {
    return {{"mode", to_string(c.mode)},
            {"epsilon", c.epsilon},
            {"k", c.k},
            {"weight", {{"kind", to_string(c.weight.kind)}, {"floor", c.weight.floor}}},
            {"metric", to_string(c.metric)}};
}

GraphConfig config_from_json(const nlohmann::json& doc) {
    GraphConfig c;
    c.mode = parse_graph_mode(doc.at("mode").get<std::string>());
    c.epsilon = doc.at("epsilon").get<double>();
    c.k = doc.at("k").get<std::size_t>();
    c.weight.kind = parse_weight_kind(doc.at("weight").at("kind").get<std::string>());
    c.weight.floor = doc.at("weight").at("floor").get<double>();
    c.metric = parse_metric(doc.at("metric").get<std::string>());
    return c;
}

nlohmann::json graph_to_json(const FaceGraph& graph, const Dataset& data,
                             const Conditions& conditions) {
    if (graph.fingerprint() != data.fingerprint())
        throw Error("graph was not built from this dataset");
    auto arcs = nlohmann::json::array();
    for (std::size_t i = 0; i < graph.node_count(); ++i)
        for (const auto& a : graph.arcs_from(i)) arcs.push_back({i, a.to, a.weight});
    return {{"format", "face-graph"},
            {"version", 1},
            {"config", config_to_json(graph.config())},
            {"bandwidth", graph.bandwidth()},
            {"conditions", conditions_to_json(conditions)},
            {"dataset", {{"rows", data.size()}, {"hash", data.fingerprint()}}},
            {"n_nodes", graph.node_count()},
            {"arcs", std::move(arcs)}};
}

FaceGraph graph_from_json(const nlohmann::json& doc, const Dataset& data) {
    try {
        if (doc.value("format", std::string()) != "face-graph")
            throw Error("not a face-graph document");
        const auto rows = doc.at("dataset").at("rows").get<std::size_t>();
        const auto hash = doc.at("dataset").at("hash").get<std::string>();
        if (rows != data.size() || hash != data.fingerprint())
            throw Error("graph fingerprint (" + std::to_string(rows) + " rows, " + hash +
                        ") does not match the dataset (" + std::to_string(data.size()) +
                        " rows, " + data.fingerprint() + ")");
        const auto n = doc.at("n_nodes").get<std::size_t>();
        if (n != data.size()) throw Error("graph node count does not match the dataset");
        std::vector<std::vector<Arc>> adjacency(n);
        for (const auto& a : doc.at("arcs")) {
            const auto i = a.at(0).get<std::size_t>();
            const auto j = a.at(1).get<std::size_t>();
            if (i >= n || j >= n) throw Error("arc endpoint out of range");
            adjacency[i].push_back({j, a.at(2).get<double>()});
        }
        return FaceGraph(std::move(adjacency), config_from_json(doc.at("config")),
                         doc.at("bandwidth").get<double>(), hash);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed graph document: ") + e.what());
    }
}

}  // namespace face
