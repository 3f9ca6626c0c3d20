#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "face/error.hpp"
#include "face/graph.hpp"
#include "oracles.hpp"
#include "scratch_dir.hpp"

using namespace face;
namespace ft = face::testing;

namespace {

using PairSet = std::set<std::pair<std::size_t, std::size_t>>;

PairSet arc_set(const FaceGraph& g) {
    PairSet s;
    for (std::size_t i = 0; i < g.node_count(); ++i)
        for (const auto& a : g.arcs_from(i)) s.emplace(i, a.to);
    return s;
}

bool subset(const PairSet& a, const PairSet& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

Dataset random_points(std::mt19937_64& rng, std::size_t n, std::size_t d, double scale = 1.0) {
    std::uniform_real_distribution<double> u(0.0, scale);
    std::vector<double> f(n * d);
    for (auto& v : f) v = u(rng);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2);
    return Dataset(std::move(f), n, d, std::move(labels), 2);
}

// Single reference point at the midpoint with bandwidth 1/sqrt(pi): the 2-d
// Gaussian kernel there evaluates to 1 / (2 pi h^2) = 0.5.
KdeModel half_density_at(double x, double y) {
    return KdeModel({x, y}, 2, 1.0 / std::sqrt(std::numbers::pi));
}

}  // namespace

TEST_CASE("edge-weight hand examples") {
    const std::vector<double> a{0.0, 0.0}, b{0.3, 0.0}, c{0.2, 0.0};

    GraphConfig kde{.mode = GraphMode::kde, .epsilon = 0.5};
    const KdeModel half = half_density_at(0.15, 0.0);
    const auto w_kde = pair_weight(kde, half, 100, a, b);
    REQUIRE(w_kde);
    CHECK(std::abs(*w_kde - 0.3 * std::log(2.0)) <= 1e-9);
    CHECK(std::abs(*w_kde - 0.2079441541679836) <= 1e-9);

    GraphConfig knn{.mode = GraphMode::knn, .epsilon = 0.5, .k = 5};
    const auto w_knn = pair_weight(knn, half, 100, a, c);
    REQUIRE(w_knn);
    CHECK(std::abs(*w_knn - ft::knn_edge_weight(0.2, 5, 100, std::numbers::pi)) <= 1e-9);
    CHECK(std::abs(*w_knn - 0.5062048493938581) <= 1e-9);

    GraphConfig eg{.mode = GraphMode::egraph, .epsilon = 0.5};
    const auto w_eg = pair_weight(eg, half, 100, a, c);
    REQUIRE(w_eg);
    CHECK(*w_eg == 0.0);
    CHECK(0.2 * -std::log(1.25) == doctest::Approx(-0.04462871026284196));
    GraphConfig eg_floor = eg;
    eg_floor.weight.floor = 0.1;
    CHECK(*pair_weight(eg_floor, half, 100, a, c) == doctest::Approx(0.02));
}

TEST_CASE("epsilon threshold boundary") {
    const KdeModel kde({0.0, 0.0}, 2, 1.0);
    const std::vector<double> a{0.0, 0.0}, b{0.5, 0.0};
    GraphConfig exact{.mode = GraphMode::kde, .epsilon = 0.5};
    CHECK(pair_weight(exact, kde, 10, a, b).has_value());
    GraphConfig below{.mode = GraphMode::kde, .epsilon = 0.5 - 1e-9};
    CHECK_FALSE(pair_weight(below, kde, 10, a, b).has_value());
    for (auto mode : {GraphMode::knn, GraphMode::egraph}) {
        GraphConfig c{.mode = mode, .epsilon = 0.5 - 1e-9};
        CHECK_FALSE(pair_weight(c, kde, 10, a, b).has_value());
    }
}

TEST_CASE("coincident points join with weight zero") {
    Dataset d({1, 1, 1, 1, 5, 5}, 3, 2, {0, 1, 0}, 2);
    const KdeModel kde = fit_kde(d, 1.0);
    for (auto mode : {GraphMode::kde, GraphMode::knn, GraphMode::egraph}) {
        GraphConfig c{.mode = mode, .epsilon = 1.0, .k = 1};
        auto g = build_graph(d, c, kde);
        REQUIRE(g.arc_weight(0, 1).has_value());
        CHECK(*g.arc_weight(0, 1) == 0.0);
        CHECK_FALSE(g.has_arc(0, 2));
    }
}

TEST_CASE("zero density removes the edge") {
    // Reference point far away: the midpoint density underflows to 0.
    const KdeModel kde({1e6, 1e6}, 2, 0.01);
    const std::vector<double> a{0.0, 0.0}, b{0.1, 0.0};
    for (auto kind : {WeightKind::neg_log, WeightKind::identity, WeightKind::inverse}) {
        GraphConfig c{.mode = GraphMode::kde, .epsilon = 1.0, .weight = {kind}};
        CHECK_FALSE(pair_weight(c, kde, 2, a, b).has_value());
    }
}

TEST_CASE("metric choice") {
    const std::vector<double> a{0.0, 0.0}, b{3.0, 4.0};
    CHECK(distance(Metric::euclidean, a, b) == 5.0);
    CHECK(distance(Metric::l1, a, b) == 7.0);
    CHECK(parse_metric("l1") == Metric::l1);
    CHECK(parse_metric(to_string(Metric::euclidean)) == Metric::euclidean);
    CHECK_THROWS_AS(parse_metric("cosine"), Error);
    CHECK(parse_graph_mode("egraph") == GraphMode::egraph);
    CHECK_THROWS_AS(parse_graph_mode("full"), Error);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(validate(GraphConfig{.epsilon = 0.0}, 10), Error);
    CHECK_THROWS_AS(validate(GraphConfig{.epsilon = INFINITY}, 10), Error);
    CHECK_THROWS_AS(validate(GraphConfig{.mode = GraphMode::knn, .k = 0}, 10), Error);
    CHECK_THROWS_AS(validate(GraphConfig{.mode = GraphMode::knn, .k = 10}, 10), Error);
    CHECK_NOTHROW(validate(GraphConfig{.mode = GraphMode::knn, .k = 9}, 10));
    GraphConfig neg;
    neg.weight.floor = -1.0;
    CHECK_THROWS_AS(validate(neg, 10), Error);
}

TEST_CASE("FaceGraph rejects malformed adjacency") {
    CHECK_THROWS_AS(FaceGraph({{{0, 1.0}}, {}}, {}, 1.0, "x"), Error);
    CHECK_THROWS_AS(FaceGraph({{{1, -1.0}}, {}}, {}, 1.0, "x"), Error);
    CHECK_THROWS_AS(FaceGraph({{{1, NAN}}, {}}, {}, 1.0, "x"), Error);
    CHECK_THROWS_AS(FaceGraph({{{1, 1.0}, {1, 2.0}}, {}}, {}, 1.0, "x"), Error);
    CHECK_THROWS_AS(FaceGraph({{{5, 1.0}}, {}}, {}, 1.0, "x"), Error);
    FaceGraph g({{{2, 1.0}, {1, 0.5}}, {}, {}}, {}, 1.0, "x");
    CHECK(g.arcs_from(0)[0].to == 1);
    CHECK(*g.arc_weight(0, 2) == 1.0);
    CHECK(g.arc_count() == 2);
    CHECK(g.edge_count() == 2);
    CHECK_FALSE(g.is_symmetric());
}

TEST_CASE("knn graph matches a brute-force neighbour oracle") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 8 + trial % 13;
        Dataset d = random_points(rng, n, 2);
        const KdeModel kde = fit_kde(d, 0.3);
        GraphConfig c{.mode = GraphMode::knn, .epsilon = 0.45, .k = static_cast<std::size_t>(1 + trial % 4)};
        auto g = build_graph(d, c, kde);
        CHECK(g.is_symmetric());
        std::vector<std::set<std::size_t>> nn(n);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<std::pair<double, std::size_t>> all;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double dx = d.at(i, 0) - d.at(j, 0), dy = d.at(i, 1) - d.at(j, 1);
                all.emplace_back(std::sqrt(dx * dx + dy * dy), j);
            }
            std::sort(all.begin(), all.end());
            for (std::size_t r = 0; r < c.k; ++r) nn[i].insert(all[r].second);
        }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double dx = d.at(i, 0) - d.at(j, 0), dy = d.at(i, 1) - d.at(j, 1);
                const double len = std::sqrt(dx * dx + dy * dy);
                const bool want = len <= c.epsilon && (nn[i].count(j) || nn[j].count(i));
                CHECK(g.has_arc(i, j) == want);
                if (want) {
                    const double expected = ft::knn_edge_weight(len, static_cast<double>(c.k),
                                                                static_cast<double>(n), std::numbers::pi);
                    CHECK(std::abs(*g.arc_weight(i, j) - expected) <= 1e-12);
                }
            }
    }
}

TEST_CASE("kde graph weights match the formula") {
    std::mt19937_64 rng(8);
    Dataset d = random_points(rng, 30, 2);
    const KdeModel kde = fit_kde(d, 0.2);
    auto g = build_graph(d, GraphConfig{.mode = GraphMode::kde, .epsilon = 0.3}, kde);
    std::size_t checked = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
        for (const auto& a : g.arcs_from(i)) {
            const std::vector<double> mid{(d.at(i, 0) + d.at(a.to, 0)) / 2, (d.at(i, 1) + d.at(a.to, 1)) / 2};
            // density at the midpoint straight from the kernel sum
            double s = 0.0;
            for (std::size_t r = 0; r < d.size(); ++r) {
                const double dx = mid[0] - d.at(r, 0), dy = mid[1] - d.at(r, 1);
                s += std::exp(-(dx * dx + dy * dy) / (2 * 0.04));
            }
            const double p = s / (30.0 * 0.04 * 2 * std::numbers::pi);
            const double len = std::hypot(d.at(i, 0) - d.at(a.to, 0), d.at(i, 1) - d.at(a.to, 1));
            CHECK(std::abs(a.weight - ft::kde_edge_weight(len, p)) <= 1e-12);
            ++checked;
        }
    CHECK(checked > 0);
}

TEST_CASE("property: edge sets grow with epsilon") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ue(0.05, 0.6);
    for (int trial = 0; trial < 60; ++trial) {
        Dataset d = random_points(rng, 25, 2);
        const KdeModel kde = fit_kde(d);
        double e1 = ue(rng), e2 = ue(rng);
        if (e1 > e2) std::swap(e1, e2);
        for (auto mode : {GraphMode::kde, GraphMode::egraph}) {
            auto g1 = build_graph(d, GraphConfig{.mode = mode, .epsilon = e1}, kde);
            auto g2 = build_graph(d, GraphConfig{.mode = mode, .epsilon = e2}, kde);
            CHECK(subset(arc_set(g1), arc_set(g2)));
        }
    }
}

TEST_CASE("property: weights are nonnegative and finite") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ue(0.05, 1.5);
    const WeightKind kinds[] = {WeightKind::neg_log, WeightKind::identity, WeightKind::inverse};
    const GraphMode modes[] = {GraphMode::kde, GraphMode::knn, GraphMode::egraph};
    for (int trial = 0; trial < 60; ++trial) {
        Dataset d = random_points(rng, 20, 1 + trial % 3, 2.0);
        const KdeModel kde = fit_kde(d);
        GraphConfig c{.mode = modes[trial % 3], .epsilon = ue(rng), .k = 3,
                      .weight = {kinds[(trial / 3) % 3]},
                      .metric = trial % 2 ? Metric::l1 : Metric::euclidean};
        auto g = build_graph(d, c, kde);
        for (std::size_t i = 0; i < g.node_count(); ++i)
            for (const auto& a : g.arcs_from(i)) {
                CHECK(a.weight >= 0.0);
                CHECK(std::isfinite(a.weight));
            }
        CHECK(g.is_symmetric());
    }
}

TEST_CASE("property: conditions only remove arcs") {
    std::mt19937_64 rng(5150);
    std::uniform_int_distribution<int> kind(0, 3);
    std::uniform_real_distribution<double> step(0.0, 0.3);
    for (int trial = 0; trial < 60; ++trial) {
        Dataset d = random_points(rng, 20, 3);
        const KdeModel kde = fit_kde(d);
        GraphConfig c{.mode = trial % 2 ? GraphMode::egraph : GraphMode::kde, .epsilon = 0.5};
        std::vector<Rule> rules;
        const int nrules = 1 + trial % 3;
        for (int r = 0; r < nrules; ++r)
            rules.push_back({static_cast<Rule::Kind>(kind(rng)), static_cast<std::size_t>(r), step(rng)});
        const Conditions cond(rules);

        auto base = build_graph(d, c, kde);
        auto filtered = apply_conditions(base, d, cond);
        auto direct = build_graph(d, c, kde, cond);
        CHECK(subset(arc_set(filtered), arc_set(base)));
        CHECK(filtered.adjacency() == direct.adjacency());
        for (std::size_t i = 0; i < d.size(); ++i)
            for (const auto& a : filtered.arcs_from(i)) {
                CHECK(*base.arc_weight(i, a.to) == a.weight);
                CHECK(cond.allows(d.row(i), d.row(a.to)));
            }
        for (std::size_t i = 0; i < d.size(); ++i)
            for (const auto& a : base.arcs_from(i))
                if (cond.allows(d.row(i), d.row(a.to))) CHECK(filtered.has_arc(i, a.to));
    }
}

TEST_CASE("immutable feature removes exactly the differing pairs") {
    // feature 0 takes two values, so some edges keep it fixed
    Dataset d({0, 0, 0, 0.2, 0.1, 0, 0.1, 0.2, 0, 0.4}, 5, 2, {0, 1, 0, 1, 0}, 2);
    const KdeModel kde = fit_kde(d, 0.5);
    auto g = build_graph(d, GraphConfig{.epsilon = 1.0}, kde);
    auto h = apply_conditions(g, d, Conditions({{Rule::Kind::immutable, 0}}));
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            if (i == j) continue;
            CHECK(g.has_arc(i, j));
            CHECK(h.has_arc(i, j) == (d.at(i, 0) == d.at(j, 0)));
        }
    CHECK(h.is_symmetric());
    CHECK(apply_conditions(g, d, Conditions{}).adjacency() == g.adjacency());
}

TEST_CASE("monotone rule makes the graph directed") {
    Dataset d({0, 1, 0.2, 2, 0.4, 3}, 3, 2, {0, 1, 0}, 2);
    const KdeModel kde = fit_kde(d, 0.5);
    auto g = build_graph(d, GraphConfig{.epsilon = 5.0}, kde);
    auto inc = apply_conditions(g, d, Conditions({{Rule::Kind::monotone_increase, 1}}));
    CHECK(inc.has_arc(0, 1));
    CHECK_FALSE(inc.has_arc(1, 0));
    CHECK(inc.has_arc(0, 2));
    CHECK_FALSE(inc.is_symmetric());
    CHECK(graph_stats(inc).directed);
    auto dec = apply_conditions(g, d, Conditions({{Rule::Kind::monotone_decrease, 1}}));
    CHECK(dec.has_arc(2, 0));
    CHECK_FALSE(dec.has_arc(0, 2));
    auto step = apply_conditions(g, d, Conditions({{Rule::Kind::max_step, 1, 1.5}}));
    CHECK(step.has_arc(0, 1));
    CHECK_FALSE(step.has_arc(0, 2));

    auto custom = apply_conditions(
        g, d, Conditions({}, [](std::span<const double> a, std::span<const double> b) { return b[0] > a[0]; }));
    CHECK(custom.arc_count() == 3);
}

TEST_CASE("conditions JSON") {
    const std::vector<std::string> names{"age", "income"};
    auto c = conditions_from_json(nlohmann::json::parse(R"([
        {"type": "immutable", "feature": "age"},
        {"type": "max_step", "feature": 1, "param": 2.5}])"), names);
    REQUIRE(c.rules().size() == 2);
    CHECK(c.rules()[0].kind == Rule::Kind::immutable);
    CHECK(c.rules()[0].feature == 0);
    CHECK(c.rules()[1].param == 2.5);
    auto again = conditions_from_json(conditions_to_json(c), names);
    CHECK(conditions_to_json(again) == conditions_to_json(c));
    auto wrapped = conditions_from_json(nlohmann::json{{"rules", conditions_to_json(c)}}, names);
    CHECK(wrapped.rules().size() == 2);

    CHECK_THROWS_AS(conditions_from_json(nlohmann::json::parse(R"([{"type":"immutable","feature":"height"}])"), names), Error);
    CHECK_THROWS_AS(conditions_from_json(nlohmann::json::parse(R"([{"type":"frozen","feature":0}])"), names), Error);
    CHECK_THROWS_AS(conditions_from_json(nlohmann::json::parse(R"([{"type":"max_step","feature":0}])"), names), Error);
    CHECK_THROWS_AS(Conditions({{Rule::Kind::immutable, 5}}).validate(2), Error);

    auto path = ft::write_text("cond.json", R"([{"type": "monotone_increase", "feature": "income"}])");
    CHECK(load_conditions(path, names).rules()[0].feature == 1);
    CHECK_THROWS_AS(load_conditions(ft::write_text("cond_bad.json", "{not json"), names), Error);
    CHECK_THROWS_AS(load_conditions(ft::scratch_dir() / "missing.json", names), Error);

    Dataset d({0, 0, 1, 1}, 2, 2, {0, 1}, 2);
    CHECK_THROWS_AS(build_graph(d, GraphConfig{}, fit_kde(d, 1.0), Conditions({{Rule::Kind::immutable, 2}})), Error);
}

TEST_CASE("graph_stats counting") {
    FaceGraph empty(std::vector<std::vector<Arc>>(6), {}, 1.0, "x");
    auto s = graph_stats(empty);
    CHECK(s.components == 6);
    CHECK(s.edges == 0);
    CHECK_FALSE(s.weight_min.has_value());
    CHECK(stats_to_json(s)["weight_min"].is_null());

    std::vector<std::vector<Arc>> k4(4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            if (i != j) k4[i].push_back({j, static_cast<double>(i + j)});
    auto sk = graph_stats(FaceGraph(k4, {}, 1.0, "x"));
    CHECK(sk.components == 1);
    CHECK(sk.edges == 6);
    CHECK(sk.arcs == 12);
    CHECK_FALSE(sk.directed);
    CHECK(*sk.weight_min == 1.0);
    CHECK(*sk.weight_max == 5.0);
    CHECK(*sk.weight_mean == doctest::Approx(3.0));

    // one-way arcs still join a weak component
    FaceGraph chain({{{1, 1.0}}, {}, {{1, 1.0}}, {}}, {}, 1.0, "x");
    auto sc = graph_stats(chain);
    CHECK(sc.components == 2);
    CHECK(sc.component_sizes == std::vector<std::size_t>{3, 1});
    CHECK(sc.directed);
}

TEST_CASE("toy graph statistics are frozen") {
    Dataset d = generate_toy(ToySpec{});
    const KdeModel kde = fit_kde(d);
    auto g = build_graph(d, GraphConfig{.mode = GraphMode::kde, .epsilon = 0.5}, kde);
    auto s = graph_stats(g);
    CHECK(s.nodes == 500);
    CHECK(s.edges == 2877);
    CHECK(s.arcs == 5754);
    CHECK(s.components == 12);
    REQUIRE(s.component_sizes.size() == 12);
    CHECK(s.component_sizes[0] == 220);
    CHECK(s.component_sizes[1] == 173);
    CHECK(s.component_sizes[2] == 95);
    CHECK(s.component_sizes[3] == 4);
}

TEST_CASE("graph JSON round trip") {
    std::mt19937_64 rng(4);
    Dataset d = random_points(rng, 15, 2);
    const KdeModel kde = fit_kde(d);
    GraphConfig c{.mode = GraphMode::knn, .epsilon = 0.7, .k = 3, .weight = {WeightKind::inverse, 0.1},
                  .metric = Metric::l1};
    auto g = build_graph(d, c, kde);
    const auto doc = nlohmann::json::parse(graph_to_json(g, d).dump());
    auto back = graph_from_json(doc, d);
    CHECK(back.adjacency() == g.adjacency());
    CHECK(back.bandwidth() == g.bandwidth());
    CHECK(config_to_json(back.config()) == config_to_json(c));
    CHECK(back.fingerprint() == d.fingerprint());

    Dataset other = random_points(rng, 15, 2);
    CHECK_THROWS_AS(graph_from_json(doc, other), Error);
    CHECK_THROWS_AS(apply_conditions(g, other, Conditions{}), Error);
    auto wrong = doc;
    wrong["format"] = "x";
    CHECK_THROWS_AS(graph_from_json(wrong, d), Error);
}
