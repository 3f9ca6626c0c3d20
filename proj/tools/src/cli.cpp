#include "cli.hpp"

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "face/baseline.hpp"
#include "face/dataset.hpp"
#include "face/density.hpp"
#include "face/error.hpp"
#include "face/graph.hpp"
#include "face/pathfinder.hpp"
#include "face/predictor.hpp"

namespace face::cli {

namespace {

using nlohmann::json;

struct Common {
    std::string out;
    bool verbose = false;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
    auto* o = cmd->add_option("--out,-o", c.out, "Output file");
    if (out_required) o->required();
    cmd->add_flag("--verbose,-v", c.verbose, "Print progress to stderr");
    cmd->add_option("--seed", c.seed, "Random seed (recorded in the output)");
}

std::string hash_text(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json read_json(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw Error(std::string("cannot open ") + what + " file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error(std::string("malformed ") + what + " file " + path + ": " + e.what());
    }
}

void write_json(const std::string& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write output file: " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw Error("write failed: " + path);
}

LabelColumn label_column(const std::string& spec) {
    if (!spec.empty() && spec.find_first_not_of("0123456789") == std::string::npos)
        return static_cast<std::size_t>(std::stoull(spec));
    return spec;
}

json dataset_echo(const Dataset& data) {
    return {{"rows", data.size()}, {"features", data.dim()}, {"hash", data.fingerprint()}};
}

std::optional<double> parse_bandwidth(const std::string& s) {
    if (s == "auto") return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error("bandwidth must be a positive number or 'auto', got '" + s + "'");
    }
}

// Model document plus the predictor it describes.
struct LoadedModel {
    std::unique_ptr<Predictor> model;
    json echo;
};

LoadedModel load_model(const std::string& model_path, const std::string& proba_path,
                       const Dataset& data) {
    if (!model_path.empty() && !proba_path.empty())
        throw Error("give either --model or --proba, not both");
    if (!proba_path.empty()) {
        auto table = std::make_unique<TablePredictor>(load_probability_table(data, proba_path));
        std::ifstream in(proba_path);
        std::stringstream ss;
        ss << in.rdbuf();
        return {std::move(table), {{"kind", "probability_table"}, {"hash", hash_text(ss.str())}}};
    }
    if (model_path.empty()) throw Error("a model is required (--model or --proba)");
    const json doc = read_json(model_path, "model");
    auto mlp = std::make_unique<Mlp>(mlp_from_json(doc));
    json echo{{"kind", "mlp"},
              {"layer_sizes", mlp->layer_sizes()},
              {"hash", hash_text(mlp_to_json(*mlp).dump())}};
    if (mlp->input_dim() != data.dim())
        throw Error("model expects " + std::to_string(mlp->input_dim()) + " features, data has " +
                    std::to_string(data.dim()));
    return {std::move(mlp), std::move(echo)};
}

// ---------------------------------------------------------------------------

struct ToyArgs {
    Common common;
    ToySpec spec;
};

int cmd_generate_toy(const ToyArgs& a, std::ostream& out) {
    ToySpec spec = a.spec;
    spec.seed = a.common.seed;
    const Dataset data = generate_toy(spec);
    save_csv(data, a.common.out);
    out << "wrote " << data.size() << " rows (" << spec.n_blue << " class 0, "
        << spec.n_red_bottom + spec.n_red_cluster << " class 1) to " << a.common.out << '\n';
    return 0;
}

struct TrainArgs {
    Common common;
    std::string data;
    std::string label = "label";
    TrainConfig config;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    const auto loaded = load_csv(a.data, label_column(a.label));
    TrainConfig cfg = a.config;
    cfg.seed = a.common.seed;
    if (a.common.verbose)
        err << "training " << loaded.data.dim() << "-10-10-" << loaded.data.num_classes()
            << " network on " << loaded.data.size() << " rows for " << cfg.epochs << " epochs\n";
    const auto trained = train_mlp(loaded.data, cfg);

    json doc = mlp_to_json(trained.model);
    doc["metadata"] = {{"seed", cfg.seed},
                       {"epochs", cfg.epochs},
                       {"learning_rate", cfg.learning_rate},
                       {"init_std", cfg.init_std},
                       {"hidden", cfg.hidden},
                       {"training_accuracy", trained.report.accuracy},
                       {"final_loss", trained.report.final_loss},
                       {"dataset", dataset_echo(loaded.data)},
                       {"feature_names", loaded.data.feature_names()},
                       {"label_values", loaded.label_values}};
    write_json(a.common.out, doc);
    out << "training accuracy " << format_double(trained.report.accuracy) << ", loss "
        << format_double(trained.report.final_loss) << "; model written to " << a.common.out
        << '\n';
    return 0;
}

struct GraphArgs {
    Common common;
    std::string data;
    std::string label = "label";
    std::string mode = "kde";
    double epsilon = 0.5;
    std::size_t k = 5;
    std::string bandwidth = "auto";
    std::string weight = "neg_log";
    double floor = 0.0;
    std::string metric = "euclidean";
    std::string conditions;
};

int cmd_build_graph(const GraphArgs& a, std::ostream& out, std::ostream& err) {
    const auto loaded = load_csv(a.data, label_column(a.label));
    const Dataset& data = loaded.data;
    GraphConfig cfg;
    cfg.mode = parse_graph_mode(a.mode);
    cfg.epsilon = a.epsilon;
    cfg.k = a.k;
    cfg.weight.kind = parse_weight_kind(a.weight);
    if (cfg.weight.kind == WeightKind::custom)
        throw Error("custom weight functions are only available through the library");
    cfg.weight.floor = a.floor;
    cfg.metric = parse_metric(a.metric);
    const Conditions cond =
        a.conditions.empty() ? Conditions{} : load_conditions(a.conditions, data.feature_names());

    const KdeModel kde = fit_kde(data, parse_bandwidth(a.bandwidth));
    if (a.common.verbose)
        err << "building " << a.mode << " graph over " << data.size() << " points, epsilon "
            << format_double(cfg.epsilon) << ", bandwidth " << format_double(kde.bandwidth())
            << '\n';
    const FaceGraph graph = build_graph(data, cfg, kde, cond);
    const GraphStats stats = graph_stats(graph);

    json doc = graph_to_json(graph, data, cond);
    doc["stats"] = stats_to_json(stats);
    doc["seed"] = a.common.seed;
    write_json(a.common.out, doc);
    out << stats_to_json(stats).dump(2) << '\n';
    return 0;
}

struct ExplainArgs {
    Common common;
    std::string data;
    std::string label = "label";
    std::string model;
    std::string proba;
    std::string graph;
    std::string conditions;
    std::string plot_data;
    FaceQuery query;
};

int cmd_explain(const ExplainArgs& a, std::ostream& out, std::ostream& err) {
    const auto loaded = load_csv(a.data, label_column(a.label));
    const Dataset& data = loaded.data;
    const auto model = load_model(a.model, a.proba, data);
    FaceGraph graph = graph_from_json(read_json(a.graph, "graph"), data);
    const KdeModel kde = fit_kde(data, graph.bandwidth());

    Conditions cond;
    if (!a.conditions.empty()) {
        cond = load_conditions(a.conditions, data.feature_names());
        graph = apply_conditions(graph, data, cond);
    }
    if (a.common.verbose)
        err << "explaining row " << a.query.source << " towards class " << a.query.target_class
            << " on " << graph.arc_count() << " arcs\n";

    const Explanation ex = explain(data, *model.model, kde, graph, a.query);

    json graph_echo = config_to_json(graph.config());
    graph_echo["bandwidth"] = graph.bandwidth();
    json doc = explanation_to_json(ex, data);
    doc["command"] = "explain";
    doc["config"] = {{"query", query_to_json(a.query)},
                     {"graph", graph_echo},
                     {"conditions", conditions_to_json(cond)},
                     {"dataset", dataset_echo(data)},
                     {"model", model.echo},
                     {"seed", a.common.seed}};
    auto src = data.row(a.query.source);
    doc["source"] = {{"index", a.query.source},
                     {"x", std::vector<double>(src.begin(), src.end())},
                     {"density", kde.estimate(src)},
                     {"confidence", predict_proba(*model.model, src)[a.query.target_class]}};
    write_json(a.common.out, doc);
    if (!a.plot_data.empty()) write_plot_csv(ex, data, a.plot_data);

    if (ex.outcome == Outcome::found) {
        const auto& best = ex.paths.front();
        out << "found " << ex.paths.size() << " path(s); counterfactual row " << best.endpoint()
            << " at f-distance " << format_double(best.total_f_distance) << " (density "
            << format_double(best.target_density) << ", confidence "
            << format_double(best.target_confidence) << ")\n";
    } else {
        out << "no feasible counterfactual: " << to_string(ex.outcome) << " ("
            << ex.candidates.size() << " candidate targets)\n";
    }
    return 0;
}

struct BaselineArgs {
    Common common;
    std::string data;
    std::string label = "label";
    std::string model;
    std::size_t source = 0;
    std::optional<double> target_value;
    std::string distance = "mad_l1";
    std::string bandwidth = "auto";
    std::string against;
    WachterConfig config;
};

int cmd_baseline(const BaselineArgs& a, std::ostream& out, std::ostream& err) {
    const auto loaded = load_csv(a.data, label_column(a.label));
    const Dataset& data = loaded.data;
    const auto model = load_model(a.model, "", data);
    if (a.source >= data.size())
        throw Error("source index " + std::to_string(a.source) + " out of range");

    WachterConfig cfg = a.config;
    cfg.target_value = a.target_value.value_or(0.5 + cfg.tolerance);
    if (a.distance == "mad_l1")
        cfg.distance = BaselineDistance::mad_l1;
    else if (a.distance == "l2")
        cfg.distance = BaselineDistance::l2;
    else
        throw Error("unknown baseline distance '" + a.distance + "' (expected mad_l1 or l2)");

    json face_doc;
    std::optional<double> bandwidth = parse_bandwidth(a.bandwidth);
    if (!a.against.empty()) {
        face_doc = read_json(a.against, "explanation");
        if (face_doc.at("config").at("dataset").at("hash").get<std::string>() != data.fingerprint())
            throw Error("explanation file was produced from a different dataset");
        if (face_doc.at("config").at("query").at("source").get<std::size_t>() != a.source)
            throw Error("explanation file explains a different source row");
        bandwidth = face_doc.at("config").at("graph").at("bandwidth").get<double>();
    }
    const KdeModel kde = fit_kde(data, bandwidth);
    const MadScale mad = compute_mad(data);
    if (a.common.verbose)
        err << "running Wachter search from row " << a.source << " towards class "
            << cfg.target_class << " (y' = " << format_double(cfg.target_value) << ")\n";

    const auto res = wachter_counterfactual(*model.model, data.row(a.source), cfg, mad);
    const double density = kde.estimate(res.counterfactual);
    const double confidence = predict_proba(*model.model, res.counterfactual)[cfg.target_class];

    auto src = data.row(a.source);
    json doc{{"command", "baseline"},
             {"config",
              {{"wachter", wachter_config_to_json(cfg)},
               {"mad", mad.values},
               {"bandwidth", kde.bandwidth()},
               {"dataset", dataset_echo(data)},
               {"model", model.echo},
               {"seed", a.common.seed}}},
             {"source",
              {{"index", a.source},
               {"x", std::vector<double>(src.begin(), src.end())},
               {"density", kde.estimate(src)}}},
             {"result", wachter_result_to_json(res)},
             {"counterfactual", res.counterfactual},
             {"density", density},
             {"confidence", confidence}};

    out << (res.converged ? "converged" : "not converged") << ": x' = [";
    for (std::size_t k = 0; k < res.counterfactual.size(); ++k)
        out << (k ? ", " : "") << format_double(res.counterfactual[k]);
    out << "], density " << format_double(density) << ", confidence " << format_double(confidence)
        << '\n';

    if (!a.against.empty()) {
        json cmp{{"face_status", face_doc.at("status")}};
        if (face_doc.at("status") == "found") {
            const auto& best = face_doc.at("paths").at(0);
            const double face_density = best.at("target_density").get<double>();
            cmp["face_endpoint"] = best.at("nodes").back();
            cmp["face_endpoint_density"] = face_density;
            cmp["baseline_density"] = density;
            cmp["baseline_less_dense"] = density < face_density;
            out << "density at FACE counterfactual " << format_double(face_density)
                << " vs baseline " << format_double(density) << ": baseline is "
                << (density < face_density ? "less" : "not less") << " dense\n";
        } else {
            out << "FACE found no counterfactual; nothing to compare\n";
        }
        doc["comparison"] = std::move(cmp);
    }
    write_json(a.common.out, doc);
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Feasible and actionable counterfactual explanations via density-weighted "
                 "shortest paths"};
    app.name("face");
    app.require_subcommand(1);

    ToyArgs toy;
    auto* c_toy = app.add_subcommand("generate-toy", "Write the three-cloud toy dataset as CSV");
    add_common(c_toy, toy.common);
    c_toy->add_option("--n-blue", toy.spec.n_blue, "Points in the class-0 vertical cloud");
    c_toy->add_option("--n-red-bottom", toy.spec.n_red_bottom,
                      "Points in the class-1 horizontal cloud");
    c_toy->add_option("--n-red-cluster", toy.spec.n_red_cluster,
                      "Points in the class-1 cluster at (3.5, 8.0)");

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "Train the 2x10 ReLU network on a CSV dataset");
    add_common(c_train, train.common);
    c_train->add_option("--data,-d", train.data, "Dataset CSV")->required();
    c_train->add_option("--label-column", train.label, "Label column name or index");
    c_train->add_option("--learning-rate", train.config.learning_rate);
    c_train->add_option("--epochs", train.config.epochs);
    c_train->add_option("--init-std", train.config.init_std);

    GraphArgs graph;
    auto* c_graph = app.add_subcommand("build-graph", "Build the density-weighted graph");
    add_common(c_graph, graph.common);
    c_graph->add_option("--data,-d", graph.data, "Dataset CSV")->required();
    c_graph->add_option("--label-column", graph.label, "Label column name or index");
    c_graph->add_option("--mode", graph.mode, "kde, knn or egraph");
    c_graph->add_option("--epsilon", graph.epsilon, "Distance threshold");
    c_graph->add_option("--k", graph.k, "Neighbours (knn mode)");
    c_graph->add_option("--bandwidth", graph.bandwidth, "KDE bandwidth or 'auto'");
    c_graph->add_option("--weight", graph.weight, "neg_log, identity or inverse");
    c_graph->add_option("--floor", graph.floor, "Lower clamp for the weight function");
    c_graph->add_option("--metric", graph.metric, "euclidean or l1");
    c_graph->add_option("--conditions", graph.conditions, "Conditions JSON file");

    ExplainArgs ex;
    auto* c_ex = app.add_subcommand("explain", "Find counterfactual paths for one row");
    add_common(c_ex, ex.common);
    c_ex->add_option("--data,-d", ex.data, "Dataset CSV")->required();
    c_ex->add_option("--label-column", ex.label, "Label column name or index");
    c_ex->add_option("--model,-m", ex.model, "Model JSON from `train`");
    c_ex->add_option("--proba", ex.proba, "CSV of per-row class probabilities instead of a model");
    c_ex->add_option("--graph,-g", ex.graph, "Graph JSON from `build-graph`")->required();
    c_ex->add_option("--conditions", ex.conditions, "Extra conditions; removes arcs");
    c_ex->add_option("--source", ex.query.source, "Row index to explain")->required();
    c_ex->add_option("--target-class", ex.query.target_class);
    c_ex->add_option("--t-p", ex.query.t_p, "Prediction threshold");
    c_ex->add_option("--t-d", ex.query.t_d, "Density threshold");
    c_ex->add_option("--num-paths", ex.query.num_paths);
    c_ex->add_option("--plot-data", ex.plot_data, "Write path polylines as CSV");

    BaselineArgs base;
    auto* c_base = app.add_subcommand("baseline", "Wachter-style gradient counterfactual");
    add_common(c_base, base.common);
    c_base->add_option("--data,-d", base.data, "Dataset CSV")->required();
    c_base->add_option("--label-column", base.label, "Label column name or index");
    c_base->add_option("--model,-m", base.model, "Model JSON from `train`")->required();
    c_base->add_option("--source", base.source, "Row index to explain")->required();
    c_base->add_option("--target-class", base.config.target_class);
    c_base->add_option("--tolerance", base.config.tolerance);
    c_base->add_option("--target-value", base.target_value, "y' (default 0.5 + tolerance)");
    c_base->add_option("--lambda-init", base.config.lambda_init);
    c_base->add_option("--lambda-growth", base.config.lambda_growth);
    c_base->add_option("--max-outer", base.config.max_outer_iters);
    c_base->add_option("--max-inner", base.config.max_inner_iters);
    c_base->add_option("--step-size", base.config.step_size);
    c_base->add_option("--distance", base.distance, "mad_l1 or l2");
    c_base->add_option("--bandwidth", base.bandwidth, "KDE bandwidth or 'auto'");
    c_base->add_option("--against", base.against, "Explanation JSON to compare densities with");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (c_toy->parsed()) return cmd_generate_toy(toy, out);
        if (c_train->parsed()) return cmd_train(train, out, err);
        if (c_graph->parsed()) return cmd_build_graph(graph, out, err);
        if (c_ex->parsed()) return cmd_explain(ex, out, err);
        if (c_base->parsed()) return cmd_baseline(base, out, err);
    } catch (const std::exception& e) {
        err << "face: error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace face::cli
