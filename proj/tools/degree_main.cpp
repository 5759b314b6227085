#include "degree/agglomerate.hpp"
#include "degree/dataset.hpp"
#include "degree/decompose.hpp"
#include "degree/errors.hpp"
#include "degree/eval.hpp"
#include "degree/json_io.hpp"
#include "degree/model.hpp"
#include "degree/train.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

constexpr const char* tool_version = "1.0.0";

/// Valid flags applied to the wrong mode; exits with the usage code.
struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int default_threads() {
    const char* env = std::getenv("DEGREE_THREADS");
    if (env == nullptr) return 1;
    try {
        return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
        throw usage_error("DEGREE_THREADS is not a number: " + std::string(env));
    }
}

/// Every artifact gets a sibling manifest naming the tool, the full
/// configuration and the seed, so a run can be reproduced from it alone.
void write_manifest(const std::string& artifact_path, const std::string& subcommand,
                    const nlohmann::json& config, const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["tool"] = "degree";
    j["version"] = tool_version;
    j["format"] = 1;
    j["subcommand"] = subcommand;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    degree::atomic_write_text(artifact_path + ".manifest.json", j.dump(2) + "\n");
}

degree::gat_mode parse_mode(const std::string& mode) {
    if (mode == "feature") return degree::gat_mode::feature;
    if (mode == "attention") return degree::gat_mode::attention;
    throw usage_error("unknown aggregation mode: " + mode);
}

int argmax(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Computation graph of one instance: the l-hop neighborhood of a node for
/// node tasks, the indexed graph for graph tasks.
struct instance_graph {
    degree::subgraph_result sub; // node task; sub.g is the computation graph
    const degree::graph* g = nullptr;
    int local_center = -1;
    std::vector<int> node_ids;
};

instance_graph instance_computation_graph(const degree::trained_model& m, const degree::dataset& ds,
                                          int index) {
    instance_graph out;
    if (ds.task == degree::task_kind::node_classification) {
        const degree::graph& g0 = ds.graphs[0];
        if (index < 0 || index >= g0.n)
            throw degree::validation_error("instance node " + std::to_string(index) +
                                           " outside [0, " + std::to_string(g0.n) + ")");
        out.sub = degree::khop_subgraph(g0, index, std::max(1, m.message_passing_layers()));
        out.g = &out.sub.g;
        out.local_center = out.sub.old_to_new[static_cast<std::size_t>(index)];
        out.node_ids = out.sub.new_to_old;
    } else {
        if (index < 0 || static_cast<std::size_t>(index) >= ds.graphs.size())
            throw degree::validation_error("graph index " + std::to_string(index) +
                                           " outside [0, " + std::to_string(ds.graphs.size()) + ")");
        out.g = &ds.graphs[static_cast<std::size_t>(index)];
        out.node_ids.resize(static_cast<std::size_t>(out.g->n));
        std::iota(out.node_ids.begin(), out.node_ids.end(), 0);
    }
    return out;
}

std::string scores_to_dot(const degree::graph& g, const std::vector<double>& scores,
                          const std::vector<int>& names, int center) {
    double max_abs = 0.0;
    for (double s : scores) max_abs = std::max(max_abs, std::abs(s));
    std::ostringstream dot;
    dot << "graph explanation {\n  node [style=filled, shape=circle];\n";
    for (int v = 0; v < g.n; ++v) {
        const double s = scores[static_cast<std::size_t>(v)];
        const double t = max_abs == 0.0 ? 0.0 : std::abs(s) / max_abs;
        // red for positive contributions, blue for negative
        const double hue = s >= 0.0 ? 0.0 : 0.6;
        std::ostringstream label;
        label.precision(3);
        label << names[static_cast<std::size_t>(v)] << "\\n" << s;
        dot << "  " << v << " [fillcolor=\"" << hue << " " << 0.15 + 0.75 * t
            << " 1.0\", label=\"" << label.str() << "\""
            << (v == center ? ", penwidth=3" : "") << "];\n";
    }
    for (const auto& [u, v] : g.edges) dot << "  " << u << " -- " << v << ";\n";
    dot << "}\n";
    return dot.str();
}

// ---------------------------------------------------------------- gen

struct gen_flags {
    std::string name;
    std::string out;
    std::uint64_t seed = 0;
    std::optional<int> base_nodes, motifs, feature_dim, tree_depth, n_graphs, graph_size, attach;
    std::optional<double> perturb, noise, shift, inter;
};

degree::dataset build_named_dataset(const gen_flags& f, degree::rng_stream& rng) {
    auto reject = [&](const char* flag, bool set) {
        if (set) throw usage_error(std::string(flag) + " does not apply to " + f.name);
    };
    if (f.name == "ba-shapes" || f.name == "ba-community") {
        reject("--tree-depth", f.tree_depth.has_value());
        reject("--graphs", f.n_graphs.has_value());
        reject("--graph-size", f.graph_size.has_value());
        reject("--noise-scale", f.noise.has_value());
        degree::ba_shapes_config cfg;
        if (f.base_nodes) cfg.base_nodes = *f.base_nodes;
        if (f.motifs) cfg.n_motifs = *f.motifs;
        if (f.feature_dim) cfg.feature_dim = *f.feature_dim;
        if (f.perturb) cfg.perturb_ratio = *f.perturb;
        if (f.attach) cfg.attach_edges = *f.attach;
        if (f.name == "ba-shapes") {
            reject("--feature-shift", f.shift.has_value());
            reject("--inter-ratio", f.inter.has_value());
            return degree::gen_ba_shapes(cfg, rng);
        }
        degree::ba_community_config cc;
        cc.community = cfg;
        if (f.shift) cc.feature_shift = *f.shift;
        if (f.inter) cc.inter_ratio = *f.inter;
        return degree::gen_ba_community(cc, rng);
    }
    if (f.name == "tree-cycles" || f.name == "tree-grid") {
        reject("--base-nodes", f.base_nodes.has_value());
        reject("--graphs", f.n_graphs.has_value());
        reject("--graph-size", f.graph_size.has_value());
        reject("--noise-scale", f.noise.has_value());
        reject("--feature-shift", f.shift.has_value());
        reject("--inter-ratio", f.inter.has_value());
        reject("--attach-edges", f.attach.has_value());
        if (f.name == "tree-cycles") {
            degree::tree_cycles_config cfg;
            if (f.tree_depth) cfg.depth = *f.tree_depth;
            if (f.motifs) cfg.n_motifs = *f.motifs;
            if (f.feature_dim) cfg.feature_dim = *f.feature_dim;
            if (f.perturb) cfg.perturb_ratio = *f.perturb;
            return degree::gen_tree_cycles(cfg, rng);
        }
        degree::tree_grid_config cfg;
        if (f.tree_depth) cfg.depth = *f.tree_depth;
        if (f.motifs) cfg.n_motifs = *f.motifs;
        if (f.feature_dim) cfg.feature_dim = *f.feature_dim;
        if (f.perturb) cfg.perturb_ratio = *f.perturb;
        return degree::gen_tree_grid(cfg, rng);
    }
    if (f.name == "special-node") {
        reject("--base-nodes", f.base_nodes.has_value());
        reject("--motifs", f.motifs.has_value());
        reject("--tree-depth", f.tree_depth.has_value());
        reject("--perturb", f.perturb.has_value());
        reject("--feature-shift", f.shift.has_value());
        reject("--inter-ratio", f.inter.has_value());
        degree::special_node_config cfg;
        if (f.n_graphs) cfg.n_graphs = *f.n_graphs;
        if (f.graph_size) cfg.nodes_per_graph = *f.graph_size;
        if (f.feature_dim) cfg.feature_dim = *f.feature_dim;
        if (f.noise) cfg.noise_scale = *f.noise;
        if (f.attach) cfg.attach_edges = *f.attach;
        return degree::gen_special_node(cfg, rng);
    }
    throw usage_error("unknown dataset: " + f.name);
}

nlohmann::json gen_config_json(const gen_flags& f) {
    nlohmann::json j;
    j["dataset"] = f.name;
    j["seed"] = f.seed;
    auto put = [&](const char* key, const auto& opt) {
        if (opt) j[key] = *opt;
    };
    put("base_nodes", f.base_nodes);
    put("motifs", f.motifs);
    put("feature_dim", f.feature_dim);
    put("tree_depth", f.tree_depth);
    put("graphs", f.n_graphs);
    put("graph_size", f.graph_size);
    put("attach_edges", f.attach);
    put("perturb", f.perturb);
    put("noise_scale", f.noise);
    put("feature_shift", f.shift);
    put("inter_ratio", f.inter);
    return j;
}

// ---------------------------------------------------------------- main

int run(int argc, char** argv) {
    CLI::App app{"DEGREE: explaining GNN predictions by feed-forward decomposition"};
    app.set_version_flag("--version", std::string("degree ") + tool_version);
    app.require_subcommand(1);

    gen_flags gf;
    CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
    gen->add_option("--dataset", gf.name,
                    "ba-shapes | ba-community | tree-cycles | tree-grid | special-node")
        ->required();
    gen->add_option("--seed", gf.seed, "RNG seed")->required();
    gen->add_option("--out", gf.out, "Output dataset JSON")->required();
    gen->add_option("--base-nodes", gf.base_nodes, "BA base graph size");
    gen->add_option("--motifs", gf.motifs, "Number of attached motifs");
    gen->add_option("--feature-dim", gf.feature_dim, "Node feature width");
    gen->add_option("--tree-depth", gf.tree_depth, "Binary tree depth");
    gen->add_option("--graphs", gf.n_graphs, "Graph count (special-node)");
    gen->add_option("--graph-size", gf.graph_size, "Nodes per graph (special-node)");
    gen->add_option("--attach-edges", gf.attach, "Preferential attachment edges per node");
    gen->add_option("--perturb", gf.perturb, "Random edge ratio");
    gen->add_option("--noise-scale", gf.noise, "Feature noise sigma (special-node)");
    gen->add_option("--feature-shift", gf.shift, "Community feature mean shift");
    gen->add_option("--inter-ratio", gf.inter, "Inter-community edge ratio");

    struct {
        std::string dataset, out, metrics, conv = "gcn";
        int depth = 3, hidden = 20, epochs = 1000;
        double lr = 0.005, leaky = 0.2;
        std::uint64_t seed = 0;
    } tf;
    CLI::App* train_cmd = app.add_subcommand("train", "Train a GCN or GAT on a dataset");
    train_cmd->add_option("--dataset", tf.dataset, "Dataset JSON")->required();
    train_cmd->add_option("--arch,--conv", tf.conv, "gcn | gat")
        ->check(CLI::IsMember({"gcn", "gat"}));
    train_cmd->add_option("--depth", tf.depth, "Message-passing layers");
    train_cmd->add_option("--hidden", tf.hidden, "Hidden width");
    train_cmd->add_option("--epochs", tf.epochs, "Training epochs");
    train_cmd->add_option("--lr", tf.lr, "Adam learning rate");
    train_cmd->add_option("--leaky-slope", tf.leaky, "GAT LeakyReLU slope");
    train_cmd->add_option("--seed", tf.seed, "RNG seed")->required();
    train_cmd->add_option("--out", tf.out, "Output model JSON")->required();
    train_cmd->add_option("--metrics", tf.metrics, "Optional training history JSON");

    struct {
        std::string model, dataset, out, dot, mode = "feature";
        int index = 0, cls = -1;
        std::vector<int> target;
    } xf;
    CLI::App* explain_cmd = app.add_subcommand("explain", "Score per-node contributions");
    explain_cmd->add_option("--model", xf.model, "Model JSON")->required();
    explain_cmd->add_option("--dataset", xf.dataset, "Dataset JSON")->required();
    explain_cmd->add_option("--index", xf.index, "Node id (node task) or graph index")->required();
    explain_cmd->add_option("--class", xf.cls, "Class to explain (default: prediction)");
    explain_cmd->add_option("--target", xf.target, "Report one group's contribution")
        ->delimiter(',');
    explain_cmd->add_option("--mode", xf.mode, "GAT split: feature | attention");
    explain_cmd->add_option("--json,--out", xf.out, "Output scores JSON")->required();
    explain_cmd->add_option("--dot", xf.dot, "Optional DOT rendering");

    struct {
        std::string model, dataset, json, dot, mode = "feature";
        int index = 0, cls = -1, budget = 0, walks = 10, walk_len = 8, hops = 0;
        double q = 0.6;
        bool top_fraction = false;
        std::uint64_t seed = 0;
    } af;
    CLI::App* agg_cmd = app.add_subcommand("agglomerate", "Grow subgraph explanations");
    agg_cmd->add_option("--model", af.model, "Model JSON")->required();
    agg_cmd->add_option("--dataset", af.dataset, "Dataset JSON")->required();
    agg_cmd->add_option("--index", af.index, "Node id (node task) or graph index")->required();
    agg_cmd->add_option("--class", af.cls, "Class to explain (default: prediction)");
    agg_cmd->add_option("--q", af.q, "Selection threshold in [0,1]");
    agg_cmd->add_option("--budget", af.budget, "Max merge steps (0: node count)");
    agg_cmd->add_flag("--top-fraction", af.top_fraction, "Select the top q fraction instead");
    agg_cmd->add_option("--walks", af.walks, "Context walks per score");
    agg_cmd->add_option("--walk-len", af.walk_len, "Steps per context walk");
    agg_cmd->add_option("--hops", af.hops, "Context hop bound (0: model depth)");
    agg_cmd->add_option("--mode", af.mode, "GAT split: feature | attention");
    agg_cmd->add_option("--seed", af.seed, "RNG seed")->required();
    agg_cmd->add_option("--json", af.json, "Output tree JSON")->required();
    agg_cmd->add_option("--dot", af.dot, "Optional DOT rendering");

    struct {
        std::string model, dataset, json, granularity = "auto", mode = "feature";
        bool gt_label = false;
        int threads = default_threads();
    } ef;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Explanation AUC against ground truth");
    eval_cmd->add_option("--model", ef.model, "Model JSON")->required();
    eval_cmd->add_option("--dataset", ef.dataset, "Dataset JSON")->required();
    eval_cmd->add_option("--granularity", ef.granularity, "auto | node | edge")
        ->check(CLI::IsMember({"auto", "node", "edge"}));
    eval_cmd->add_option("--mode", ef.mode, "GAT split: feature | attention");
    eval_cmd->add_flag("--gt-label", ef.gt_label, "Explain the labeled class, not the prediction");
    eval_cmd->add_option("--threads", ef.threads, "Worker cap (default $DEGREE_THREADS or 1)");
    eval_cmd->add_option("--json", ef.json, "Output report JSON")->required();

    struct {
        std::string model, dataset, json, conv = "gcn";
        int depth = 3, limit = 50, threads = default_threads();
        std::uint64_t seed = 1;
    } bf;
    CLI::App* bench_cmd = app.add_subcommand("bench", "Time per-instance explanations");
    bench_cmd->add_option("--model", bf.model, "Model JSON (default: random model)");
    bench_cmd->add_option("--dataset", bf.dataset, "Dataset JSON (default: ba-shapes)");
    bench_cmd->add_option("--arch,--conv", bf.conv, "gcn | gat for the default model")
        ->check(CLI::IsMember({"gcn", "gat"}));
    bench_cmd->add_option("--depth", bf.depth, "Depth of the default model");
    bench_cmd->add_option("--limit", bf.limit, "Max instances to time (0: all)");
    bench_cmd->add_option("--threads", bf.threads, "Worker cap");
    bench_cmd->add_option("--seed", bf.seed, "Seed for the default model/dataset");
    bench_cmd->add_option("--json", bf.json, "Optional report JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (gen->parsed()) {
        degree::rng_stream rng(gf.seed);
        const degree::dataset ds = build_named_dataset(gf, rng);
        degree::save_dataset(ds, gf.out);
        write_manifest(gf.out, "gen", gen_config_json(gf), {}, {gf.out});
        int nodes = 0;
        for (const degree::graph& g : ds.graphs) nodes += g.n;
        std::cout << "gen: " << gf.name << " -> " << gf.out << " (" << ds.graphs.size()
                  << " graph(s), " << nodes << " nodes)\n";
        return 0;
    }

    if (train_cmd->parsed()) {
        const degree::dataset ds = degree::load_dataset(tf.dataset);
        degree::arch_config arch;
        arch.conv = tf.conv;
        arch.depth = tf.depth;
        arch.hidden = tf.hidden;
        arch.leaky_slope = tf.leaky;
        degree::train_config hp;
        hp.lr = tf.lr;
        hp.epochs = tf.epochs;
        degree::rng_stream rng(tf.seed);
        const degree::train_result result = degree::train(arch, ds, hp, rng);
        degree::save_model(result.model, tf.out);
        nlohmann::json cfg{{"dataset", tf.dataset}, {"conv", tf.conv},     {"depth", tf.depth},
                           {"hidden", tf.hidden},   {"epochs", tf.epochs}, {"lr", tf.lr},
                           {"leaky_slope", tf.leaky}, {"seed", tf.seed}};
        std::vector<std::string> outputs{tf.out};
        if (!tf.metrics.empty()) {
            nlohmann::json hist{{"loss", result.history.loss},
                                {"train_acc", result.history.train_acc},
                                {"val_acc", result.history.val_acc},
                                {"test_acc", result.history.test_acc}};
            degree::atomic_write_text(tf.metrics, hist.dump(2) + "\n");
            outputs.push_back(tf.metrics);
        }
        write_manifest(tf.out, "train", cfg, {tf.dataset}, outputs);
        std::cout << "train: loss=" << result.history.loss.back()
                  << " train_acc=" << result.history.train_acc.back()
                  << " val_acc=" << result.history.val_acc.back()
                  << " test_acc=" << result.history.test_acc.back() << "\n";
        return 0;
    }

    if (explain_cmd->parsed()) {
        const degree::trained_model m = degree::load_model(xf.model);
        const degree::dataset ds = degree::load_dataset(xf.dataset);
        if (m.task != ds.task) throw degree::config_error("model and dataset task differ");
        const instance_graph inst = instance_computation_graph(m, ds, xf.index);
        degree::decompose_options opt;
        opt.mode = parse_mode(xf.mode);
        opt.output_node = inst.local_center;
        const degree::decompose_engine engine(m, *inst.g, opt);
        const int cls = xf.cls < 0 ? argmax(engine.logits()) : xf.cls;
        if (cls >= m.n_classes)
            throw degree::config_error("class " + std::to_string(cls) + " outside the model");

        std::vector<double> scores;
        scores.reserve(static_cast<std::size_t>(inst.g->n));
        for (int v = 0; v < inst.g->n; ++v)
            scores.push_back(
                engine.run(degree::node_group::single(v)).gamma[static_cast<std::size_t>(cls)]);

        nlohmann::json j;
        j["task"] = ds.task == degree::task_kind::node_classification ? "node" : "graph";
        j["instance"] = xf.index;
        j["class"] = cls;
        j["mode"] = xf.mode;
        j["logits"] = engine.logits();
        j["node_ids"] = inst.node_ids;
        j["scores"] = scores;
        nlohmann::json edges = nlohmann::json::array();
        for (const auto& [u, v] : inst.g->edges)
            edges.push_back({inst.node_ids[static_cast<std::size_t>(u)],
                             inst.node_ids[static_cast<std::size_t>(v)]});
        j["edges"] = edges;
        if (!xf.target.empty()) {
            // Target arrives in original node ids; map into the computation graph.
            std::vector<int> local;
            for (int v : xf.target) {
                int mapped = -1;
                for (std::size_t i = 0; i < inst.node_ids.size(); ++i)
                    if (inst.node_ids[i] == v) mapped = static_cast<int>(i);
                if (mapped < 0)
                    throw degree::validation_error("target node " + std::to_string(v) +
                                                   " outside the computation graph");
                local.push_back(mapped);
            }
            const degree::contribution_report rep = engine.run(degree::node_group(local));
            j["target"] = {{"nodes", xf.target}, {"gamma", rep.gamma}, {"beta", rep.beta}};
        }
        degree::atomic_write_text(xf.out, j.dump(2) + "\n");
        nlohmann::json cfg{{"model", xf.model}, {"dataset", xf.dataset}, {"index", xf.index},
                           {"class", xf.cls},   {"mode", xf.mode},       {"target", xf.target}};
        std::vector<std::string> outputs{xf.out};
        if (!xf.dot.empty()) {
            degree::atomic_write_text(
                xf.dot, scores_to_dot(*inst.g, scores, inst.node_ids, inst.local_center));
            outputs.push_back(xf.dot);
        }
        write_manifest(xf.out, "explain", cfg, {xf.model, xf.dataset}, outputs);
        std::cout << "explain: instance " << xf.index << " class " << cls << " -> " << xf.out
                  << "\n";
        return 0;
    }

    if (agg_cmd->parsed()) {
        const degree::trained_model m = degree::load_model(af.model);
        const degree::dataset ds = degree::load_dataset(af.dataset);
        if (m.task != ds.task) throw degree::config_error("model and dataset task differ");
        const instance_graph inst = instance_computation_graph(m, ds, af.index);
        degree::agglomerate_config cfg;
        cfg.q = af.q;
        cfg.budget = af.budget;
        cfg.top_fraction = af.top_fraction;
        cfg.sampler.n_walks = af.walks;
        cfg.sampler.walk_len = af.walk_len;
        cfg.sampler.hop_bound = af.hops;
        cfg.decomp.mode = parse_mode(af.mode);
        cfg.decomp.output_node = inst.local_center;
        int cls = af.cls;
        if (cls < 0) {
            const degree::decompose_engine probe(m, *inst.g, cfg.decomp);
            cls = argmax(probe.logits());
        }
        degree::rng_stream rng(af.seed);
        const degree::explanation_tree tree = degree::agglomerate(m, *inst.g, cls, cfg, rng);

        nlohmann::json j = nlohmann::json::parse(degree::tree_to_json_text(tree));
        j["instance"] = af.index;
        j["node_ids"] = inst.node_ids;
        degree::atomic_write_text(af.json, j.dump(2) + "\n");
        nlohmann::json mcfg{{"model", af.model},   {"dataset", af.dataset},
                            {"index", af.index},   {"class", af.cls},
                            {"q", af.q},           {"budget", af.budget},
                            {"top_fraction", af.top_fraction},
                            {"walks", af.walks},   {"walk_len", af.walk_len},
                            {"hops", af.hops},     {"mode", af.mode},
                            {"seed", af.seed}};
        std::vector<std::string> outputs{af.json};
        if (!af.dot.empty()) {
            degree::atomic_write_text(af.dot, degree::tree_to_dot(tree, *inst.g));
            outputs.push_back(af.dot);
        }
        write_manifest(af.json, "agglomerate", mcfg, {af.model, af.dataset}, outputs);
        std::cout << "agglomerate: instance " << af.index << " class " << cls << ", "
                  << tree.levels.size() << " level(s), stop=" << tree.stop_reason << " -> "
                  << af.json << "\n";
        return 0;
    }

    if (eval_cmd->parsed()) {
        const degree::trained_model m = degree::load_model(ef.model);
        const degree::dataset ds = degree::load_dataset(ef.dataset);
        degree::eval_config cfg;
        cfg.granularity = ef.granularity == "node"   ? degree::gt_granularity::node
                          : ef.granularity == "edge" ? degree::gt_granularity::edge
                                                     : degree::gt_granularity::automatic;
        cfg.mode = parse_mode(ef.mode);
        cfg.use_ground_truth_label = ef.gt_label;
        cfg.threads = ef.threads;
        const degree::eval_report report = degree::evaluate_explainer(m, ds, cfg);
        degree::atomic_write_text(ef.json, degree::report_to_json_text(report));
        nlohmann::json mcfg{{"model", ef.model},
                            {"dataset", ef.dataset},
                            {"granularity", ef.granularity},
                            {"gt_label", ef.gt_label},
                            {"mode", ef.mode},
                            {"threads", ef.threads}};
        write_manifest(ef.json, "eval", mcfg, {ef.model, ef.dataset}, {ef.json});
        std::cout << "eval: auc=" << report.auc << " mean_instance_auc=" << report.mean_instance_auc
                  << " top1=" << report.top1_accuracy << " evaluated=" << report.evaluated
                  << " skipped=" << report.skipped << " mean_s=" << report.mean_seconds
                  << " max_s=" << report.max_seconds << "\n";
        return 0;
    }

    if (bench_cmd->parsed()) {
        degree::rng_stream rng(bf.seed);
        degree::dataset ds;
        if (bf.dataset.empty())
            ds = degree::gen_ba_shapes(degree::ba_shapes_config{}, rng);
        else
            ds = degree::load_dataset(bf.dataset);
        degree::trained_model m;
        if (bf.model.empty()) {
            degree::arch_config arch;
            arch.conv = bf.conv;
            arch.depth = bf.depth;
            m = degree::make_model(arch, ds.task, static_cast<int>(ds.graphs[0].feature_dim()),
                                   ds.n_classes, rng);
        } else {
            m = degree::load_model(bf.model);
        }
        if (bf.limit > 0 && ds.task == degree::task_kind::node_classification) {
            // Timing only needs a sample of instances: unmark the rest.
            degree::graph g = ds.graphs[0];
            std::vector<std::uint8_t> mask = g.gt_nodes;
            int kept = 0;
            for (auto& bit : mask) {
                if (bit != 0 && kept < bf.limit)
                    ++kept;
                else
                    bit = 0;
            }
            ds.graphs[0] = degree::graph(g.n, g.edges, g.features, g.node_labels, g.graph_label,
                                         mask, g.gt_edges);
        }
        degree::eval_config cfg;
        cfg.threads = bf.threads;
        const degree::eval_report report = degree::evaluate_explainer(m, ds, cfg);
        std::cout << "bench: instances=" << report.evaluated
                  << " mean_s=" << report.mean_seconds << " max_s=" << report.max_seconds << "\n";
        if (!bf.json.empty()) {
            degree::atomic_write_text(bf.json, degree::report_to_json_text(report));
            nlohmann::json mcfg{{"model", bf.model}, {"dataset", bf.dataset}, {"conv", bf.conv},
                                {"depth", bf.depth}, {"limit", bf.limit},     {"seed", bf.seed},
                                {"threads", bf.threads}};
            write_manifest(bf.json, "bench", mcfg, {}, {bf.json});
        }
        return 0;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const usage_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const degree::numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
