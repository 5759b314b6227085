#include "degree/eval.hpp"

#include "degree/errors.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>
#include <optional>
#include <thread>

namespace degree {
namespace {

int argmax_index(const std::vector<double>& v) {
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

int count_label(const std::vector<int>& labels, int value) {
    return static_cast<int>(std::count(labels.begin(), labels.end(), value));
}

std::vector<int> mask_to_labels(const std::vector<std::uint8_t>& mask) {
    return {mask.begin(), mask.end()};
}

} // namespace

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw dimension_error("roc_auc: " + std::to_string(scores.size()) + " scores vs " +
                              std::to_string(labels.size()) + " labels");
    for (int l : labels)
        if (l != 0 && l != 1) throw validation_error("roc_auc: labels must be 0 or 1");
    for (double s : scores)
        if (!std::isfinite(s)) throw numeric_error("roc_auc: non-finite score");
    const int pos = count_label(labels, 1);
    const int neg = count_label(labels, 0);
    if (pos == 0 || neg == 0) throw numeric_error("roc_auc: undefined for single-class labels");

    // Rank-sum form of the Mann-Whitney statistic; average ranks implement
    // the half credit for ties.
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j); // 1-based ranks i+1..j
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) pos_rank_sum += avg_rank;
        i = j;
    }
    const double p = static_cast<double>(pos);
    return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

std::vector<double> edge_scores(const std::vector<double>& node_scores, const graph& g) {
    if (node_scores.size() != static_cast<std::size_t>(g.n))
        throw dimension_error("edge_scores: " + std::to_string(node_scores.size()) +
                              " scores for " + std::to_string(g.n) + " nodes");
    std::vector<double> out;
    out.reserve(g.edges.size());
    for (const auto& [u, v] : g.edges)
        out.push_back(0.5 * (node_scores[static_cast<std::size_t>(u)] +
                             node_scores[static_cast<std::size_t>(v)]));
    return out;
}

namespace {

struct instance_outcome {
    std::optional<instance_eval> result;
    std::string warning;
};

/// Scores one computation graph. center < 0 marks a graph-level instance.
instance_outcome evaluate_instance(const trained_model& m, const graph& comp, int center,
                                   int index, const eval_config& cfg, gt_granularity gran,
                                   std::optional<int> gt_label) {
    const auto t0 = std::chrono::steady_clock::now();
    decompose_options opt;
    opt.mode = cfg.mode;
    opt.output_node = center;
    const decompose_engine engine(m, comp, opt);

    int cls;
    if (cfg.use_ground_truth_label) {
        if (!gt_label) throw validation_error("eval: instance " + std::to_string(index) +
                                              " has no label to explain");
        cls = *gt_label;
        if (cls < 0 || cls >= m.n_classes)
            throw validation_error("eval: label " + std::to_string(cls) + " outside the model");
    } else {
        cls = argmax_index(engine.logits());
    }

    std::vector<double> scores;
    scores.reserve(static_cast<std::size_t>(comp.n));
    for (int v = 0; v < comp.n; ++v)
        scores.push_back(engine.run(node_group::single(v)).gamma[static_cast<std::size_t>(cls)]);
    const auto t1 = std::chrono::steady_clock::now();

    // Ground truth for a node instance is the motif it belongs to; other
    // motifs pulled into the computation graph by shortcut edges are not
    // evidence for this prediction. Without motif ids the global masks apply.
    const bool own_motif = center >= 0 && !comp.motif_ids.empty() &&
                           comp.motif_ids[static_cast<std::size_t>(center)] >= 0;
    std::vector<int> node_truth;
    if (own_motif) {
        const int motif = comp.motif_ids[static_cast<std::size_t>(center)];
        node_truth.reserve(static_cast<std::size_t>(comp.n));
        for (int v = 0; v < comp.n; ++v)
            node_truth.push_back(comp.motif_ids[static_cast<std::size_t>(v)] == motif ? 1 : 0);
    } else if (!comp.gt_nodes.empty()) {
        node_truth = mask_to_labels(comp.gt_nodes);
    }

    instance_outcome out;
    instance_eval inst;
    inst.index = index;
    inst.cls = cls;
    inst.seconds = std::chrono::duration<double>(t1 - t0).count();
    if (gran == gt_granularity::node) {
        if (node_truth.empty()) {
            out.warning = "instance " + std::to_string(index) + ": no node ground truth";
            return out;
        }
        inst.scores = scores;
        inst.labels = node_truth;
    } else {
        inst.scores = edge_scores(scores, comp);
        if (own_motif) {
            inst.labels.reserve(comp.edges.size());
            for (const auto& [u, v] : comp.edges)
                inst.labels.push_back(node_truth[static_cast<std::size_t>(u)] != 0 &&
                                              node_truth[static_cast<std::size_t>(v)] != 0
                                          ? 1
                                          : 0);
        } else if (!comp.gt_edges.empty()) {
            inst.labels = mask_to_labels(comp.gt_edges);
        } else {
            out.warning = "instance " + std::to_string(index) + ": no edge ground truth";
            return out;
        }
    }
    if (count_label(inst.labels, 1) == 0 || count_label(inst.labels, 0) == 0) {
        out.warning = "instance " + std::to_string(index) + ": computation graph is single-class (" +
                      (count_label(inst.labels, 0) == 0 ? "no negatives" : "no positives") + ")";
        return out;
    }
    inst.auc = roc_auc(inst.scores, inst.labels);
    if (!node_truth.empty())
        inst.top1_hit = node_truth[static_cast<std::size_t>(argmax_index(scores))] != 0;
    out.result = std::move(inst);
    return out;
}

} // namespace

eval_report evaluate_explainer(const trained_model& m, const dataset& ds, const eval_config& cfg) {
    ds.validate();
    m.validate();
    if (m.task != ds.task) throw config_error("eval: model and dataset task differ");
    if (m.n_classes != ds.n_classes)
        throw config_error("eval: model has " + std::to_string(m.n_classes) + " classes, dataset " +
                           std::to_string(ds.n_classes));
    if (cfg.threads < 1) throw config_error("eval: threads must be positive");

    const bool node_task = ds.task == task_kind::node_classification;
    gt_granularity gran = cfg.granularity;
    if (gran == gt_granularity::automatic) {
        bool any_nodes = false, any_edges = false;
        for (const graph& g : ds.graphs) {
            any_nodes |= !g.gt_nodes.empty();
            any_edges |= !g.gt_edges.empty();
        }
        if (any_nodes)
            gran = gt_granularity::node;
        else if (any_edges)
            gran = gt_granularity::edge;
        else
            throw validation_error("eval: dataset carries no ground truth masks");
    }

    // An instance is a motif node of the one node-task graph, or a graph.
    struct instance_ref {
        int index;
        int graph_index;
        int center; // -1 for graph instances
    };
    std::vector<instance_ref> refs;
    if (node_task) {
        const graph& g = ds.graphs[0];
        if (g.gt_nodes.empty() && g.gt_edges.empty())
            throw validation_error("eval: dataset carries no ground truth masks");
        for (int v = 0; v < g.n; ++v)
            if (!g.gt_nodes.empty() && g.gt_nodes[static_cast<std::size_t>(v)] != 0)
                refs.push_back({v, 0, v});
        if (refs.empty()) throw validation_error("eval: no ground-truth nodes to explain");
    } else {
        for (int gi = 0; gi < static_cast<int>(ds.graphs.size()); ++gi) refs.push_back({gi, gi, -1});
    }

    const int hops = std::max(1, m.message_passing_layers());
    std::vector<instance_outcome> outcomes(refs.size());
    std::exception_ptr first_error;
    std::mutex error_lock;
    auto run_one = [&](std::size_t i) {
        const instance_ref& ref = refs[i];
        const graph& g = ds.graphs[static_cast<std::size_t>(ref.graph_index)];
        if (node_task) {
            const subgraph_result sub = khop_subgraph(g, ref.center, hops);
            std::optional<int> label;
            if (!g.node_labels.empty()) label = g.node_labels[static_cast<std::size_t>(ref.center)];
            outcomes[i] = evaluate_instance(m, sub.g, sub.old_to_new[static_cast<std::size_t>(ref.center)],
                                            ref.index, cfg, gran, label);
        } else {
            outcomes[i] = evaluate_instance(m, g, -1, ref.index, cfg, gran, g.graph_label);
        }
    };

    const int workers = std::min<int>(cfg.threads, static_cast<int>(refs.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < refs.size(); ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= refs.size()) return;
                    try {
                        run_one(i);
                    } catch (...) {
                        const std::lock_guard<std::mutex> hold(error_lock);
                        if (!first_error) first_error = std::current_exception();
                        return;
                    }
                }
            });
        for (std::thread& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    eval_report report;
    report.granularity = gran;
    std::vector<double> pooled_scores;
    std::vector<int> pooled_labels;
    double auc_sum = 0.0;
    int top1_hits = 0;
    double time_sum = 0.0;
    for (instance_outcome& out : outcomes) {
        if (!out.result) {
            report.warnings.push_back(out.warning);
            ++report.skipped;
            continue;
        }
        instance_eval& inst = *out.result;
        pooled_scores.insert(pooled_scores.end(), inst.scores.begin(), inst.scores.end());
        pooled_labels.insert(pooled_labels.end(), inst.labels.begin(), inst.labels.end());
        auc_sum += inst.auc;
        top1_hits += inst.top1_hit ? 1 : 0;
        time_sum += inst.seconds;
        report.max_seconds = std::max(report.max_seconds, inst.seconds);
        ++report.evaluated;
        report.instances.push_back(std::move(inst));
    }
    if (report.evaluated == 0) throw validation_error("eval: every instance was skipped");
    report.auc = roc_auc(pooled_scores, pooled_labels);
    report.mean_instance_auc = auc_sum / report.evaluated;
    report.top1_accuracy = static_cast<double>(top1_hits) / report.evaluated;
    report.mean_seconds = time_sum / report.evaluated;
    return report;
}

std::string report_to_json_text(const eval_report& report) {
    nlohmann::json j;
    j["granularity"] = report.granularity == gt_granularity::node ? "node" : "edge";
    j["auc"] = report.auc;
    j["mean_instance_auc"] = report.mean_instance_auc;
    j["top1_accuracy"] = report.top1_accuracy;
    j["mean_seconds"] = report.mean_seconds;
    j["max_seconds"] = report.max_seconds;
    j["evaluated"] = report.evaluated;
    j["skipped"] = report.skipped;
    j["warnings"] = report.warnings;
    nlohmann::json arr = nlohmann::json::array();
    for (const instance_eval& inst : report.instances)
        arr.push_back({{"index", inst.index},
                       {"class", inst.cls},
                       {"auc", inst.auc},
                       {"top1_hit", inst.top1_hit},
                       {"seconds", inst.seconds},
                       {"scores", inst.scores},
                       {"labels", inst.labels}});
    j["instances"] = arr;
    return j.dump(2) + "\n";
}

std::vector<std::pair<double, double>> acc_sparsity_curve(const trained_model& m,
                                                          const std::vector<node_group>& subgraphs,
                                                          const graph& g,
                                                          const decompose_options& opt) {
    const bool node_task = m.task == task_kind::node_classification;
    if (node_task && (opt.output_node < 0 || opt.output_node >= g.n))
        throw config_error("acc_sparsity_curve: node task requires output_node in [0, " +
                           std::to_string(g.n) + ")");

    const matrix full_out = model_forward(m, g);
    const int full_row = node_task ? opt.output_node : 0;
    std::vector<double> full_probs(full_out.row(full_row).begin(), full_out.row(full_row).end());
    const int full_pred = argmax_index(full_probs);

    std::vector<std::pair<double, double>> curve;
    for (const node_group& group : subgraphs) {
        if (group.empty()) continue;
        if (node_task && !group.contains(opt.output_node)) continue;
        const subgraph_result sub = induce_subgraph(g, group);
        const matrix out = model_forward(m, sub.g);
        const int row = node_task ? sub.old_to_new[static_cast<std::size_t>(opt.output_node)] : 0;
        std::vector<double> probs(out.row(row).begin(), out.row(row).end());
        const double sparsity = static_cast<double>(group.size()) / static_cast<double>(g.n);
        curve.emplace_back(sparsity, argmax_index(probs) == full_pred ? 1.0 : 0.0);
    }
    return curve;
}

} // namespace degree
