#pragma once

#include "degree/agglomerate.hpp"
#include "degree/dataset.hpp"
#include "degree/decompose.hpp"
#include "degree/model.hpp"

#include <string>
#include <vector>

namespace degree {

/// Probability that a uniformly random positive outranks a uniformly random
/// negative; ties credit 0.5. Throws numeric_error when labels are
/// single-class (undefined AUC).
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Per-edge scores in g.edges order: the mean of the endpoint scores.
std::vector<double> edge_scores(const std::vector<double>& node_scores, const graph& g);

enum class gt_granularity { automatic, node, edge };

struct eval_config {
    gt_granularity granularity = gt_granularity::automatic;
    gat_mode mode = gat_mode::feature;
    bool use_ground_truth_label = false; ///< score the labeled class instead of the prediction
    int threads = 1;
};

/// One explained instance: a motif node (node tasks, index = node id) or a
/// labeled graph (graph tasks, index = graph position).
struct instance_eval {
    int index = 0;
    int cls = 0;                ///< class whose contribution was scored
    std::vector<double> scores; ///< per node or per edge of the computation graph
    std::vector<int> labels;    ///< ground truth aligned with scores
    double auc = 0.0;
    bool top1_hit = false; ///< best-scored node is ground truth
    double seconds = 0.0;
};

struct eval_report {
    gt_granularity granularity = gt_granularity::node;
    double auc = 0.0;               ///< pooled over all instance scores
    double mean_instance_auc = 0.0; ///< per-instance AUCs averaged
    double top1_accuracy = 0.0;
    double mean_seconds = 0.0;
    double max_seconds = 0.0;
    int evaluated = 0;
    int skipped = 0;
    std::vector<instance_eval> instances;
    std::vector<std::string> warnings;
};

/// Scores every node of each instance's computation graph through singleton
/// decompositions and accumulates ranking quality against the dataset's
/// ground truth. Instances whose computation graph is single-class are
/// skipped with a logged warning.
eval_report evaluate_explainer(const trained_model& m, const dataset& ds,
                               const eval_config& cfg = {});

std::string report_to_json_text(const eval_report& report);

/// Prediction-consistency curve for nested explanation subgraphs of one
/// graph: for each group, sparsity = |group| / n and acc = 1 when the model
/// predicts the same class on the induced subgraph as on the full graph.
/// Node tasks compare at opt.output_node; groups missing it are skipped,
/// as are empty groups.
std::vector<std::pair<double, double>> acc_sparsity_curve(const trained_model& m,
                                                          const std::vector<node_group>& subgraphs,
                                                          const graph& g,
                                                          const decompose_options& opt = {});

} // namespace degree
