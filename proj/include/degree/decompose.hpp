#pragma once

#include "degree/graph.hpp"
#include "degree/model.hpp"

#include <vector>

namespace degree {

/// Target/background split of one activation. gamma + beta reconstructs the
/// full activation (completeness); pool_indices is filled by maxpool.
struct decomposed_state {
    matrix gamma;
    matrix beta;
    std::vector<int> pool_indices;
};

/// How a decomposed attention layer recombines: "feature" aggregates
/// decomposed features under the full attention, "attention" aggregates full
/// features under the split attention. Both are complete.
enum class gat_mode { feature, attention };

struct decompose_options {
    gat_mode mode = gat_mode::feature;
    int output_node = -1;  // node task: whose logits the report describes
};

struct contribution_report {
    std::vector<double> gamma;   // per-class target contribution
    std::vector<double> beta;    // per-class background contribution
    std::vector<double> logits;  // full pre-softmax logits; gamma + beta
    node_group target;
};

/// gamma = feature rows of the target nodes, zero elsewhere; beta the
/// complement.
decomposed_state init_decomposition(const graph& g, const node_group& target);

decomposed_state decompose_gcn(const layer_spec& layer, const decomposed_state& s, const graph& g);
decomposed_state decompose_fc(const layer_spec& layer, const decomposed_state& s);
decomposed_state decompose_relu(const decomposed_state& s);
decomposed_state decompose_maxpool(const decomposed_state& s);
decomposed_state decompose_gat(const layer_spec& layer, const decomposed_state& s, const graph& g,
                               gat_mode mode = gat_mode::feature);

/// Splits one attention row between target and background: entry k of the
/// result is alpha[k] * exp(|s_gamma[k]|) / (exp(|s_gamma[k]|) + exp(|s_beta[k]|)),
/// evaluated in the overflow-safe logistic form. The background share is
/// alpha - result.
std::vector<double> split_attention_row(const std::vector<double>& alpha,
                                        const std::vector<double>& s_gamma,
                                        const std::vector<double>& s_beta);

/// Caches one full forward pass (activations, attention, pool indices) so
/// that many targets on the same model/graph pay only the target-side work.
/// The background portion is recovered as (full - target), which keeps
/// completeness exact; the per-operation functions above stay the two-sided
/// reference.
class decompose_engine {
public:
    decompose_engine(const trained_model& m, const graph& g, decompose_options opt = {});

    contribution_report run(const node_group& target) const;

    /// Full pre-softmax logits of the designated row.
    const std::vector<double>& logits() const { return logits_; }

    const trained_model& model() const { return *model_; }

private:
    const trained_model* model_;
    const graph* graph_;
    decompose_options opt_;
    int slice_layer_;  // node task: state index at which work narrows to one row
    propagation prop_;
    std::vector<matrix> trace_;     // trace_[k] = input of layer k
    std::vector<matrix> full_lin_;  // pre-bias linear output per weighted layer
    std::vector<gat_detail> gat_;
    std::vector<std::vector<int>> pool_;
    std::vector<double> logits_;
};

/// Decomposes the whole model, stopping before the output softmax. The
/// report's gamma/beta are the target/background parts of the pre-softmax
/// logits: the designated node's row for the node task (options.output_node),
/// the pooled row for the graph task.
contribution_report decompose_model(const trained_model& m, const graph& g,
                                    const node_group& target,
                                    const decompose_options& opt = {});

/// Gamma[cls] per target group, one cached engine for all of them. A
/// node-task graph must already be the explained node's computation subgraph
/// (khop_subgraph with the model's message-passing depth), with
/// options.output_node in subgraph coordinates.
std::vector<double> node_scores(const trained_model& m, const graph& g, int cls,
                                const std::vector<node_group>& targets,
                                const decompose_options& opt = {});

} // namespace degree
