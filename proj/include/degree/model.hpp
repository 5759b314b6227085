#pragma once

#include "degree/dataset.hpp"
#include "degree/graph.hpp"
#include "degree/matrix.hpp"
#include "degree/rng.hpp"

#include <string>
#include <vector>

namespace degree {

enum class layer_kind { gcn_conv, gat_attn, fully_connected, relu, maxpool, softmax_out };

const char* layer_kind_name(layer_kind kind);
layer_kind layer_kind_from_name(const std::string& name);

struct layer_spec {
    layer_kind kind = layer_kind::relu;
    int in_dim = 0;
    int out_dim = 0;
    matrix weight;                    // (in_dim, out_dim); empty unless gcn-conv/gat-attn/fully-connected
    std::vector<double> bias;         // empty or out_dim
    std::vector<double> attn_vector;  // gat-attn only, length 2*out_dim
    double leaky_slope = 0.2;         // gat-attn only

    bool has_weight() const { return weight.rows() > 0; }
    bool operator==(const layer_spec&) const = default;
};

struct trained_model {
    task_kind task = task_kind::node_classification;
    int n_classes = 0;
    std::vector<layer_spec> layers;

    /// Throws validation_error unless adjacent dims agree, the final layer is
    /// softmax-out, and the maxpool count matches the task.
    void validate() const;

    int input_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
    /// Count of message-passing layers; the hop radius of a node's
    /// computation graph.
    int message_passing_layers() const;

    bool operator==(const trained_model&) const = default;
};

/// Per-node attention rows over the closed neighborhood, sorted by neighbor
/// id. Each row sums to 1.
struct attention_coeffs {
    std::vector<std::vector<std::pair<int, double>>> rows;
};
attention_coeffs gat_attention(const layer_spec& layer, const matrix& x, const graph& g);

/// Intermediates of the attention computation, for consumers that need more
/// than the coefficients (training backprop, decomposition). score holds the
/// raw [h_i || h_j] a values BEFORE the LeakyReLU; alpha is the normalized
/// attention, both aligned with nbr.
struct gat_detail {
    matrix h;                                // x W
    std::vector<std::vector<int>> nbr;       // closed neighborhood per node, sorted
    std::vector<std::vector<double>> score;
    std::vector<std::vector<double>> alpha;
};
gat_detail gat_forward_detail(const layer_spec& layer, const matrix& x, const graph& g);

matrix layer_forward(const layer_spec& layer, const matrix& x, const graph& g);
matrix model_forward(const trained_model& m, const graph& g);

/// All intermediate activations: trace[0] is the input features, trace[k] the
/// output of layer k-1.
std::vector<matrix> forward_trace(const trained_model& m, const graph& g);

/// Activations entering the final softmax-out layer: per-node rows for the
/// node task, one pooled row for the graph task.
matrix pre_softmax_logits(const trained_model& m, const graph& g);

struct arch_config {
    std::string conv = "gcn";  // "gcn" or "gat"
    int depth = 3;             // message-passing layers
    int hidden = 20;
    double leaky_slope = 0.2;
};

/// Builds the standard stack: depth x (conv, relu), maxpool for graph task,
/// fc(hidden, hidden), relu, fc(hidden, n_classes), softmax-out. Weights are
/// Glorot-uniform, biases zero.
trained_model make_model(const arch_config& arch, task_kind task, int in_dim, int n_classes,
                         rng_stream& rng);

void save_model(const trained_model& m, const std::string& path);
trained_model load_model(const std::string& path);

} // namespace degree
