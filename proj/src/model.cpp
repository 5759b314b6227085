#include "degree/model.hpp"

#include "degree/errors.hpp"
#include "degree/json_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace degree {
namespace {

void check_in_dim(const layer_spec& layer, const matrix& x) {
    if (x.cols() != layer.in_dim)
        throw dimension_error(std::string(layer_kind_name(layer.kind)) + ": input has " +
                              std::to_string(x.cols()) + " features, layer expects " +
                              std::to_string(layer.in_dim));
}

matrix add_bias(matrix y, const std::vector<double>& bias) {
    if (bias.empty()) return y;
    for (int r = 0; r < y.rows(); ++r)
        for (int c = 0; c < y.cols(); ++c) y(r, c) += bias[static_cast<std::size_t>(c)];
    return y;
}

double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }

} // namespace

const char* layer_kind_name(layer_kind kind) {
    switch (kind) {
    case layer_kind::gcn_conv: return "gcn-conv";
    case layer_kind::gat_attn: return "gat-attn";
    case layer_kind::fully_connected: return "fully-connected";
    case layer_kind::relu: return "relu";
    case layer_kind::maxpool: return "maxpool";
    case layer_kind::softmax_out: return "softmax-out";
    }
    throw validation_error("unknown layer kind value");
}

layer_kind layer_kind_from_name(const std::string& name) {
    if (name == "gcn-conv") return layer_kind::gcn_conv;
    if (name == "gat-attn") return layer_kind::gat_attn;
    if (name == "fully-connected") return layer_kind::fully_connected;
    if (name == "relu") return layer_kind::relu;
    if (name == "maxpool") return layer_kind::maxpool;
    if (name == "softmax-out") return layer_kind::softmax_out;
    throw validation_error("unknown layer kind '" + name + "'");
}

void trained_model::validate() const {
    if (n_classes <= 0) throw validation_error("model: n_classes must be positive");
    if (layers.empty()) throw validation_error("model: no layers");
    int dim = layers.front().in_dim;
    int maxpools = 0;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const layer_spec& layer = layers[k];
        const std::string where = "model layer " + std::to_string(k) + " (" +
                                  layer_kind_name(layer.kind) + ")";
        if (layer.in_dim != dim)
            throw validation_error(where + ": in_dim " + std::to_string(layer.in_dim) +
                                   " does not match incoming dimension " + std::to_string(dim));
        const bool weighted = layer.kind == layer_kind::gcn_conv ||
                              layer.kind == layer_kind::gat_attn ||
                              layer.kind == layer_kind::fully_connected;
        if (weighted) {
            if (layer.weight.rows() != layer.in_dim || layer.weight.cols() != layer.out_dim)
                throw validation_error(where + ": weight is " + std::to_string(layer.weight.rows()) +
                                       "x" + std::to_string(layer.weight.cols()) + ", expected " +
                                       std::to_string(layer.in_dim) + "x" +
                                       std::to_string(layer.out_dim));
            if (!layer.bias.empty() && static_cast<int>(layer.bias.size()) != layer.out_dim)
                throw validation_error(where + ": bias length " + std::to_string(layer.bias.size()) +
                                       ", expected " + std::to_string(layer.out_dim));
        } else {
            if (layer.out_dim != layer.in_dim)
                throw validation_error(where + ": in_dim must equal out_dim");
            if (layer.has_weight() || !layer.bias.empty())
                throw validation_error(where + ": carries weight or bias");
        }
        if (layer.kind == layer_kind::gat_attn) {
            if (static_cast<int>(layer.attn_vector.size()) != 2 * layer.out_dim)
                throw validation_error(where + ": attn_vector length " +
                                       std::to_string(layer.attn_vector.size()) + ", expected " +
                                       std::to_string(2 * layer.out_dim));
            if (!std::isfinite(layer.leaky_slope))
                throw validation_error(where + ": leaky_slope is not finite");
        } else if (!layer.attn_vector.empty()) {
            throw validation_error(where + ": attn_vector on a non-attention layer");
        }
        if (layer.kind == layer_kind::maxpool) ++maxpools;
        if (layer.kind == layer_kind::softmax_out && k + 1 != layers.size())
            throw validation_error(where + ": softmax-out must be the final layer");
        dim = layer.out_dim;
    }
    if (layers.back().kind != layer_kind::softmax_out)
        throw validation_error("model: final layer must be softmax-out");
    if (dim != n_classes)
        throw validation_error("model: final dimension " + std::to_string(dim) + " != n_classes " +
                               std::to_string(n_classes));
    const int expected_pools = task == task_kind::graph_classification ? 1 : 0;
    if (maxpools != expected_pools)
        throw validation_error("model: " + std::to_string(maxpools) + " maxpool layers, task needs " +
                               std::to_string(expected_pools));
}

int trained_model::message_passing_layers() const {
    int count = 0;
    for (const layer_spec& layer : layers)
        if (layer.kind == layer_kind::gcn_conv || layer.kind == layer_kind::gat_attn) ++count;
    return count;
}

gat_detail gat_forward_detail(const layer_spec& layer, const matrix& x, const graph& g) {
    check_in_dim(layer, x);
    if (x.rows() != g.n)
        throw dimension_error("gat-attn: " + std::to_string(x.rows()) + " rows for a graph with " +
                              std::to_string(g.n) + " nodes");
    gat_detail d;
    d.h = matmul(x, layer.weight);
    const int f = layer.out_dim;
    std::vector<double> src(static_cast<std::size_t>(g.n)), dst(static_cast<std::size_t>(g.n));
    for (int v = 0; v < g.n; ++v) {
        double s = 0.0, t = 0.0;
        for (int c = 0; c < f; ++c) {
            s += d.h(v, c) * layer.attn_vector[static_cast<std::size_t>(c)];
            t += d.h(v, c) * layer.attn_vector[static_cast<std::size_t>(f + c)];
        }
        src[static_cast<std::size_t>(v)] = s;
        dst[static_cast<std::size_t>(v)] = t;
    }
    d.nbr.resize(static_cast<std::size_t>(g.n));
    d.score.resize(static_cast<std::size_t>(g.n));
    d.alpha.resize(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i) {
        auto& row = d.nbr[static_cast<std::size_t>(i)];
        const auto& nbrs = g.neighbors(i);
        row.reserve(nbrs.size() + 1);
        bool self_placed = false;
        for (int j : nbrs) {
            if (!self_placed && i < j) {
                row.push_back(i);
                self_placed = true;
            }
            row.push_back(j);
        }
        if (!self_placed) row.push_back(i);

        auto& score = d.score[static_cast<std::size_t>(i)];
        auto& alpha = d.alpha[static_cast<std::size_t>(i)];
        score.resize(row.size());
        alpha.resize(row.size());
        double max_act = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < row.size(); ++k) {
            score[k] = src[static_cast<std::size_t>(i)] + dst[static_cast<std::size_t>(row[k])];
            max_act = std::max(max_act, leaky_relu(score[k], layer.leaky_slope));
        }
        double total = 0.0;
        for (std::size_t k = 0; k < row.size(); ++k) {
            alpha[k] = std::exp(leaky_relu(score[k], layer.leaky_slope) - max_act);
            total += alpha[k];
        }
        for (double& a : alpha) a /= total;
    }
    return d;
}

attention_coeffs gat_attention(const layer_spec& layer, const matrix& x, const graph& g) {
    const gat_detail d = gat_forward_detail(layer, x, g);
    attention_coeffs attn;
    attn.rows.resize(d.nbr.size());
    for (std::size_t i = 0; i < d.nbr.size(); ++i) {
        attn.rows[i].reserve(d.nbr[i].size());
        for (std::size_t k = 0; k < d.nbr[i].size(); ++k)
            attn.rows[i].emplace_back(d.nbr[i][k], d.alpha[i][k]);
    }
    return attn;
}

matrix layer_forward(const layer_spec& layer, const matrix& x, const graph& g) {
    switch (layer.kind) {
    case layer_kind::gcn_conv: {
        check_in_dim(layer, x);
        if (x.rows() != g.n)
            throw dimension_error("gcn-conv: " + std::to_string(x.rows()) +
                                  " rows for a graph with " + std::to_string(g.n) + " nodes");
        return add_bias(propagate(gcn_propagation(g), matmul(x, layer.weight)), layer.bias);
    }
    case layer_kind::gat_attn: {
        const gat_detail d = gat_forward_detail(layer, x, g);
        matrix y(x.rows(), layer.out_dim);
        for (int i = 0; i < y.rows(); ++i) {
            const auto& nbr = d.nbr[static_cast<std::size_t>(i)];
            const auto& alpha = d.alpha[static_cast<std::size_t>(i)];
            for (std::size_t k = 0; k < nbr.size(); ++k)
                for (int c = 0; c < y.cols(); ++c) y(i, c) += alpha[k] * d.h(nbr[k], c);
        }
        return add_bias(std::move(y), layer.bias);
    }
    case layer_kind::fully_connected:
        check_in_dim(layer, x);
        return add_bias(matmul(x, layer.weight), layer.bias);
    case layer_kind::relu: {
        check_in_dim(layer, x);
        matrix y = x;
        for (double& v : y.data()) v = std::max(v, 0.0);
        return y;
    }
    case layer_kind::maxpool: {
        check_in_dim(layer, x);
        if (x.rows() == 0) throw dimension_error("maxpool: no rows to pool");
        matrix y(1, x.cols());
        for (int c = 0; c < x.cols(); ++c) {
            double best = x(0, c);
            for (int r = 1; r < x.rows(); ++r)
                if (x(r, c) > best) best = x(r, c);
            y(0, c) = best;
        }
        return y;
    }
    case layer_kind::softmax_out:
        check_in_dim(layer, x);
        return row_softmax(x);
    }
    throw validation_error("unknown layer kind value");
}

std::vector<matrix> forward_trace(const trained_model& m, const graph& g) {
    std::vector<matrix> trace;
    trace.reserve(m.layers.size() + 1);
    trace.push_back(g.features);
    for (const layer_spec& layer : m.layers) trace.push_back(layer_forward(layer, trace.back(), g));
    return trace;
}

matrix model_forward(const trained_model& m, const graph& g) {
    matrix x = g.features;
    for (const layer_spec& layer : m.layers) x = layer_forward(layer, x, g);
    return x;
}

matrix pre_softmax_logits(const trained_model& m, const graph& g) {
    if (m.layers.empty() || m.layers.back().kind != layer_kind::softmax_out)
        throw validation_error("pre_softmax_logits: model does not end in softmax-out");
    matrix x = g.features;
    for (std::size_t k = 0; k + 1 < m.layers.size(); ++k) x = layer_forward(m.layers[k], x, g);
    return x;
}

trained_model make_model(const arch_config& arch, task_kind task, int in_dim, int n_classes,
                         rng_stream& rng) {
    if (arch.conv != "gcn" && arch.conv != "gat")
        throw config_error("arch.conv must be 'gcn' or 'gat', got '" + arch.conv + "'");
    if (arch.depth < 1) throw config_error("arch.depth must be >= 1");
    if (arch.hidden < 1) throw config_error("arch.hidden must be >= 1");
    if (in_dim < 1) throw config_error("make_model: in_dim must be >= 1");
    if (n_classes < 2) throw config_error("make_model: n_classes must be >= 2");

    auto glorot = [&rng](int fan_in, int fan_out, int rows, int cols) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        matrix w(rows, cols);
        for (double& v : w.data()) v = rng.next_uniform(-limit, limit);
        return w;
    };
    auto conv_layer = [&](int in, int out) {
        layer_spec layer;
        layer.kind = arch.conv == "gcn" ? layer_kind::gcn_conv : layer_kind::gat_attn;
        layer.in_dim = in;
        layer.out_dim = out;
        layer.weight = glorot(in, out, in, out);
        layer.bias.assign(static_cast<std::size_t>(out), 0.0);
        if (layer.kind == layer_kind::gat_attn) {
            const matrix a = glorot(2 * out, 1, 2 * out, 1);
            layer.attn_vector.assign(a.data().begin(), a.data().end());
            layer.leaky_slope = arch.leaky_slope;
        }
        return layer;
    };
    auto plain_layer = [](layer_kind kind, int dim) {
        layer_spec layer;
        layer.kind = kind;
        layer.in_dim = dim;
        layer.out_dim = dim;
        return layer;
    };
    auto fc_layer = [&](int in, int out) {
        layer_spec layer;
        layer.kind = layer_kind::fully_connected;
        layer.in_dim = in;
        layer.out_dim = out;
        layer.weight = glorot(in, out, in, out);
        layer.bias.assign(static_cast<std::size_t>(out), 0.0);
        return layer;
    };

    trained_model m;
    m.task = task;
    m.n_classes = n_classes;
    int dim = in_dim;
    for (int k = 0; k < arch.depth; ++k) {
        m.layers.push_back(conv_layer(dim, arch.hidden));
        dim = arch.hidden;
        m.layers.push_back(plain_layer(layer_kind::relu, dim));
    }
    if (task == task_kind::graph_classification)
        m.layers.push_back(plain_layer(layer_kind::maxpool, dim));
    m.layers.push_back(fc_layer(dim, arch.hidden));
    m.layers.push_back(plain_layer(layer_kind::relu, arch.hidden));
    m.layers.push_back(fc_layer(arch.hidden, n_classes));
    m.layers.push_back(plain_layer(layer_kind::softmax_out, n_classes));
    m.validate();
    return m;
}

void save_model(const trained_model& m, const std::string& path) {
    m.validate();
    nlohmann::json j;
    j["task"] = m.task == task_kind::node_classification ? "node" : "graph";
    j["n_classes"] = m.n_classes;
    j["layers"] = nlohmann::json::array();
    for (const layer_spec& layer : m.layers) {
        nlohmann::json jl;
        jl["kind"] = layer_kind_name(layer.kind);
        jl["in_dim"] = layer.in_dim;
        jl["out_dim"] = layer.out_dim;
        if (layer.has_weight()) jl["weight"] = matrix_to_json(layer.weight);
        if (!layer.bias.empty()) jl["bias"] = layer.bias;
        if (layer.kind == layer_kind::gat_attn) {
            jl["attn_vector"] = layer.attn_vector;
            jl["leaky_slope"] = layer.leaky_slope;
        }
        j["layers"].push_back(std::move(jl));
    }
    atomic_write_text(path, j.dump(2) + "\n");
}

trained_model load_model(const std::string& path) {
    nlohmann::json j = parse_json(read_text_file(path), path);
    if (!j.is_object()) throw validation_error(path + ": expected a JSON object");
    for (const char* field : {"task", "n_classes", "layers"})
        if (!j.contains(field)) throw validation_error(path + ": missing field '" + field + "'");

    trained_model m;
    const std::string task = j["task"].is_string() ? j["task"].get<std::string>() : "";
    if (task == "node") m.task = task_kind::node_classification;
    else if (task == "graph") m.task = task_kind::graph_classification;
    else throw validation_error(path + ": task must be 'node' or 'graph'");
    if (!j["n_classes"].is_number_integer())
        throw validation_error(path + ": 'n_classes' must be an integer");
    m.n_classes = j["n_classes"].get<int>();
    if (!j["layers"].is_array()) throw validation_error(path + ": 'layers' must be an array");

    auto double_list = [&path](const nlohmann::json& arr, const std::string& field) {
        if (!arr.is_array()) throw validation_error(path + ": '" + field + "' must be an array");
        std::vector<double> out;
        for (const auto& v : arr) {
            if (!v.is_number()) throw validation_error(path + ": '" + field + "' entries must be numbers");
            out.push_back(v.get<double>());
        }
        return out;
    };
    for (const auto& jl : j["layers"]) {
        if (!jl.is_object()) throw validation_error(path + ": layer entries must be objects");
        layer_spec layer;
        if (!jl.contains("kind") || !jl["kind"].is_string())
            throw validation_error(path + ": layer missing string 'kind'");
        layer.kind = layer_kind_from_name(jl["kind"].get<std::string>());
        if (!jl.contains("in_dim") || !jl["in_dim"].is_number_integer() || !jl.contains("out_dim") ||
            !jl["out_dim"].is_number_integer())
            throw validation_error(path + ": layer missing integer dims");
        layer.in_dim = jl["in_dim"].get<int>();
        layer.out_dim = jl["out_dim"].get<int>();
        if (jl.contains("weight")) layer.weight = matrix_from_json(jl["weight"], "weight");
        if (jl.contains("bias")) layer.bias = double_list(jl["bias"], "bias");
        if (jl.contains("attn_vector")) layer.attn_vector = double_list(jl["attn_vector"], "attn_vector");
        if (jl.contains("leaky_slope")) {
            if (!jl["leaky_slope"].is_number())
                throw validation_error(path + ": 'leaky_slope' must be a number");
            layer.leaky_slope = jl["leaky_slope"].get<double>();
        }
        m.layers.push_back(std::move(layer));
    }
    m.validate();
    return m;
}

} // namespace degree
