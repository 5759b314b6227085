#include "degree/decompose.hpp"

#include "degree/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace degree {
namespace {

double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }

void check_state(const decomposed_state& s, const char* op) {
    if (s.gamma.rows() != s.beta.rows() || s.gamma.cols() != s.beta.cols())
        throw dimension_error(std::string(op) + ": gamma is " + std::to_string(s.gamma.rows()) +
                              "x" + std::to_string(s.gamma.cols()) + " but beta is " +
                              std::to_string(s.beta.rows()) + "x" + std::to_string(s.beta.cols()));
}

void check_layer_kind(const layer_spec& layer, layer_kind expected, const char* op) {
    if (layer.kind != expected)
        throw config_error(std::string(op) + ": layer kind is " + layer_kind_name(layer.kind));
}

void check_layer_input(const layer_spec& layer, const decomposed_state& s, const char* op) {
    if (s.gamma.cols() != layer.in_dim)
        throw dimension_error(std::string(op) + ": state has " + std::to_string(s.gamma.cols()) +
                              " features, layer expects " + std::to_string(layer.in_dim));
}

/// The portions compete for the bias entrywise by magnitude; a 0/0 entry
/// splits it evenly, keeping the rule symmetric.
void apply_bias_competition(matrix& lin_g, matrix& lin_b, const std::vector<double>& bias) {
    if (bias.empty()) return;
    for (int r = 0; r < lin_g.rows(); ++r)
        for (int c = 0; c < lin_g.cols(); ++c) {
            const double ag = std::abs(lin_g(r, c));
            const double ab = std::abs(lin_b(r, c));
            const double share = ag + ab == 0.0 ? 0.5 : ag / (ag + ab);
            lin_g(r, c) += share * bias[static_cast<std::size_t>(c)];
            lin_b(r, c) += (1.0 - share) * bias[static_cast<std::size_t>(c)];
        }
}

/// Per-node src/dst attention pre-scores of one portion: e_ij = src_i + dst_j.
void attn_terms(const matrix& h, const std::vector<double>& a, std::vector<double>& src,
                std::vector<double>& dst) {
    const int f = h.cols();
    src.assign(static_cast<std::size_t>(h.rows()), 0.0);
    dst.assign(static_cast<std::size_t>(h.rows()), 0.0);
    for (int v = 0; v < h.rows(); ++v) {
        double s = 0.0, t = 0.0;
        for (int c = 0; c < f; ++c) {
            s += h(v, c) * a[static_cast<std::size_t>(c)];
            t += h(v, c) * a[static_cast<std::size_t>(f + c)];
        }
        src[static_cast<std::size_t>(v)] = s;
        dst[static_cast<std::size_t>(v)] = t;
    }
}

} // namespace

decomposed_state init_decomposition(const graph& g, const node_group& target) {
    for (int v : target.members())
        if (v < 0 || v >= g.n)
            throw validation_error("init_decomposition: node " + std::to_string(v) +
                                   " outside [0, " + std::to_string(g.n) + ")");
    decomposed_state s;
    s.gamma = matrix(g.n, g.features.cols());
    s.beta = matrix(g.n, g.features.cols());
    for (int v = 0; v < g.n; ++v) {
        auto dstrow = target.contains(v) ? s.gamma.row(v) : s.beta.row(v);
        const auto src = g.features.row(v);
        std::copy(src.begin(), src.end(), dstrow.begin());
    }
    return s;
}

decomposed_state decompose_gcn(const layer_spec& layer, const decomposed_state& s, const graph& g) {
    check_layer_kind(layer, layer_kind::gcn_conv, "decompose_gcn");
    check_state(s, "decompose_gcn");
    check_layer_input(layer, s, "decompose_gcn");
    if (s.gamma.rows() != g.n)
        throw dimension_error("decompose_gcn: state has " + std::to_string(s.gamma.rows()) +
                              " rows for a graph with " + std::to_string(g.n) + " nodes");
    const propagation prop = gcn_propagation(g);
    decomposed_state out;
    out.gamma = propagate(prop, matmul(s.gamma, layer.weight));
    out.beta = propagate(prop, matmul(s.beta, layer.weight));
    apply_bias_competition(out.gamma, out.beta, layer.bias);
    return out;
}

decomposed_state decompose_fc(const layer_spec& layer, const decomposed_state& s) {
    check_layer_kind(layer, layer_kind::fully_connected, "decompose_fc");
    check_state(s, "decompose_fc");
    check_layer_input(layer, s, "decompose_fc");
    decomposed_state out;
    out.gamma = matmul(s.gamma, layer.weight);
    out.beta = matmul(s.beta, layer.weight);
    apply_bias_competition(out.gamma, out.beta, layer.bias);
    return out;
}

decomposed_state decompose_relu(const decomposed_state& s) {
    check_state(s, "decompose_relu");
    decomposed_state out;
    out.gamma = s.gamma;
    for (double& v : out.gamma.data()) v = std::max(v, 0.0);
    out.beta = matrix(s.beta.rows(), s.beta.cols());
    for (std::size_t i = 0; i < out.beta.size(); ++i) {
        const double full = s.gamma.data()[i] + s.beta.data()[i];
        out.beta.data()[i] = std::max(full, 0.0) - out.gamma.data()[i];
    }
    return out;
}

decomposed_state decompose_maxpool(const decomposed_state& s) {
    check_state(s, "decompose_maxpool");
    if (s.gamma.rows() == 0) throw dimension_error("decompose_maxpool: no rows to pool");
    decomposed_state out;
    out.gamma = matrix(1, s.gamma.cols());
    out.beta = matrix(1, s.beta.cols());
    out.pool_indices.assign(static_cast<std::size_t>(s.gamma.cols()), 0);
    for (int c = 0; c < s.gamma.cols(); ++c) {
        int best = 0;
        double best_val = s.gamma(0, c) + s.beta(0, c);
        for (int r = 1; r < s.gamma.rows(); ++r) {
            const double full = s.gamma(r, c) + s.beta(r, c);
            if (full > best_val) {
                best = r;
                best_val = full;
            }
        }
        out.pool_indices[static_cast<std::size_t>(c)] = best;
        out.gamma(0, c) = s.gamma(best, c);
        out.beta(0, c) = s.beta(best, c);
    }
    return out;
}

std::vector<double> split_attention_row(const std::vector<double>& alpha,
                                        const std::vector<double>& s_gamma,
                                        const std::vector<double>& s_beta) {
    if (alpha.size() != s_gamma.size() || alpha.size() != s_beta.size())
        throw dimension_error("split_attention_row: sizes " + std::to_string(alpha.size()) + ", " +
                              std::to_string(s_gamma.size()) + ", " +
                              std::to_string(s_beta.size()) + " differ");
    std::vector<double> out(alpha.size());
    for (std::size_t k = 0; k < alpha.size(); ++k)
        out[k] = alpha[k] / (1.0 + std::exp(std::abs(s_beta[k]) - std::abs(s_gamma[k])));
    return out;
}

decomposed_state decompose_gat(const layer_spec& layer, const decomposed_state& s, const graph& g,
                               gat_mode mode) {
    check_layer_kind(layer, layer_kind::gat_attn, "decompose_gat");
    check_state(s, "decompose_gat");
    check_layer_input(layer, s, "decompose_gat");
    if (s.gamma.rows() != g.n)
        throw dimension_error("decompose_gat: state has " + std::to_string(s.gamma.rows()) +
                              " rows for a graph with " + std::to_string(g.n) + " nodes");

    const gat_detail d = gat_forward_detail(layer, add(s.gamma, s.beta), g);
    const matrix hg = matmul(s.gamma, layer.weight);
    const matrix hb = matmul(s.beta, layer.weight);
    const int f = layer.out_dim;

    decomposed_state out;
    out.gamma = matrix(g.n, f);
    out.beta = matrix(g.n, f);

    if (mode == gat_mode::feature) {
        // Full attention over decomposed features.
        for (int i = 0; i < g.n; ++i) {
            const auto& nbr = d.nbr[static_cast<std::size_t>(i)];
            const auto& alpha = d.alpha[static_cast<std::size_t>(i)];
            for (std::size_t k = 0; k < nbr.size(); ++k)
                for (int c = 0; c < f; ++c) {
                    out.gamma(i, c) += alpha[k] * hg(nbr[k], c);
                    out.beta(i, c) += alpha[k] * hb(nbr[k], c);
                }
        }
    } else {
        // Split attention over full features: decompose the concatenated
        // scores, telescope the LeakyReLU, share out each coefficient.
        std::vector<double> src_g, dst_g, src_b, dst_b;
        attn_terms(hg, layer.attn_vector, src_g, dst_g);
        attn_terms(hb, layer.attn_vector, src_b, dst_b);
        std::vector<double> sg, sb;
        for (int i = 0; i < g.n; ++i) {
            const auto& nbr = d.nbr[static_cast<std::size_t>(i)];
            const auto& alpha = d.alpha[static_cast<std::size_t>(i)];
            sg.assign(nbr.size(), 0.0);
            sb.assign(nbr.size(), 0.0);
            for (std::size_t k = 0; k < nbr.size(); ++k) {
                const double eg = src_g[static_cast<std::size_t>(i)] +
                                  dst_g[static_cast<std::size_t>(nbr[k])];
                const double eb = src_b[static_cast<std::size_t>(i)] +
                                  dst_b[static_cast<std::size_t>(nbr[k])];
                sg[k] = leaky_relu(eg, layer.leaky_slope);
                sb[k] = leaky_relu(eg + eb, layer.leaky_slope) - sg[k];
            }
            const std::vector<double> ag = split_attention_row(alpha, sg, sb);
            for (std::size_t k = 0; k < nbr.size(); ++k)
                for (int c = 0; c < f; ++c) {
                    out.gamma(i, c) += ag[k] * d.h(nbr[k], c);
                    out.beta(i, c) += (alpha[k] - ag[k]) * d.h(nbr[k], c);
                }
        }
    }
    apply_bias_competition(out.gamma, out.beta, layer.bias);
    return out;
}

decompose_engine::decompose_engine(const trained_model& m, const graph& g, decompose_options opt)
    : model_(&m), graph_(&g), opt_(opt) {
    m.validate();
    if (g.features.cols() != m.input_dim())
        throw dimension_error("decompose: graph features have " + std::to_string(g.features.cols()) +
                              " dims, model expects " + std::to_string(m.input_dim()));
    const bool node_task = m.task == task_kind::node_classification;
    if (node_task && (opt_.output_node < 0 || opt_.output_node >= g.n))
        throw config_error("decompose: node task requires output_node in [0, " +
                           std::to_string(g.n) + "), got " + std::to_string(opt_.output_node));

    for (const layer_spec& layer : m.layers)
        if (layer.kind == layer_kind::gcn_conv) {
            prop_ = gcn_propagation(g);
            break;
        }

    const std::size_t n_layers = m.layers.size();
    trace_.reserve(n_layers + 1);
    trace_.push_back(g.features);
    full_lin_.resize(n_layers);
    gat_.resize(n_layers);
    pool_.resize(n_layers);
    slice_layer_ = 0;
    for (std::size_t k = 0; k < n_layers; ++k) {
        const layer_spec& layer = m.layers[k];
        const matrix& x = trace_.back();
        matrix y;
        switch (layer.kind) {
        case layer_kind::gcn_conv:
            full_lin_[k] = propagate(prop_, matmul(x, layer.weight));
            y = full_lin_[k];
            slice_layer_ = static_cast<int>(k) + 1;
            break;
        case layer_kind::gat_attn: {
            gat_detail& d = gat_[k];
            d = gat_forward_detail(layer, x, g);
            full_lin_[k] = matrix(x.rows(), layer.out_dim);
            for (int i = 0; i < x.rows(); ++i) {
                const auto& nbr = d.nbr[static_cast<std::size_t>(i)];
                const auto& alpha = d.alpha[static_cast<std::size_t>(i)];
                for (std::size_t p = 0; p < nbr.size(); ++p)
                    for (int c = 0; c < layer.out_dim; ++c)
                        full_lin_[k](i, c) += alpha[p] * d.h(nbr[p], c);
            }
            y = full_lin_[k];
            slice_layer_ = static_cast<int>(k) + 1;
            break;
        }
        case layer_kind::fully_connected:
            full_lin_[k] = matmul(x, layer.weight);
            y = full_lin_[k];
            break;
        case layer_kind::relu:
            y = x;
            for (double& v : y.data()) v = std::max(v, 0.0);
            break;
        case layer_kind::maxpool: {
            auto& idx = pool_[k];
            idx.assign(static_cast<std::size_t>(x.cols()), 0);
            y = matrix(1, x.cols());
            for (int c = 0; c < x.cols(); ++c) {
                int best = 0;
                for (int r = 1; r < x.rows(); ++r)
                    if (x(r, c) > x(best, c)) best = r;
                idx[static_cast<std::size_t>(c)] = best;
                y(0, c) = x(best, c);
            }
            slice_layer_ = static_cast<int>(k) + 1;
            break;
        }
        case layer_kind::softmax_out:
            y = row_softmax(x);
            break;
        }
        if (!layer.bias.empty())
            for (int r = 0; r < y.rows(); ++r)
                for (int c = 0; c < y.cols(); ++c) y(r, c) += layer.bias[static_cast<std::size_t>(c)];
        trace_.push_back(std::move(y));
        if (!trace_.back().all_finite())
            throw numeric_error("decompose: non-finite activation after layer " + std::to_string(k) +
                                " (" + layer_kind_name(layer.kind) + ")");
    }

    const matrix& logit_rows = trace_[n_layers - 1];
    const int report_row = node_task ? opt_.output_node : 0;
    const auto row = logit_rows.row(report_row);
    logits_.assign(row.begin(), row.end());
}

contribution_report decompose_engine::run(const node_group& target) const {
    const graph& g = *graph_;
    const trained_model& m = *model_;
    for (int v : target.members())
        if (v < 0 || v >= g.n)
            throw validation_error("decompose: target node " + std::to_string(v) + " outside [0, " +
                                   std::to_string(g.n) + ")");

    const bool node_task = m.task == task_kind::node_classification;
    matrix gamma(g.n, g.features.cols());
    for (int v : target.members()) {
        const auto src = g.features.row(v);
        std::copy(src.begin(), src.end(), gamma.row(v).begin());
    }

    // After the last row-mixing layer only one row can influence the report,
    // so the remaining per-row layers work on that slice.
    bool sliced = false;
    auto maybe_slice = [&](int state_idx) {
        if (!node_task || sliced || state_idx != slice_layer_) return;
        matrix one(1, gamma.cols());
        const auto src = gamma.row(opt_.output_node);
        std::copy(src.begin(), src.end(), one.row(0).begin());
        gamma = std::move(one);
        sliced = true;
    };
    // Cached full-activation row matching local row r of the current state.
    auto cache_row = [&](int r) { return sliced ? opt_.output_node : r; };

    maybe_slice(0);
    for (std::size_t k = 0; k + 1 < m.layers.size(); ++k) {
        const layer_spec& layer = m.layers[k];
        switch (layer.kind) {
        case layer_kind::gcn_conv: {
            matrix lg = propagate(prop_, matmul(gamma, layer.weight));
            if (!layer.bias.empty()) {
                const matrix& flin = full_lin_[k];
                for (int r = 0; r < lg.rows(); ++r)
                    for (int c = 0; c < lg.cols(); ++c) {
                        const double ag = std::abs(lg(r, c));
                        const double ab = std::abs(flin(r, c) - lg(r, c));
                        const double share = ag + ab == 0.0 ? 0.5 : ag / (ag + ab);
                        lg(r, c) += share * layer.bias[static_cast<std::size_t>(c)];
                    }
            }
            gamma = std::move(lg);
            break;
        }
        case layer_kind::gat_attn: {
            const gat_detail& d = gat_[k];
            const int f = layer.out_dim;
            const matrix hg = matmul(gamma, layer.weight);
            matrix lg(g.n, f);
            if (opt_.mode == gat_mode::feature) {
                for (int i = 0; i < g.n; ++i) {
                    const auto& nbr = d.nbr[static_cast<std::size_t>(i)];
                    const auto& alpha = d.alpha[static_cast<std::size_t>(i)];
                    for (std::size_t p = 0; p < nbr.size(); ++p) {
                        const double* hrow = hg.row(nbr[p]).data();
                        for (int c = 0; c < f; ++c) lg(i, c) += alpha[p] * hrow[c];
                    }
                }
            } else {
                std::vector<double> src_g, dst_g;
                attn_terms(hg, layer.attn_vector, src_g, dst_g);
                std::vector<double> sg, sb;
                for (int i = 0; i < g.n; ++i) {
                    const auto& nbr = d.nbr[static_cast<std::size_t>(i)];
                    const auto& alpha = d.alpha[static_cast<std::size_t>(i)];
                    const auto& e_full = d.score[static_cast<std::size_t>(i)];
                    sg.assign(nbr.size(), 0.0);
                    sb.assign(nbr.size(), 0.0);
                    for (std::size_t p = 0; p < nbr.size(); ++p) {
                        sg[p] = leaky_relu(src_g[static_cast<std::size_t>(i)] +
                                               dst_g[static_cast<std::size_t>(nbr[p])],
                                           layer.leaky_slope);
                        sb[p] = leaky_relu(e_full[p], layer.leaky_slope) - sg[p];
                    }
                    const std::vector<double> ag = split_attention_row(alpha, sg, sb);
                    for (std::size_t p = 0; p < nbr.size(); ++p) {
                        const double* hrow = d.h.row(nbr[p]).data();
                        for (int c = 0; c < f; ++c) lg(i, c) += ag[p] * hrow[c];
                    }
                }
            }
            if (!layer.bias.empty()) {
                const matrix& flin = full_lin_[k];
                for (int r = 0; r < lg.rows(); ++r)
                    for (int c = 0; c < lg.cols(); ++c) {
                        const double ag = std::abs(lg(r, c));
                        const double ab = std::abs(flin(r, c) - lg(r, c));
                        const double share = ag + ab == 0.0 ? 0.5 : ag / (ag + ab);
                        lg(r, c) += share * layer.bias[static_cast<std::size_t>(c)];
                    }
            }
            gamma = std::move(lg);
            break;
        }
        case layer_kind::fully_connected: {
            matrix lg = matmul(gamma, layer.weight);
            if (!layer.bias.empty()) {
                const matrix& flin = full_lin_[k];
                for (int r = 0; r < lg.rows(); ++r)
                    for (int c = 0; c < lg.cols(); ++c) {
                        const double ag = std::abs(lg(r, c));
                        const double ab = std::abs(flin(cache_row(r), c) - lg(r, c));
                        const double share = ag + ab == 0.0 ? 0.5 : ag / (ag + ab);
                        lg(r, c) += share * layer.bias[static_cast<std::size_t>(c)];
                    }
            }
            gamma = std::move(lg);
            break;
        }
        case layer_kind::relu:
            for (double& v : gamma.data()) v = std::max(v, 0.0);
            break;
        case layer_kind::maxpool: {
            const auto& idx = pool_[k];
            matrix pooled(1, gamma.cols());
            for (int c = 0; c < gamma.cols(); ++c)
                pooled(0, c) = gamma(idx[static_cast<std::size_t>(c)], c);
            gamma = std::move(pooled);
            break;
        }
        case layer_kind::softmax_out:
            throw validation_error("decompose: softmax-out before the final layer");
        }
        maybe_slice(static_cast<int>(k) + 1);
    }

    contribution_report report;
    report.target = target;
    report.logits = logits_;
    const auto grow = gamma.row(0);
    report.gamma.assign(grow.begin(), grow.end());
    report.beta.resize(logits_.size());
    for (std::size_t c = 0; c < logits_.size(); ++c) report.beta[c] = logits_[c] - report.gamma[c];
    return report;
}

contribution_report decompose_model(const trained_model& m, const graph& g,
                                    const node_group& target, const decompose_options& opt) {
    return decompose_engine(m, g, opt).run(target);
}

std::vector<double> node_scores(const trained_model& m, const graph& g, int cls,
                                const std::vector<node_group>& targets,
                                const decompose_options& opt) {
    if (cls < 0 || cls >= m.n_classes)
        throw config_error("node_scores: class " + std::to_string(cls) + " outside [0, " +
                           std::to_string(m.n_classes) + ")");
    if (targets.empty()) return {};
    const decompose_engine engine(m, g, opt);
    std::vector<double> scores;
    scores.reserve(targets.size());
    for (const node_group& t : targets)
        scores.push_back(engine.run(t).gamma[static_cast<std::size_t>(cls)]);
    return scores;
}

} // namespace degree
