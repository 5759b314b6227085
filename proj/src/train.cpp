#include "degree/train.hpp"

#include "degree/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace degree {
namespace {

matrix add_bias(matrix y, const std::vector<double>& bias) {
    if (bias.empty()) return y;
    for (int r = 0; r < y.rows(); ++r)
        for (int c = 0; c < y.cols(); ++c) y(r, c) += bias[static_cast<std::size_t>(c)];
    return y;
}

std::vector<double> colsum(const matrix& a) {
    std::vector<double> out(static_cast<std::size_t>(a.cols()), 0.0);
    for (int r = 0; r < a.rows(); ++r)
        for (int c = 0; c < a.cols(); ++c) out[static_cast<std::size_t>(c)] += a(r, c);
    return out;
}

void add_into(std::vector<double>& acc, const std::vector<double>& inc) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += inc[i];
}

// Forward pass keeping everything backprop needs: the input of every layer,
// attention intermediates, pooling argmax indices.
struct graph_forward {
    std::vector<matrix> trace;  // trace[k] = input to layer k; trace.back() = probabilities
    std::vector<gat_detail> gat;
    std::vector<std::vector<int>> pool;
};

graph_forward run_forward(const trained_model& m, const graph& g, const propagation& prop) {
    graph_forward fwd;
    fwd.trace.reserve(m.layers.size() + 1);
    fwd.trace.push_back(g.features);
    fwd.gat.resize(m.layers.size());
    fwd.pool.resize(m.layers.size());
    for (std::size_t k = 0; k < m.layers.size(); ++k) {
        const layer_spec& layer = m.layers[k];
        const matrix& x = fwd.trace.back();
        matrix y;
        switch (layer.kind) {
        case layer_kind::gcn_conv:
            y = add_bias(propagate(prop, matmul(x, layer.weight)), layer.bias);
            break;
        case layer_kind::gat_attn: {
            gat_detail& d = fwd.gat[k];
            d = gat_forward_detail(layer, x, g);
            y = matrix(x.rows(), layer.out_dim);
            for (int i = 0; i < y.rows(); ++i) {
                const auto& nbr = d.nbr[static_cast<std::size_t>(i)];
                const auto& alpha = d.alpha[static_cast<std::size_t>(i)];
                for (std::size_t p = 0; p < nbr.size(); ++p)
                    for (int c = 0; c < y.cols(); ++c) y(i, c) += alpha[p] * d.h(nbr[p], c);
            }
            y = add_bias(std::move(y), layer.bias);
            break;
        }
        case layer_kind::fully_connected:
            y = add_bias(matmul(x, layer.weight), layer.bias);
            break;
        case layer_kind::relu:
            y = x;
            for (double& v : y.data()) v = std::max(v, 0.0);
            break;
        case layer_kind::maxpool: {
            auto& idx = fwd.pool[k];
            idx.assign(static_cast<std::size_t>(x.cols()), 0);
            y = matrix(1, x.cols());
            for (int c = 0; c < x.cols(); ++c) {
                int best = 0;
                for (int r = 1; r < x.rows(); ++r)
                    if (x(r, c) > x(best, c)) best = r;
                idx[static_cast<std::size_t>(c)] = best;
                y(0, c) = x(best, c);
            }
            break;
        }
        case layer_kind::softmax_out:
            y = row_softmax(x);
            break;
        }
        fwd.trace.push_back(std::move(y));
    }
    return fwd;
}

// Gradient of mean cross-entropy w.r.t. trace[k] flows backwards; parameter
// gradients accumulate into grads. dy enters as d(loss)/d(logits), the
// softmax-out layer already folded in.
void backward(const trained_model& m, const propagation& prop, const graph_forward& fwd,
              matrix dy, model_gradients& grads) {
    for (int k = static_cast<int>(m.layers.size()) - 2; k >= 0; --k) {
        const layer_spec& layer = m.layers[static_cast<std::size_t>(k)];
        const matrix& x = fwd.trace[static_cast<std::size_t>(k)];
        switch (layer.kind) {
        case layer_kind::gcn_conv: {
            const matrix dh = propagate(prop, dy);  // the propagation operator is symmetric
            grads.weight[static_cast<std::size_t>(k)] =
                add(grads.weight[static_cast<std::size_t>(k)], matmul(transpose(x), dh));
            add_into(grads.bias[static_cast<std::size_t>(k)], colsum(dy));
            dy = matmul(dh, transpose(layer.weight));
            break;
        }
        case layer_kind::gat_attn: {
            const gat_detail& d = fwd.gat[static_cast<std::size_t>(k)];
            const int f = layer.out_dim;
            add_into(grads.bias[static_cast<std::size_t>(k)], colsum(dy));
            matrix dh(x.rows(), f);
            std::vector<double> dsrc(static_cast<std::size_t>(x.rows()), 0.0);
            std::vector<double> ddst(static_cast<std::size_t>(x.rows()), 0.0);
            std::vector<double> dalpha;
            for (int i = 0; i < x.rows(); ++i) {
                const auto& nbr = d.nbr[static_cast<std::size_t>(i)];
                const auto& alpha = d.alpha[static_cast<std::size_t>(i)];
                const auto& score = d.score[static_cast<std::size_t>(i)];
                dalpha.assign(nbr.size(), 0.0);
                double row_dot = 0.0;
                for (std::size_t p = 0; p < nbr.size(); ++p) {
                    double s = 0.0;
                    for (int c = 0; c < f; ++c) s += dy(i, c) * d.h(nbr[p], c);
                    dalpha[p] = s;
                    row_dot += alpha[p] * s;
                    for (int c = 0; c < f; ++c) dh(nbr[p], c) += alpha[p] * dy(i, c);
                }
                for (std::size_t p = 0; p < nbr.size(); ++p) {
                    const double ds = alpha[p] * (dalpha[p] - row_dot);
                    const double de = ds * (score[p] > 0.0 ? 1.0 : layer.leaky_slope);
                    dsrc[static_cast<std::size_t>(i)] += de;
                    ddst[static_cast<std::size_t>(nbr[p])] += de;
                }
            }
            auto& dattn = grads.attn[static_cast<std::size_t>(k)];
            for (int v = 0; v < x.rows(); ++v)
                for (int c = 0; c < f; ++c) {
                    const double a1 = layer.attn_vector[static_cast<std::size_t>(c)];
                    const double a2 = layer.attn_vector[static_cast<std::size_t>(f + c)];
                    dh(v, c) += dsrc[static_cast<std::size_t>(v)] * a1 +
                                ddst[static_cast<std::size_t>(v)] * a2;
                    dattn[static_cast<std::size_t>(c)] += dsrc[static_cast<std::size_t>(v)] * d.h(v, c);
                    dattn[static_cast<std::size_t>(f + c)] +=
                        ddst[static_cast<std::size_t>(v)] * d.h(v, c);
                }
            grads.weight[static_cast<std::size_t>(k)] =
                add(grads.weight[static_cast<std::size_t>(k)], matmul(transpose(x), dh));
            dy = matmul(dh, transpose(layer.weight));
            break;
        }
        case layer_kind::fully_connected:
            grads.weight[static_cast<std::size_t>(k)] =
                add(grads.weight[static_cast<std::size_t>(k)], matmul(transpose(x), dy));
            add_into(grads.bias[static_cast<std::size_t>(k)], colsum(dy));
            dy = matmul(dy, transpose(layer.weight));
            break;
        case layer_kind::relu: {
            matrix dx = dy;
            for (std::size_t i = 0; i < dx.size(); ++i)
                if (x.data()[i] <= 0.0) dx.data()[i] = 0.0;
            dy = std::move(dx);
            break;
        }
        case layer_kind::maxpool: {
            matrix dx(x.rows(), x.cols());
            const auto& idx = fwd.pool[static_cast<std::size_t>(k)];
            for (int c = 0; c < x.cols(); ++c) dx(idx[static_cast<std::size_t>(c)], c) = dy(0, c);
            dy = std::move(dx);
            break;
        }
        case layer_kind::softmax_out:
            throw validation_error("backward: softmax-out before the final layer");
        }
    }
}

double cross_entropy(std::span<const double> logits, int label) {
    double row_max = logits[0];
    for (double v : logits) row_max = std::max(row_max, v);
    double total = 0.0;
    for (double v : logits) total += std::exp(v - row_max);
    return std::log(total) - (logits[static_cast<std::size_t>(label)] - row_max);
}

void check_compat(const trained_model& m, const dataset& ds) {
    m.validate();
    ds.validate();
    const bool node_task = ds.task == task_kind::node_classification;
    if (m.task != ds.task) throw validation_error("model and dataset disagree on the task");
    if (m.n_classes != ds.n_classes)
        throw validation_error("model has " + std::to_string(m.n_classes) + " classes, dataset " +
                               std::to_string(ds.n_classes));
    if (node_task && ds.graphs.front().node_labels.empty())
        throw validation_error("node classification requires node labels");
    for (const graph& g : ds.graphs)
        if (g.features.cols() != m.input_dim())
            throw validation_error("graph features have " + std::to_string(g.features.cols()) +
                                   " dims, model expects " + std::to_string(m.input_dim()));
}

void init_like(const trained_model& m, model_gradients& grads) {
    grads.weight.assign(m.layers.size(), matrix{});
    grads.bias.assign(m.layers.size(), {});
    grads.attn.assign(m.layers.size(), {});
    for (std::size_t k = 0; k < m.layers.size(); ++k) {
        const layer_spec& layer = m.layers[k];
        if (layer.has_weight()) grads.weight[k] = matrix(layer.weight.rows(), layer.weight.cols());
        if (!layer.bias.empty()) grads.bias[k].assign(layer.bias.size(), 0.0);
        if (!layer.attn_vector.empty()) grads.attn[k].assign(layer.attn_vector.size(), 0.0);
    }
}

} // namespace

double training_loss(const trained_model& m, const dataset& ds) {
    check_compat(m, ds);
    double loss = 0.0;
    int count = 0;
    if (ds.task == task_kind::node_classification) {
        const graph& g = ds.graphs.front();
        const matrix logits = pre_softmax_logits(m, g);
        for (int v = 0; v < g.n; ++v) {
            if (ds.split[static_cast<std::size_t>(v)] != split_train) continue;
            loss += cross_entropy(logits.row(v), g.node_labels[static_cast<std::size_t>(v)]);
            ++count;
        }
    } else {
        for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi) {
            if (ds.split[gi] != split_train) continue;
            const matrix logits = pre_softmax_logits(m, ds.graphs[gi]);
            loss += cross_entropy(logits.row(0), *ds.graphs[gi].graph_label);
            ++count;
        }
    }
    if (count == 0) throw validation_error("train split is empty");
    return loss / count;
}

double loss_and_gradients(const trained_model& m, const dataset& ds, model_gradients& grads) {
    check_compat(m, ds);
    init_like(m, grads);
    const std::size_t n_layers = m.layers.size();
    double loss = 0.0;

    if (ds.task == task_kind::node_classification) {
        const graph& g = ds.graphs.front();
        const propagation prop = gcn_propagation(g);
        const graph_forward fwd = run_forward(m, g, prop);
        const matrix& logits = fwd.trace[n_layers - 1];
        const matrix& probs = fwd.trace[n_layers];
        int count = 0;
        for (std::size_t v = 0; v < ds.split.size(); ++v)
            if (ds.split[v] == split_train) ++count;
        if (count == 0) throw validation_error("train split is empty");
        matrix dy(logits.rows(), logits.cols());
        for (int v = 0; v < g.n; ++v) {
            if (ds.split[static_cast<std::size_t>(v)] != split_train) continue;
            const int label = g.node_labels[static_cast<std::size_t>(v)];
            loss += cross_entropy(logits.row(v), label);
            for (int c = 0; c < logits.cols(); ++c) dy(v, c) = probs(v, c) / count;
            dy(v, label) -= 1.0 / count;
        }
        backward(m, prop, fwd, std::move(dy), grads);
        return loss / count;
    }

    int count = 0;
    for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi)
        if (ds.split[gi] == split_train) ++count;
    if (count == 0) throw validation_error("train split is empty");
    for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi) {
        if (ds.split[gi] != split_train) continue;
        const graph& g = ds.graphs[gi];
        const propagation prop = gcn_propagation(g);
        const graph_forward fwd = run_forward(m, g, prop);
        const matrix& logits = fwd.trace[n_layers - 1];
        const matrix& probs = fwd.trace[n_layers];
        const int label = *g.graph_label;
        loss += cross_entropy(logits.row(0), label);
        matrix dy(1, logits.cols());
        for (int c = 0; c < logits.cols(); ++c) dy(0, c) = probs(0, c) / count;
        dy(0, label) -= 1.0 / count;
        backward(m, prop, fwd, std::move(dy), grads);
    }
    return loss / count;
}

std::array<double, 3> split_accuracy(const trained_model& m, const dataset& ds) {
    check_compat(m, ds);
    std::array<int, 3> correct{0, 0, 0};
    std::array<int, 3> total{0, 0, 0};
    auto argmax_row = [](std::span<const double> row) {
        int best = 0;
        for (int c = 1; c < static_cast<int>(row.size()); ++c)
            if (row[static_cast<std::size_t>(c)] > row[static_cast<std::size_t>(best)]) best = c;
        return best;
    };
    if (ds.task == task_kind::node_classification) {
        const graph& g = ds.graphs.front();
        const matrix probs = model_forward(m, g);
        for (int v = 0; v < g.n; ++v) {
            const int bucket = ds.split[static_cast<std::size_t>(v)];
            ++total[static_cast<std::size_t>(bucket)];
            if (argmax_row(probs.row(v)) == g.node_labels[static_cast<std::size_t>(v)])
                ++correct[static_cast<std::size_t>(bucket)];
        }
    } else {
        for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi) {
            const matrix probs = model_forward(m, ds.graphs[gi]);
            const int bucket = ds.split[gi];
            ++total[static_cast<std::size_t>(bucket)];
            if (argmax_row(probs.row(0)) == *ds.graphs[gi].graph_label)
                ++correct[static_cast<std::size_t>(bucket)];
        }
    }
    std::array<double, 3> acc{};
    for (std::size_t b = 0; b < 3; ++b)
        acc[b] = total[b] == 0 ? 1.0 : static_cast<double>(correct[b]) / total[b];
    return acc;
}

void adam_step(std::vector<double>& theta, const std::vector<double>& grad,
               std::vector<double>& moment1, std::vector<double>& moment2, int step_index,
               const train_config& hp) {
    if (grad.size() != theta.size() || moment1.size() != theta.size() ||
        moment2.size() != theta.size())
        throw dimension_error("adam_step: tensor sizes disagree");
    const double corr1 = 1.0 - std::pow(hp.beta1, step_index);
    const double corr2 = 1.0 - std::pow(hp.beta2, step_index);
    for (std::size_t i = 0; i < theta.size(); ++i) {
        moment1[i] = hp.beta1 * moment1[i] + (1.0 - hp.beta1) * grad[i];
        moment2[i] = hp.beta2 * moment2[i] + (1.0 - hp.beta2) * grad[i] * grad[i];
        theta[i] -= hp.lr * (moment1[i] / corr1) / (std::sqrt(moment2[i] / corr2) + hp.eps);
    }
}

train_result train(const arch_config& arch, const dataset& ds, const train_config& hp,
                   rng_stream& rng) {
    ds.validate();
    if (hp.epochs < 0) throw config_error("epochs must be >= 0");
    if (!(hp.lr > 0.0)) throw config_error("learning rate must be positive");
    if (!(hp.beta1 >= 0.0 && hp.beta1 < 1.0) || !(hp.beta2 >= 0.0 && hp.beta2 < 1.0))
        throw config_error("Adam betas must lie in [0, 1)");
    if (!(hp.eps > 0.0)) throw config_error("Adam epsilon must be positive");

    train_result res;
    res.model = make_model(arch, ds.task, ds.graphs.front().features.cols(), ds.n_classes, rng);

    // One first/second-moment pair per parameter tensor, laid out layer-major.
    std::vector<std::vector<double>*> params;
    for (layer_spec& layer : res.model.layers) {
        if (layer.has_weight()) params.push_back(&layer.weight.data());
        if (!layer.bias.empty()) params.push_back(&layer.bias);
        if (!layer.attn_vector.empty()) params.push_back(&layer.attn_vector);
    }
    std::vector<std::vector<double>> moment1(params.size()), moment2(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
        moment1[p].assign(params[p]->size(), 0.0);
        moment2[p].assign(params[p]->size(), 0.0);
    }

    auto record = [&](double loss) {
        const auto acc = split_accuracy(res.model, ds);
        res.history.loss.push_back(loss);
        res.history.train_acc.push_back(acc[0]);
        res.history.val_acc.push_back(acc[1]);
        res.history.test_acc.push_back(acc[2]);
    };

    model_gradients grads;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        const double loss = loss_and_gradients(res.model, ds, grads);
        if (!std::isfinite(loss))
            throw numeric_error("training diverged at epoch " + std::to_string(epoch));
        record(loss);

        std::vector<const std::vector<double>*> grad_ptrs;
        for (std::size_t k = 0; k < res.model.layers.size(); ++k) {
            if (res.model.layers[k].has_weight()) grad_ptrs.push_back(&grads.weight[k].data());
            if (!grads.bias[k].empty()) grad_ptrs.push_back(&grads.bias[k]);
            if (!grads.attn[k].empty()) grad_ptrs.push_back(&grads.attn[k]);
        }
        for (std::size_t p = 0; p < params.size(); ++p)
            adam_step(*params[p], *grad_ptrs[p], moment1[p], moment2[p], epoch + 1, hp);
    }
    record(training_loss(res.model, ds));
    return res;
}

} // namespace degree
