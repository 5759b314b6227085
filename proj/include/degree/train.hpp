#pragma once

#include "degree/dataset.hpp"
#include "degree/model.hpp"
#include "degree/rng.hpp"

#include <array>
#include <vector>

namespace degree {

struct train_config {
    double lr = 0.005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int epochs = 1000;
};

/// Entry k holds the metric after k optimizer steps: index 0 is the freshly
/// initialized model, the final entry the returned one.
struct train_history {
    std::vector<double> loss;
    std::vector<double> train_acc;
    std::vector<double> val_acc;
    std::vector<double> test_acc;
};

struct train_result {
    trained_model model;
    train_history history;
};

/// Parameter gradients aligned with trained_model::layers; entries stay
/// empty for layers without the corresponding parameter.
struct model_gradients {
    std::vector<matrix> weight;
    std::vector<std::vector<double>> bias;
    std::vector<std::vector<double>> attn;
};

/// One bias-corrected Adam update over a flat parameter tensor; step_index
/// counts from 1. Moment vectors must match theta's size and start at zero.
void adam_step(std::vector<double>& theta, const std::vector<double>& grad,
               std::vector<double>& moment1, std::vector<double>& moment2, int step_index,
               const train_config& hp);

/// Mean cross-entropy over the train split.
double training_loss(const trained_model& m, const dataset& ds);

/// training_loss plus analytic gradients from hand-derived backprop; the
/// tests hold these to central finite differences.
double loss_and_gradients(const trained_model& m, const dataset& ds, model_gradients& grads);

/// Fraction of correctly classified elements per split {train, val, test}.
/// Splits with no elements report accuracy 1.
std::array<double, 3> split_accuracy(const trained_model& m, const dataset& ds);

/// Glorot-initializes the architecture, then full-batch Adam on the train
/// split. Throws numeric_error naming the epoch if the loss turns
/// non-finite.
train_result train(const arch_config& arch, const dataset& ds, const train_config& hp,
                   rng_stream& rng);

} // namespace degree
