#pragma once

// Single-hidden-layer perceptron baseline: sigmoid hidden units, linear
// output, trained by full-batch backprop with momentum (B-BP) or with
// validation-based early stopping (ES-BP).

#include <cstdint>
#include <span>
#include <vector>

#include "sfn/matrix.hpp"
#include "sfn/trainer.hpp"

namespace sfn {

class MlpModel {
public:
    // Throws ConfigError for zero inputs or zero hidden units.
    MlpModel(std::size_t inputs, std::size_t hidden);

    std::size_t input_count() const { return inputs_; }
    std::size_t hidden_count() const { return hidden_; }

    // Layout: for each hidden unit h, [w_h0 .. w_h(p-1)]; then
    // [v_0 .. v_(H-1), b_out]. Hidden units carry no bias.
    std::span<const double> weights() const { return weights_; }
    void set_weights(std::span<const double> w);

    double predict(std::span<const double> input) const;
    std::vector<double> predict(const Matrix& inputs) const;

    // U[-0.5, 0.5] for every weight.
    void randomize(std::uint64_t seed);

private:
    std::size_t inputs_;
    std::size_t hidden_;
    std::vector<double> weights_;
};

// p * h + h + 1. Throws ConfigError when either count is zero.
std::size_t mlp_weight_count(std::size_t inputs, std::size_t hidden);
std::size_t mlp_weight_count(const MlpModel& model);

struct MlpConfig {
    std::size_t hidden = 9;
    // ES-BP: stop after this many epochs without a validation improvement (0 = never).
    std::size_t patience = 200;
    TrainConfig train;
};

struct MlpFit {
    MlpModel model;
    TrainResult result;
    std::size_t best_epoch = 0;
    double best_validation_mse = 0.0;
};

// Sum of squared errors and its gradient, batched with the active kernels.
double mlp_loss_and_gradient(const MlpModel& model, const Matrix& inputs, std::span<const double> targets,
                             std::span<double> gradient);
double mlp_mse(const MlpModel& model, const Matrix& inputs, std::span<const double> targets);

// Central-difference gradient of the summed squared error.
std::vector<double> mlp_finite_diff_gradient(const MlpModel& model, const Matrix& inputs,
                                             std::span<const double> targets, double h);

MlpFit mlp_train_bbp(const Samples& train, const MlpConfig& config);
// Returns the weights of the epoch with the lowest validation MSE.
MlpFit mlp_train_esbp(const Samples& train, const Samples& validation, const MlpConfig& config);

struct HiddenSweep {
    std::size_t best_hidden = 0;
    std::vector<std::pair<std::size_t, double>> validation_mse;  // (hidden, MSE)
};

// Trains B-BP for each hidden count and picks the lowest validation MSE.
HiddenSweep mlp_hidden_sweep(const Samples& train, const Samples& validation, const MlpConfig& config,
                             std::span<const std::size_t> hidden_counts);

} // namespace sfn
