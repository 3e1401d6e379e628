#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "sfn/expr_tree.hpp"
#include "sfn/matrix.hpp"

namespace sfn {

struct TrainConfig {
    double learning_rate = 0.05;
    double momentum = 0.2;
    std::size_t max_epochs = 10000;
    // Stop once |J(t) - J(t-1)| < tolerance for patience_epochs consecutive epochs.
    double tolerance = 1e-8;
    std::size_t patience_epochs = 50;
    std::uint64_t seed = 1;
    // A step fails when J goes non-finite or rises above max_loss_increase
    // times the best J seen so far. A failed step restores the best weights and
    // halves the learning rate; after max_lr_halvings halvings training stops.
    double max_loss_increase = 1.04;
    int max_lr_halvings = 12;

    // Throws ConfigError.
    void validate() const;
};

struct TrainResult {
    double final_train_J = 0.0;
    std::size_t epochs_run = 0;
    bool diverged = false;
    int lr_halvings = 0;
    std::vector<double> weight_snapshot;
};

// Objective for steepest descent: returns J and fills the gradient, or throws
// NonFiniteResult.
using Objective = std::function<double(std::span<const double> weights, std::span<double> gradient)>;

// Called after every accepted epoch with the current weights and J. Returning
// true stops training.
using EpochObserver = std::function<bool(std::size_t epoch, std::span<const double> weights, double J)>;

// Full-batch steepest descent with momentum:
//   delta(t) = -lr * dJ/dw + momentum * delta(t-1)
// Returns the weights with the lowest J reached.
TrainResult steepest_descent(const Objective& objective, std::vector<double> weights, const TrainConfig& config,
                             const EpochObserver& observer = {});

// Trains every weight of the model on (inputs, targets), minimizing the sum of
// squared errors. The model is left holding the returned weights.
// Throws EmptyModel, EmptyData.
TrainResult train(SfnModel& model, const Matrix& inputs, std::span<const double> targets, const TrainConfig& config);

// (1/M) sum (y - d)^2. The empty model predicts 0.
double mse(const SfnModel& model, const Matrix& inputs, std::span<const double> targets);

// Multiplier ~ U[-0.5, 0.5]; v ~ U[0.5, 1.5] for E1; alpha ~ U[-0.5, 0.5] for E2.
LinkWeights init_weights(FunctionKind kind, std::mt19937_64& rng);

} // namespace sfn
