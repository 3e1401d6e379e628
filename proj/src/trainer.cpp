#include "sfn/trainer.hpp"

#include <cmath>

#include "sfn/error.hpp"
#include "sfn/grad_engine.hpp"

namespace sfn {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
    if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
    if (!(tolerance >= 0.0)) throw ConfigError("tolerance must be non-negative");
    if (!(max_loss_increase >= 1.0)) throw ConfigError("max_loss_increase must be at least 1");
    if (max_lr_halvings < 0) throw ConfigError("max_lr_halvings must be non-negative");
}

TrainResult steepest_descent(const Objective& objective, std::vector<double> weights, const TrainConfig& config,
                             const EpochObserver& observer) {
    config.validate();
    const std::size_t n = weights.size();
    std::vector<double> gradient(n), best_gradient(n), velocity(n, 0.0);

    TrainResult result;
    // The starting point must be evaluable; there is nothing to fall back to.
    double J = objective(weights, gradient);
    double best_J = J;
    std::vector<double> best = weights;
    best_gradient = gradient;

    double lr = config.learning_rate;
    double previous_J = J;
    std::size_t flat_epochs = 0;

    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        if (best_J == 0.0) break;
        for (std::size_t i = 0; i < n; ++i) {
            velocity[i] = -lr * gradient[i] + config.momentum * velocity[i];
            weights[i] += velocity[i];
        }
        ++result.epochs_run;

        bool failed = false;
        try {
            J = objective(weights, gradient);
            failed = !std::isfinite(J) || J > config.max_loss_increase * best_J;
        } catch (const NonFiniteResult&) {
            failed = true;
        }

        if (failed) {
            weights = best;
            gradient = best_gradient;
            std::fill(velocity.begin(), velocity.end(), 0.0);
            J = best_J;
            previous_J = best_J;
            flat_epochs = 0;
            if (result.lr_halvings == config.max_lr_halvings) {
                result.diverged = true;
                break;
            }
            ++result.lr_halvings;
            lr *= 0.5;
            continue;
        }

        if (J < best_J) {
            best_J = J;
            best = weights;
            best_gradient = gradient;
        }
        if (observer && observer(epoch, weights, J)) break;

        flat_epochs = std::fabs(J - previous_J) < config.tolerance ? flat_epochs + 1 : 0;
        previous_J = J;
        if (config.patience_epochs > 0 && flat_epochs >= config.patience_epochs) break;
    }

    result.final_train_J = best_J;
    result.weight_snapshot = std::move(best);
    return result;
}

TrainResult train(SfnModel& model, const Matrix& inputs, std::span<const double> targets, const TrainConfig& config) {
    if (model.count_weights() == 0) throw EmptyModel("model has no weights to train");
    if (targets.empty()) throw EmptyData("no training examples");
    BatchEvaluator evaluator(model, inputs, targets);
    Objective objective = [&](std::span<const double> w, std::span<double> g) {
        return evaluator.loss_and_gradient(w, g);
    };
    TrainResult result = steepest_descent(objective, model.flatten_weights(), config);
    model.load_weights(result.weight_snapshot);
    return result;
}

double mse(const SfnModel& model, const Matrix& inputs, std::span<const double> targets) {
    if (targets.empty()) throw EmptyData("no examples");
    BatchEvaluator evaluator(model, inputs, targets);
    return evaluator.loss(model.flatten_weights()) / static_cast<double>(targets.size());
}

LinkWeights init_weights(FunctionKind kind, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(-0.5, 0.5);
    std::uniform_real_distribution<double> power(0.5, 1.5);
    LinkWeights w;
    w.multiplier = unit(rng);
    switch (kind) {
    case FunctionKind::E1: w.shape = power(rng); break;
    case FunctionKind::E2: w.shape = unit(rng); break;
    case FunctionKind::E3: break;
    }
    return w;
}

} // namespace sfn
