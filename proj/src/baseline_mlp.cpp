#include "sfn/baseline_mlp.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "sfn/error.hpp"
#include "sfn/kernels.hpp"

namespace sfn {

std::size_t mlp_weight_count(std::size_t inputs, std::size_t hidden) {
    if (inputs == 0) throw ConfigError("MLP needs at least one input");
    if (hidden == 0) throw ConfigError("MLP needs at least one hidden unit");
    return inputs * hidden + hidden + 1;
}

std::size_t mlp_weight_count(const MlpModel& model) {
    return mlp_weight_count(model.input_count(), model.hidden_count());
}

MlpModel::MlpModel(std::size_t inputs, std::size_t hidden)
    : inputs_(inputs), hidden_(hidden), weights_(mlp_weight_count(inputs, hidden), 0.0) {}

void MlpModel::set_weights(std::span<const double> w) {
    if (w.size() != weights_.size()) throw LengthMismatch("MLP weight vector has the wrong length");
    weights_.assign(w.begin(), w.end());
}

void MlpModel::randomize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-0.5, 0.5);
    for (double& w : weights_) w = unit(rng);
}

namespace {

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

struct Layout {
    std::size_t p, h;
    std::size_t hidden_weight(std::size_t unit, std::size_t input) const { return unit * p + input; }
    std::size_t out_weight(std::size_t unit) const { return h * p + unit; }
    std::size_t out_bias() const { return h * p + h; }
};

// Batched forward/backward over example columns.
class MlpBatch {
public:
    MlpBatch(const MlpModel& shape, const Matrix& inputs, std::span<const double> targets)
        : lay_{shape.input_count(), shape.hidden_count()}, m_(inputs.rows()), columns_(inputs.columns()),
          targets_(targets.begin(), targets.end()), act_(lay_.h * m_), y_(m_), e_(m_), delta_(m_) {
        if (inputs.rows() != targets.size()) throw LengthMismatch("inputs and targets differ in length");
        if (inputs.cols() != shape.input_count()) throw LengthMismatch("input width does not match the MLP");
        if (targets.empty()) throw EmptyData("no examples");
    }

    void forward(std::span<const double> w) {
        const auto& k = kernels::active();
        k.fill(y_, w[lay_.out_bias()]);
        for (std::size_t u = 0; u < lay_.h; ++u) {
            auto a = hidden(u);
            k.fill(a, 0.0);
            for (std::size_t i = 0; i < lay_.p; ++i) k.axpy(a, w[lay_.hidden_weight(u, i)], columns_[i]);
            for (double& x : a) x = sigmoid(x);
            k.axpy(y_, w[lay_.out_weight(u)], a);
        }
    }

    double loss(std::span<const double> w) {
        forward(w);
        const auto& k = kernels::active();
        k.sub(e_, y_, targets_);
        const double J = k.sum_sq(e_);
        if (!std::isfinite(J)) throw NonFiniteResult("non-finite MLP loss");
        return J;
    }

    double loss_and_gradient(std::span<const double> w, std::span<double> g) {
        const double J = loss(w);
        const auto& k = kernels::active();
        // e_ becomes dJ/dy = 2e.
        k.scale(e_, 2.0, e_);
        g[lay_.out_bias()] = k.sum(e_);
        for (std::size_t u = 0; u < lay_.h; ++u) {
            auto s = hidden(u);
            g[lay_.out_weight(u)] = k.dot(e_, s);
            const double v = w[lay_.out_weight(u)];
            for (std::size_t m = 0; m < m_; ++m) delta_[m] = e_[m] * v * (s[m] * (1.0 - s[m]));
            for (std::size_t i = 0; i < lay_.p; ++i) g[lay_.hidden_weight(u, i)] = k.dot(delta_, columns_[i]);
        }
        for (double x : g)
            if (!std::isfinite(x)) throw NonFiniteResult("non-finite MLP gradient");
        return J;
    }

    std::span<const double> outputs() const { return y_; }

private:
    std::span<double> hidden(std::size_t u) { return {act_.data() + u * m_, m_}; }

    Layout lay_;
    std::size_t m_;
    std::vector<std::vector<double>> columns_;
    std::vector<double> targets_;
    std::vector<double> act_, y_, e_, delta_;
};

} // namespace

double MlpModel::predict(std::span<const double> input) const {
    if (input.size() != inputs_) throw LengthMismatch("input width does not match the MLP");
    const Layout lay{inputs_, hidden_};
    double y = weights_[lay.out_bias()];
    for (std::size_t u = 0; u < hidden_; ++u) {
        double a = 0.0;
        for (std::size_t i = 0; i < inputs_; ++i) a += weights_[lay.hidden_weight(u, i)] * input[i];
        y += weights_[lay.out_weight(u)] * sigmoid(a);
    }
    return y;
}

std::vector<double> MlpModel::predict(const Matrix& inputs) const {
    std::vector<double> out(inputs.rows());
    for (std::size_t r = 0; r < inputs.rows(); ++r) out[r] = predict(inputs.row(r));
    return out;
}

double mlp_loss_and_gradient(const MlpModel& model, const Matrix& inputs, std::span<const double> targets,
                             std::span<double> gradient) {
    if (gradient.size() != model.weights().size()) throw LengthMismatch("gradient buffer has the wrong length");
    MlpBatch batch(model, inputs, targets);
    return batch.loss_and_gradient(model.weights(), gradient);
}

double mlp_mse(const MlpModel& model, const Matrix& inputs, std::span<const double> targets) {
    MlpBatch batch(model, inputs, targets);
    return batch.loss(model.weights()) / static_cast<double>(targets.size());
}

std::vector<double> mlp_finite_diff_gradient(const MlpModel& model, const Matrix& inputs,
                                             std::span<const double> targets, double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    std::vector<double> w(model.weights().begin(), model.weights().end());
    std::vector<double> out(w.size());
    MlpModel probe = model;
    auto J = [&](std::span<const double> weights) {
        probe.set_weights(weights);
        double acc = 0.0;
        for (std::size_t r = 0; r < inputs.rows(); ++r) {
            const double e = probe.predict(inputs.row(r)) - targets[r];
            acc += e * e;
        }
        return acc;
    };
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double base = w[i];
        w[i] = base + h;
        const double up = J(w);
        w[i] = base - h;
        const double down = J(w);
        w[i] = base;
        out[i] = (up - down) / (2.0 * h);
    }
    return out;
}

MlpFit mlp_train_bbp(const Samples& train, const MlpConfig& config) {
    if (train.empty()) throw EmptyData("no training rows");
    MlpModel model(train.X.cols(), config.hidden);
    model.randomize(config.train.seed);
    MlpFit fit{model, {}, 0, 0.0};
    if (config.train.max_epochs == 0) {
        fit.result.weight_snapshot.assign(model.weights().begin(), model.weights().end());
        return fit;
    }
    MlpBatch batch(model, train.X, train.d);
    Objective objective = [&](std::span<const double> w, std::span<double> g) { return batch.loss_and_gradient(w, g); };
    fit.result = steepest_descent(objective, {model.weights().begin(), model.weights().end()}, config.train);
    fit.model.set_weights(fit.result.weight_snapshot);
    return fit;
}

MlpFit mlp_train_esbp(const Samples& train, const Samples& validation, const MlpConfig& config) {
    if (train.empty() || validation.empty()) throw EmptyData("ES-BP needs train and validation rows");
    MlpModel model(train.X.cols(), config.hidden);
    model.randomize(config.train.seed);
    MlpFit fit{model, {}, 0, 0.0};

    MlpBatch batch(model, train.X, train.d);
    MlpBatch val(model, validation.X, validation.d);
    const double scale = 1.0 / static_cast<double>(validation.size());
    fit.best_validation_mse = val.loss(model.weights()) * scale;
    std::vector<double> best(model.weights().begin(), model.weights().end());
    if (config.train.max_epochs == 0) {
        fit.result.weight_snapshot = best;
        return fit;
    }

    std::size_t since_best = 0;
    EpochObserver observer = [&](std::size_t epoch, std::span<const double> w, double) {
        double v;
        try {
            v = val.loss(w) * scale;
        } catch (const NonFiniteResult&) {
            v = std::numeric_limits<double>::infinity();
        }
        if (v < fit.best_validation_mse) {
            fit.best_validation_mse = v;
            fit.best_epoch = epoch + 1;
            best.assign(w.begin(), w.end());
            since_best = 0;
        } else {
            ++since_best;
        }
        return config.patience > 0 && since_best >= config.patience;
    };
    Objective objective = [&](std::span<const double> w, std::span<double> g) { return batch.loss_and_gradient(w, g); };
    // ES-BP runs until the validation rule stops it, not on a training plateau.
    TrainConfig tc = config.train;
    tc.patience_epochs = 0;
    fit.result = steepest_descent(objective, best, tc, observer);
    fit.model.set_weights(best);
    return fit;
}

HiddenSweep mlp_hidden_sweep(const Samples& train, const Samples& validation, const MlpConfig& config,
                             std::span<const std::size_t> hidden_counts) {
    HiddenSweep sweep;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t h : hidden_counts) {
        MlpConfig c = config;
        c.hidden = h;
        const MlpFit fit = mlp_train_bbp(train, c);
        double v;
        try {
            v = mlp_mse(fit.model, validation.X, validation.d);
        } catch (const NonFiniteResult&) {
            v = std::numeric_limits<double>::infinity();
        }
        sweep.validation_mse.emplace_back(h, v);
        if (v < best) {
            best = v;
            sweep.best_hidden = h;
        }
    }
    return sweep;
}

} // namespace sfn
