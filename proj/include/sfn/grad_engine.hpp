#pragma once

// Gradients of the squared-error objective J = sum_m (y(m) - d(m))^2 with
// respect to every link weight, by downward tree propagation:
//
//   dy/d(out_root)  = 1
//   dy/d(out_child) = dy/d(out_parent) * E'_parent(z_parent)
//   dy/d(omega)     = dy/d(out_link) * dE_link/d(omega)
//
// Gradient vectors use the canonical weight order of SfnModel::flatten_weights.

#include <cstdint>
#include <span>
#include <vector>

#include "sfn/expr_tree.hpp"
#include "sfn/link_math.hpp"
#include "sfn/matrix.hpp"

namespace sfn {

struct GradientVector {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

// Per-link argument z_j and output E(z_j) for one example, canonical order.
struct EvalTrace {
    std::vector<LinkId> ids;
    std::vector<double> arguments;
    std::vector<double> outputs;
};

struct TracedOutput {
    double y = 0.0;
    EvalTrace trace;
};

TracedOutput forward_trace(const SfnModel& model, std::span<const double> input);

// residual_scale * dy/d(omega) for every weight. Throws TraceMismatch when the
// trace was not produced by this model's structure.
GradientVector backward(const SfnModel& model, const EvalTrace& trace, double residual_scale);

struct LossGradient {
    double J = 0.0;
    GradientVector gradient;
};

// J (a sum, not a mean) and dJ/d(omega) = 2 sum_m e(m) dy(m)/d(omega),
// batched over examples with the active SIMD kernels.
LossGradient batch_gradient(const SfnModel& model, const Matrix& inputs, std::span<const double> targets);

// Same quantity through forward_trace/backward one example at a time,
// accumulated in example order.
LossGradient batch_gradient_per_example(const SfnModel& model, const Matrix& inputs, std::span<const double> targets);

// J by direct per-example evaluation.
double sum_squared_error(const SfnModel& model, const Matrix& inputs, std::span<const double> targets);

// Central differences (J(w+h) - J(w-h)) / 2h per weight. Throws
// std::invalid_argument for h <= 0.
GradientVector finite_diff_gradient(const SfnModel& model, const Matrix& inputs, std::span<const double> targets,
                                    double h);

// Structure-of-arrays evaluator for repeated loss/gradient calls on one
// structure and one data set. Weights are passed in canonical order so the
// trainer never rebuilds the tree.
class BatchEvaluator {
public:
    BatchEvaluator(const SfnModel& model, const Matrix& inputs, std::span<const double> targets);

    std::size_t weight_count() const { return weight_count_; }
    std::size_t example_count() const { return m_; }

    double loss(std::span<const double> weights);
    double loss_and_gradient(std::span<const double> weights, std::span<double> gradient);
    void predict(std::span<const double> weights, std::span<double> out);

private:
    struct Node {
        FunctionKind kind;
        std::size_t baseline;
        std::size_t weight_offset;
        std::vector<std::size_t> children;
    };

    std::span<double> slot(std::vector<double>& buf, std::size_t node) { return {buf.data() + node * m_, m_}; }
    LinkWeights weights_of(const Node& node, std::span<const double> weights) const;
    void forward(std::size_t node, std::span<const double> weights, bool with_jets);
    void forward_all(std::span<const double> weights, bool with_jets);
    void check_length(std::span<const double> weights) const;

    std::size_t m_;
    std::size_t weight_count_ = 0;
    std::vector<Node> nodes_;
    std::vector<std::size_t> roots_;
    std::vector<std::vector<double>> columns_;
    std::vector<double> targets_;

    std::vector<double> z_, value_, d_arg_, d_mult_, d_shape_, r_;
    std::vector<double> y_, e_;
};

} // namespace sfn
