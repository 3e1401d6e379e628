#include "sfn/grad_engine.hpp"

#include <cmath>
#include <quadmath.h>
#include <stdexcept>
#include <string>

#include "sfn/error.hpp"
#include "sfn/kernels.hpp"

namespace sfn {

namespace {

double trace_link(const FunctionLink& link, std::span<const double> input, EvalTrace& trace) {
    const std::size_t slot = trace.ids.size();
    trace.ids.push_back(link.id);
    trace.arguments.push_back(0.0);
    trace.outputs.push_back(0.0);
    double z = input[link.baseline_input];
    for (const auto& child : link.children) z += trace_link(child, input, trace);
    const double out = link_value(link.kind, link.weights, z);
    trace.arguments[slot] = z;
    trace.outputs[slot] = out;
    return out;
}

// Walks the tree in canonical order; `upstream` is dy/d(out_link).
void backward_link(const FunctionLink& link, const EvalTrace& trace, double upstream, std::size_t& slot,
                   std::size_t& offset, std::vector<double>& grad) {
    if (slot >= trace.ids.size() || trace.ids[slot] != link.id) throw TraceMismatch("trace does not match model");
    const LinkJet jet = link_jet(link.kind, link.weights, trace.arguments[slot]);
    ++slot;
    grad[offset++] = upstream * jet.d_multiplier;
    if (has_shape(link.kind)) grad[offset++] = upstream * jet.d_shape;
    const double to_children = upstream * jet.d_arg;
    for (const auto& child : link.children) backward_link(child, trace, to_children, slot, offset, grad);
}

void check_batch(const SfnModel& model, const Matrix& inputs, std::span<const double> targets) {
    if (inputs.rows() != targets.size()) throw LengthMismatch("inputs and targets differ in length");
    if (targets.empty()) throw EmptyData("empty batch");
    if (inputs.cols() != model.input_arity()) throw LengthMismatch("input width does not match model arity");
}

// The finite-difference oracle evaluates J in binary128: nested exponentials
// push J past 1e30 on some random trees, where a double-precision central
// difference of h = 1e-6 cancels to zero.
using Quad = __float128;

Quad quad_link(const FunctionLink& link, std::span<const double> input, std::span<const Quad> weights,
               std::size_t& offset) {
    const Quad w = weights[offset++];
    const Quad shape = has_shape(link.kind) ? weights[offset++] : 0;
    Quad z = input[link.baseline_input];
    for (const auto& child : link.children) z += quad_link(child, input, weights, offset);
    switch (link.kind) {
    case FunctionKind::E1: return w * powq(z * z + 1, shape);
    case FunctionKind::E2: return w * expq(shape * z);
    default: return w * logq(z * z + 1);
    }
}

Quad quad_loss(const SfnModel& model, const Matrix& inputs, std::span<const double> targets,
               std::span<const Quad> weights) {
    Quad J = 0;
    for (std::size_t m = 0; m < targets.size(); ++m) {
        std::size_t offset = 0;
        Quad y = 0;
        for (const auto& root : model.roots()) y += quad_link(root, inputs.row(m), weights, offset);
        const Quad e = y - targets[m];
        J += e * e;
    }
    return J;
}

void require_finite(const std::vector<double>& values) {
    for (double g : values)
        if (!std::isfinite(g)) throw NonFiniteResult("non-finite gradient entry");
}

} // namespace

TracedOutput forward_trace(const SfnModel& model, std::span<const double> input) {
    if (input.size() != model.input_arity()) throw LengthMismatch("input width does not match model arity");
    TracedOutput result;
    for (const auto& root : model.roots()) result.y += trace_link(root, input, result.trace);
    return result;
}

GradientVector backward(const SfnModel& model, const EvalTrace& trace, double residual_scale) {
    if (trace.ids.size() != model.link_count() || trace.arguments.size() != trace.ids.size())
        throw TraceMismatch("trace has " + std::to_string(trace.ids.size()) + " links, model has " +
                            std::to_string(model.link_count()));
    std::vector<double> dy(model.count_weights());
    std::size_t slot = 0, offset = 0;
    for (const auto& root : model.roots()) backward_link(root, trace, 1.0, slot, offset, dy);
    GradientVector out;
    out.values.resize(dy.size());
    for (std::size_t i = 0; i < dy.size(); ++i) out.values[i] = residual_scale * dy[i];
    require_finite(out.values);
    return out;
}

LossGradient batch_gradient(const SfnModel& model, const Matrix& inputs, std::span<const double> targets) {
    check_batch(model, inputs, targets);
    BatchEvaluator eval(model, inputs, targets);
    LossGradient out;
    out.gradient.values.resize(eval.weight_count());
    const auto weights = model.flatten_weights();
    out.J = eval.loss_and_gradient(weights, out.gradient.values);
    return out;
}

LossGradient batch_gradient_per_example(const SfnModel& model, const Matrix& inputs, std::span<const double> targets) {
    check_batch(model, inputs, targets);
    LossGradient out;
    out.gradient.values.assign(model.count_weights(), 0.0);
    for (std::size_t m = 0; m < targets.size(); ++m) {
        TracedOutput traced = forward_trace(model, inputs.row(m));
        const double e = traced.y - targets[m];
        out.J += e * e;
        const GradientVector g = backward(model, traced.trace, 2.0 * e);
        for (std::size_t i = 0; i < g.size(); ++i) out.gradient.values[i] += g[i];
    }
    if (!std::isfinite(out.J)) throw NonFiniteResult("non-finite loss");
    require_finite(out.gradient.values);
    return out;
}

double sum_squared_error(const SfnModel& model, const Matrix& inputs, std::span<const double> targets) {
    check_batch(model, inputs, targets);
    double J = 0.0;
    for (std::size_t m = 0; m < targets.size(); ++m) {
        const double e = eval_model(model, inputs.row(m)) - targets[m];
        J += e * e;
    }
    if (!std::isfinite(J)) throw NonFiniteResult("non-finite loss");
    return J;
}

GradientVector finite_diff_gradient(const SfnModel& model, const Matrix& inputs, std::span<const double> targets,
                                    double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
    check_batch(model, inputs, targets);
    sum_squared_error(model, inputs, targets); // same NonFiniteResult contract as the analytic route
    const std::vector<double> base = model.flatten_weights();
    std::vector<Quad> w(base.begin(), base.end());
    GradientVector out;
    out.values.resize(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        w[i] = Quad(base[i]) + h;
        const Quad up = quad_loss(model, inputs, targets, w);
        w[i] = Quad(base[i]) - h;
        const Quad down = quad_loss(model, inputs, targets, w);
        w[i] = base[i];
        out.values[i] = static_cast<double>((up - down) / (2 * Quad(h)));
    }
    return out;
}

// ---------------------------------------------------------------------------

BatchEvaluator::BatchEvaluator(const SfnModel& model, const Matrix& inputs, std::span<const double> targets)
    : m_(inputs.rows()), columns_(inputs.columns()), targets_(targets.begin(), targets.end()) {
    if (inputs.rows() != targets.size()) throw LengthMismatch("inputs and targets differ in length");
    if (inputs.cols() != model.input_arity()) throw LengthMismatch("input width does not match model arity");

    auto build = [&](auto& self, const FunctionLink& link) -> std::size_t {
        const std::size_t index = nodes_.size();
        nodes_.push_back(Node{link.kind, link.baseline_input, weight_count_, {}});
        weight_count_ += sfn::weight_count(link.kind);
        for (const auto& child : link.children) {
            const std::size_t c = self(self, child);
            nodes_[index].children.push_back(c);
        }
        return index;
    };
    for (const auto& root : model.roots()) roots_.push_back(build(build, root));

    const std::size_t n = nodes_.size() * m_;
    z_.resize(n);
    value_.resize(n);
    d_arg_.resize(n);
    d_mult_.resize(n);
    d_shape_.resize(n);
    r_.resize(n);
    y_.resize(m_);
    e_.resize(m_);
}

LinkWeights BatchEvaluator::weights_of(const Node& node, std::span<const double> weights) const {
    LinkWeights lw;
    lw.multiplier = weights[node.weight_offset];
    if (has_shape(node.kind)) lw.shape = weights[node.weight_offset + 1];
    return lw;
}

void BatchEvaluator::forward(std::size_t index, std::span<const double> weights, bool with_jets) {
    const auto& k = kernels::active();
    const Node& node = nodes_[index];
    auto z = slot(z_, index);
    const auto& column = columns_[node.baseline];
    std::copy(column.begin(), column.end(), z.begin());
    for (std::size_t c : node.children) {
        forward(c, weights, with_jets);
        k.add(z, slot(value_, c));
    }

    const LinkWeights lw = weights_of(node, weights);
    auto value = slot(value_, index);
    if (with_jets) {
        auto d_arg = slot(d_arg_, index);
        auto d_mult = slot(d_mult_, index);
        auto d_shape = slot(d_shape_, index);
        for (std::size_t m = 0; m < m_; ++m) {
            const LinkJet jet = link_jet(node.kind, lw, z[m]);
            value[m] = jet.value;
            d_arg[m] = jet.d_arg;
            d_mult[m] = jet.d_multiplier;
            d_shape[m] = jet.d_shape;
        }
    } else {
        for (std::size_t m = 0; m < m_; ++m) value[m] = link_value(node.kind, lw, z[m]);
    }
}

void BatchEvaluator::forward_all(std::span<const double> weights, bool with_jets) {
    const auto& k = kernels::active();
    k.fill(y_, 0.0);
    for (std::size_t root : roots_) {
        forward(root, weights, with_jets);
        k.add(y_, slot(value_, root));
    }
}

void BatchEvaluator::check_length(std::span<const double> weights) const {
    if (weights.size() != weight_count_)
        throw LengthMismatch("expected " + std::to_string(weight_count_) + " weights, got " +
                             std::to_string(weights.size()));
}

double BatchEvaluator::loss(std::span<const double> weights) {
    check_length(weights);
    forward_all(weights, false);
    const auto& k = kernels::active();
    k.sub(e_, y_, targets_);
    const double J = k.sum_sq(e_);
    if (!std::isfinite(J)) throw NonFiniteResult("non-finite loss");
    return J;
}

double BatchEvaluator::loss_and_gradient(std::span<const double> weights, std::span<double> gradient) {
    check_length(weights);
    if (gradient.size() != weight_count_) throw LengthMismatch("gradient buffer has the wrong length");
    forward_all(weights, true);
    const auto& k = kernels::active();
    k.sub(e_, y_, targets_);
    const double J = k.sum_sq(e_);
    if (!std::isfinite(J)) throw NonFiniteResult("non-finite loss");

    // r_j = 2 e * dy/d(out_j), pushed down the tree in canonical order.
    for (std::size_t root : roots_) k.scale(slot(r_, root), 2.0, e_);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& node = nodes_[i];
        auto r = slot(r_, i);
        gradient[node.weight_offset] = k.dot(r, slot(d_mult_, i));
        if (has_shape(node.kind)) gradient[node.weight_offset + 1] = k.dot(r, slot(d_shape_, i));
        for (std::size_t c : node.children) k.mul(slot(r_, c), r, slot(d_arg_, i));
    }
    for (double g : gradient)
        if (!std::isfinite(g)) throw NonFiniteResult("non-finite gradient entry");
    return J;
}

void BatchEvaluator::predict(std::span<const double> weights, std::span<double> out) {
    check_length(weights);
    if (out.size() != m_) throw LengthMismatch("prediction buffer has the wrong length");
    forward_all(weights, false);
    std::copy(y_.begin(), y_.end(), out.begin());
}

} // namespace sfn
