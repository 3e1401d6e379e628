#pragma once

// Value and partial derivatives of one elementary function at argument z.
// Shared by the per-example and batched evaluators so both round identically.

#include <cmath>

#include "sfn/error.hpp"
#include "sfn/expr_tree.hpp"

namespace sfn {

// |alpha * z| beyond this overflows exp() in double precision.
inline constexpr double kMaxExponent = 700.0;

struct LinkJet {
    double value = 0.0;
    double d_arg = 0.0;        // dE/dz
    double d_multiplier = 0.0; // dE/dw, dE/dq or dE/dp
    double d_shape = 0.0;      // dE/dv or dE/dalpha; 0 for E3
};

[[noreturn]] void throw_non_finite(FunctionKind kind, double z);

inline double link_value(FunctionKind kind, const LinkWeights& weights, double z) {
    double value;
    switch (kind) {
    case FunctionKind::E1:
        value = weights.multiplier * std::pow(z * z + 1.0, *weights.shape);
        break;
    case FunctionKind::E2: {
        const double exponent = *weights.shape * z;
        if (!(std::fabs(exponent) <= kMaxExponent)) throw_non_finite(kind, z);
        value = weights.multiplier * std::exp(exponent);
        break;
    }
    default:
        value = weights.multiplier * std::log(z * z + 1.0);
        break;
    }
    if (!std::isfinite(value)) throw_non_finite(kind, z);
    return value;
}

inline LinkJet link_jet(FunctionKind kind, const LinkWeights& weights, double z) {
    LinkJet jet;
    const double w = weights.multiplier;
    switch (kind) {
    case FunctionKind::E1: {
        const double v = *weights.shape;
        const double t = z * z + 1.0;
        const double power = std::pow(t, v);
        jet.value = w * power;
        jet.d_multiplier = power;
        jet.d_shape = jet.value * std::log(t);
        // 2 w v z (z^2+1)^(v-1)
        jet.d_arg = 2.0 * w * v * z * (power / t);
        break;
    }
    case FunctionKind::E2: {
        const double alpha = *weights.shape;
        const double exponent = alpha * z;
        if (!(std::fabs(exponent) <= kMaxExponent)) throw_non_finite(kind, z);
        const double e = std::exp(exponent);
        jet.value = w * e;
        jet.d_multiplier = e;
        jet.d_shape = w * z * e;
        jet.d_arg = w * alpha * e;
        break;
    }
    default: {
        const double t = z * z + 1.0;
        const double lt = std::log(t);
        jet.value = w * lt;
        jet.d_multiplier = lt;
        jet.d_arg = 2.0 * w * z / t;
        break;
    }
    }
    if (!std::isfinite(jet.value) || !std::isfinite(jet.d_arg) || !std::isfinite(jet.d_multiplier) ||
        !std::isfinite(jet.d_shape))
        throw_non_finite(kind, z);
    return jet;
}

} // namespace sfn
