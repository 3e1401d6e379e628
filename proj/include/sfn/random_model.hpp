#pragma once

#include <random>
#include <span>
#include <vector>

#include "sfn/expr_tree.hpp"
#include "sfn/matrix.hpp"

namespace sfn {

struct RandomModelSpec {
    std::size_t arity = 2;
    std::size_t max_depth = 3;
    std::size_t max_links = 8;
    double weight_lo = -2.0;
    double weight_hi = 2.0;
};

// A non-empty random tree: links are attached one by one to a uniformly chosen
// legal attachment point (root or any link below max depth).
SfnModel random_model(std::mt19937_64& rng, const RandomModelSpec& spec);

// Output magnitude above which a random case is redrawn. Central differences
// cannot resolve a weight whose effect on J is below double/quad resolution.
inline constexpr double kGradientCaseBound = 1e6;

struct GradientCase {
    SfnModel model;
    Matrix X;
    std::vector<double> d;
};

struct GradientCaseSpec {
    std::size_t max_arity = 4;
    std::size_t max_depth = 3;
    std::size_t batch = 16;
    double output_bound = kGradientCaseBound;
};

// Draws arity in [1, max_arity], depth in [1, max_depth], a random model and a
// batch in [-2, 2]. Draws whose model is not evaluable on the batch, or whose
// |y| exceeds output_bound, are discarded; `redraws` counts them.
GradientCase random_gradient_case(std::mt19937_64& rng, const GradientCaseSpec& spec, std::size_t* redraws = nullptr);

// True if eval_model(m, x) is finite and |y| <= bound.
bool evaluable(const SfnModel& m, std::span<const double> x, double bound = kGradientCaseBound);

// rows x cols matrix with entries uniform in [lo, hi].
Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double lo, double hi);

} // namespace sfn
