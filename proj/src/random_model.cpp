#include "sfn/random_model.hpp"
#include "sfn/error.hpp"

#include <cmath>

namespace sfn {

SfnModel random_model(std::mt19937_64& rng, const RandomModelSpec& spec) {
    SfnModel model(spec.arity, spec.max_depth);
    std::uniform_int_distribution<std::size_t> links(1, spec.max_links);
    std::uniform_int_distribution<int> kind(0, 2);
    std::uniform_int_distribution<std::size_t> input(0, spec.arity - 1);
    std::uniform_real_distribution<double> weight(spec.weight_lo, spec.weight_hi);

    const std::size_t n = links(rng);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<Parent> points{kRoot};
        for (LinkId id : model.link_ids())
            if (model.link_depth(id) < spec.max_depth) points.push_back(id);
        std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
        const Parent where = points[pick(rng)];
        const auto k = static_cast<FunctionKind>(kind(rng));
        LinkWeights w;
        w.multiplier = weight(rng);
        if (has_shape(k)) w.shape = weight(rng);
        model.add_link(where, k, input(rng), w);
    }
    return model;
}

bool evaluable(const SfnModel& m, std::span<const double> x, double bound) {
    try {
        const double y = eval_model(m, x);
        return std::isfinite(y) && std::fabs(y) <= bound;
    } catch (const NonFiniteResult&) {
        return false;
    }
}

GradientCase random_gradient_case(std::mt19937_64& rng, const GradientCaseSpec& spec, std::size_t* redraws) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (;;) {
        RandomModelSpec ms;
        ms.arity = 1 + rng() % spec.max_arity;
        ms.max_depth = 1 + rng() % spec.max_depth;
        GradientCase c{random_model(rng, ms), random_matrix(rng, spec.batch, ms.arity, -2.0, 2.0),
                       std::vector<double>(spec.batch)};
        for (double& v : c.d) v = u(rng);
        bool ok = true;
        for (std::size_t r = 0; r < spec.batch && ok; ++r) ok = evaluable(c.model, c.X.row(r), spec.output_bound);
        if (ok) return c;
        if (redraws) ++*redraws;
    }
}

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = u(rng);
    return m;
}

} // namespace sfn
