#pragma once

#include <cmath>
#include <random>

#include "sfn/data_pipeline.hpp"
#include "sfn/structure_search.hpp"

namespace fixtures {

// y = 2 log(x0^2 + 1) + exp(0.5 x1) on points drawn uniformly from [-2, 2]^2.
inline sfn::Samples recovery_samples(std::size_t n, std::uint64_t seed = 2024) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    sfn::Samples s;
    s.X = sfn::Matrix(n, 2);
    s.d.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = u(rng), b = u(rng);
        s.X(i, 0) = a;
        s.X(i, 1) = b;
        s.d[i] = 2.0 * std::log(a * a + 1.0) + std::exp(0.5 * b);
    }
    return s;
}

// Scaled targets, 75/25 train/validation, no test rows.
inline sfn::Dataset recovery_dataset(std::size_t n = 200, std::uint64_t seed = 2024) {
    sfn::PartitionConfig split;
    split.test_fraction = 0.0;
    split.validation_fraction = 0.25;
    return sfn::make_regression_dataset(recovery_samples(n, seed), split, true);
}

// y = 2 log(x0^2 + 1) on a grid over [-2, 2], unscaled.
inline sfn::Dataset e3_dataset(std::size_t n = 60) {
    sfn::Samples s;
    s.X = sfn::Matrix(n, 1);
    s.d.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        // interleave so validation rows cover the whole range
        const double x = -2.0 + 4.0 * static_cast<double>((i * 37) % n) / static_cast<double>(n - 1);
        s.X(i, 0) = x;
        s.d[i] = 2.0 * std::log(x * x + 1.0);
    }
    sfn::PartitionConfig split;
    split.test_fraction = 0.0;
    return sfn::make_regression_dataset(s, split, false);
}

// Every accepted step improved validation MSE by more than a, every rejected
// step left the model hash unchanged, and the hash chain links consecutive
// entries. Returns an empty string on success, else the first violation.
inline std::string replay_trace(const sfn::SearchTrace& trace, const sfn::SfnModel& final_model, double a,
                                std::uint64_t start_hash) {
    std::uint64_t current = start_hash;
    for (const auto& e : trace.entries) {
        const std::string at = "step " + std::to_string(e.step) + " (" + e.action + " " + e.candidate + "): ";
        if (e.hash_before != current) return at + "hash_before does not continue the chain";
        if (e.action == "remove") {
            if (e.accepted) {
                if (!(e.val_mse_after <= e.val_mse_before + a)) return at + "removal exceeded the tolerance";
                current = e.hash_after;
            } else if (e.hash_after != e.hash_before) {
                return at + "rejected removal changed the model";
            }
            continue;
        }
        if (e.accepted) {
            if (!(e.val_mse_after < e.val_mse_before - a)) return at + "accepted without clearing the threshold";
            if (e.hash_after == e.hash_before) return at + "accepted step did not change the model";
            current = e.hash_after;
        } else {
            if (e.val_mse_after < e.val_mse_before - a) return at + "rejected a step that cleared the threshold";
            if (e.hash_after != e.hash_before) return at + "rejection did not restore the prior model";
        }
    }
    if (current != sfn::model_hash(final_model)) return "final model does not match the end of the chain";
    return {};
}

} // namespace fixtures
