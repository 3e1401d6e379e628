#pragma once

// Greedy construction of the SFN tree.
//
//   FLK  forward, one link at a time (first candidate that clears the threshold)
//   FLY  forward, one complete layer at a time
//   FRS  FLK over a seeded random subset of ceil(rf * N) candidates per sweep
//   B    FLY, then backward-greedy pruning
//   FB   FLK with a pruning pass after every K accepted links, plus a final pass
//
// A structural change is kept only if validation MSE drops by more than the
// admission threshold a; otherwise the previous model (structure and weights)
// is restored.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sfn/expr_tree.hpp"
#include "sfn/matrix.hpp"
#include "sfn/trainer.hpp"

namespace sfn {

enum class Algorithm : std::uint8_t { FLK, FLY, FRS, B, FB };

std::string_view to_string(Algorithm algorithm);
// Accepts "FLK" or "FLK-SFN" style names, case-insensitive. Throws ConfigError.
Algorithm parse_algorithm(std::string_view text);

struct SearchConfig {
    Algorithm algorithm = Algorithm::FLK;
    std::size_t max_depth = 1;
    double admission_threshold = 1e-4;
    double rf = 0.5;                    // FRS only
    std::size_t k_prune_interval = 5;   // FB only
    // Cap on accepted additions over the whole search.
    std::size_t max_links = 32;
    std::uint64_t seed = 1;
    std::size_t candidate_epochs = 500;
    std::size_t topup_epochs = 2000;
    // Train every candidate of a sweep and admit the best one instead of the first.
    bool best_of_sweep = false;
    // Retrain surviving weights after each tentative removal during pruning.
    bool prune_retrain = true;
    TrainConfig train;

    void validate() const;
};

struct CandidateLink {
    Parent parent;
    FunctionKind kind = FunctionKind::E1;
    std::size_t baseline_input = 0;

    std::string describe() const;
};

// Every legal single-link addition: attachment points in canonical tree order
// (links below max depth), then the root; kinds E1, E2, E3; inputs ascending.
std::vector<CandidateLink> enumerate_candidates(const SfnModel& model);

// The next FLY layer: the full root set for an empty model, otherwise every
// kind/input child under each link on the deepest level (if below max depth).
std::vector<CandidateLink> layer_candidates(const SfnModel& model);

struct TraceEntry {
    std::size_t step = 0;
    std::string action;     // add, add_layer, remove
    std::string candidate;
    double train_J_before = 0.0;
    double train_J_after = 0.0;
    double val_mse_before = 0.0;
    double val_mse_after = 0.0;
    bool accepted = false;
    std::uint64_t hash_before = 0;
    std::uint64_t hash_after = 0;
};

struct SearchTrace {
    std::vector<TraceEntry> entries;

    std::string to_csv() const;
};

struct SearchResult {
    SfnModel model;
    SearchTrace trace;
};

// Strict: accept iff new_val < old_val - a.
bool admit(double old_val_mse, double new_val_mse, double a);
bool admit(const SfnModel& old_model, const SfnModel& new_model, const Samples& validation, double a);

SearchResult forward_link_by_link(const Samples& train, const Samples& validation, const SearchConfig& config);
SearchResult forward_layer_by_layer(const Samples& train, const Samples& validation, const SearchConfig& config);
SearchResult forward_reduced_random(const Samples& train, const Samples& validation, const SearchConfig& config);
SearchResult backward_build(const Samples& train, const Samples& validation, const SearchConfig& config);
SearchResult forward_backward(const Samples& train, const Samples& validation, const SearchConfig& config);

// Backward greedy: repeatedly commit the single removal (link plus subtree)
// with the lowest validation MSE while that MSE stays within a of the current.
SearchResult prune(SfnModel model, const Samples& train, const Samples& validation, const SearchConfig& config);

// Dispatches on config.algorithm.
SearchResult build_model(const Samples& train, const Samples& validation, const SearchConfig& config);

} // namespace sfn
