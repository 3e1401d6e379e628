#include "sfn/structure_search.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "sfn/error.hpp"
#include "sfn/grad_engine.hpp"

namespace sfn {

std::string_view to_string(Algorithm algorithm) {
    switch (algorithm) {
    case Algorithm::FLK: return "FLK";
    case Algorithm::FLY: return "FLY";
    case Algorithm::FRS: return "FRS";
    case Algorithm::B: return "B";
    case Algorithm::FB: return "FB";
    }
    return "?";
}

Algorithm parse_algorithm(std::string_view text) {
    std::string name;
    for (char c : text) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (name.size() > 4 && name.ends_with("-SFN")) name.resize(name.size() - 4);
    for (Algorithm a : {Algorithm::FLK, Algorithm::FLY, Algorithm::FRS, Algorithm::B, Algorithm::FB})
        if (name == to_string(a)) return a;
    throw ConfigError("unknown SFN algorithm '" + std::string(text) + "'");
}

void SearchConfig::validate() const {
    if (max_depth < 1) throw ConfigError("max_depth must be at least 1");
    if (!(admission_threshold >= 0.0)) throw ConfigError("admission threshold must be non-negative");
    if (algorithm == Algorithm::FRS && !(rf > 0.0 && rf <= 1.0)) throw ConfigError("rf must lie in (0, 1]");
    if (algorithm == Algorithm::FB && k_prune_interval < 1) throw ConfigError("k_prune_interval must be positive");
    if (candidate_epochs < 1 || topup_epochs < 1) throw ConfigError("training budgets must be positive");
    train.validate();
}

std::string CandidateLink::describe() const {
    std::string s = std::string(to_string(kind)) + "(x" + std::to_string(baseline_input) + ")@";
    return s + (parent ? "link" + std::to_string(parent->value) : "root");
}

std::vector<CandidateLink> enumerate_candidates(const SfnModel& model) {
    std::vector<Parent> points;
    for (LinkId id : model.link_ids())
        if (model.link_depth(id) < model.max_depth()) points.push_back(id);
    points.push_back(kRoot);

    std::vector<CandidateLink> out;
    for (const Parent& p : points)
        for (FunctionKind kind : kAllKinds)
            for (std::size_t i = 0; i < model.input_arity(); ++i) out.push_back({p, kind, i});
    return out;
}

std::vector<CandidateLink> layer_candidates(const SfnModel& model) {
    std::vector<CandidateLink> out;
    if (model.empty()) {
        for (FunctionKind kind : kAllKinds)
            for (std::size_t i = 0; i < model.input_arity(); ++i) out.push_back({kRoot, kind, i});
        return out;
    }
    const std::size_t frontier = model.depth();
    if (frontier >= model.max_depth()) return out;
    for (LinkId id : model.link_ids()) {
        if (model.link_depth(id) != frontier) continue;
        for (FunctionKind kind : kAllKinds)
            for (std::size_t i = 0; i < model.input_arity(); ++i) out.push_back({id, kind, i});
    }
    return out;
}

bool admit(double old_val_mse, double new_val_mse, double a) { return new_val_mse < old_val_mse - a; }

bool admit(const SfnModel& old_model, const SfnModel& new_model, const Samples& validation, double a) {
    return admit(mse(old_model, validation.X, validation.d), mse(new_model, validation.X, validation.d), a);
}

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(c)};
    return std::mt19937_64(seq);
}

// Stream tags keep the random sequences of different uses apart.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kSampleStream = 2;
constexpr std::uint64_t kLayerStream = 3;

struct Score {
    double train_J = std::numeric_limits<double>::infinity();
    double val_mse = std::numeric_limits<double>::infinity();
};

class Search {
public:
    Search(const Samples& train, const Samples& validation, const SearchConfig& config, SfnModel start)
        : train_(train), validation_(validation), config_(config), model_(std::move(start)) {
        config_.validate();
        if (train.empty() || validation.empty()) throw EmptyData("structure search needs train and validation rows");
        if (train.X.cols() != model_.input_arity() || validation.X.cols() != model_.input_arity())
            throw LengthMismatch("data width does not match model arity");
        current_ = score(model_);
    }

    SearchResult finish() { return {std::move(model_), std::move(trace_)}; }

    // FLK / FRS / FB. Returns when a sweep admits nothing or the link budget is spent.
    void forward(bool random_subset, bool interleave_prune) {
        std::size_t sweep = 0;
        std::size_t accepted = 0;
        while (added_ < config_.max_links) {
            std::vector<CandidateLink> all = enumerate_candidates(model_);
            std::vector<std::size_t> order(all.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            if (random_subset) order = sample(order, sweep);

            const bool grew = config_.best_of_sweep ? best_of_sweep(all, order, sweep) : first_improvement(all, order, sweep);
            ++sweep;
            if (!grew) break;
            ++accepted;
            if (interleave_prune && accepted % config_.k_prune_interval == 0) prune_all();
        }
    }

    // FLY.
    void layers() {
        std::size_t level = 0;
        while (true) {
            std::vector<CandidateLink> layer = layer_candidates(model_);
            if (layer.empty()) break;
            ++level;
            SfnModel candidate = model_;
            auto rng = stream(config_.seed, kLayerStream, level, 0);
            for (const auto& c : layer) candidate.add_link(c.parent, c.kind, c.baseline_input, init_weights(c.kind, rng));
            const Score after = fit(candidate, config_.candidate_epochs);
            const std::string what = "layer" + std::to_string(level) + "[" + std::to_string(layer.size()) + " links]";
            if (!record_addition("add_layer", what, candidate, after)) break;
        }
    }

    void prune_all() {
        while (!model_.empty()) {
            const std::uint64_t before_hash = model_hash(model_);
            std::optional<SfnModel> best_model;
            Score best;
            std::size_t best_entry = 0;
            for (LinkId id : model_.link_ids()) {
                SfnModel trial = model_;
                const FunctionLink removed = trial.remove_link(id);
                const Score after = config_.prune_retrain ? fit(trial, config_.candidate_epochs) : score(trial);
                TraceEntry entry = make_entry("remove", "link" + std::to_string(id.value) + ":" +
                                                            std::string(to_string(removed.kind)) + "(x" +
                                                            std::to_string(removed.baseline_input) + ")",
                                              after, before_hash);
                trace_.entries.push_back(entry);
                if (!best_model || after.val_mse < best.val_mse) {
                    best_model = std::move(trial);
                    best = after;
                    best_entry = trace_.entries.size() - 1;
                }
            }
            if (!best_model || !(best.val_mse <= current_.val_mse + config_.admission_threshold)) break;
            model_ = std::move(*best_model);
            current_ = best;
            // the commit happens after the whole round was scored
            TraceEntry committed = trace_.entries[best_entry];
            trace_.entries.erase(trace_.entries.begin() + static_cast<std::ptrdiff_t>(best_entry));
            committed.accepted = true;
            committed.hash_after = model_hash(model_);
            trace_.entries.push_back(std::move(committed));
            for (std::size_t i = best_entry; i < trace_.entries.size(); ++i) trace_.entries[i].step = i;
        }
    }

private:
    Score score(const SfnModel& model) const {
        Score s;
        try {
            s.train_J = mse(model, train_.X, train_.d) * static_cast<double>(train_.size());
            s.val_mse = mse(model, validation_.X, validation_.d);
        } catch (const NonFiniteResult&) {
            s = Score{};
        }
        return s;
    }

    // Trains all weights of `model` in place; a model that cannot be evaluated
    // scores +inf and is never admitted.
    Score fit(SfnModel& model, std::size_t epochs) const {
        if (model.count_weights() == 0) return score(model);
        TrainConfig tc = config_.train;
        tc.max_epochs = epochs;
        try {
            train(model, train_.X, train_.d, tc);
        } catch (const NonFiniteResult&) {
            return Score{};
        }
        return score(model);
    }

    std::vector<std::size_t> sample(const std::vector<std::size_t>& order, std::size_t sweep) const {
        const std::size_t n = order.size();
        const auto take = std::min<std::size_t>(n, static_cast<std::size_t>(std::ceil(config_.rf * static_cast<double>(n) - 1e-12)));
        std::vector<std::size_t> picked = order;
        auto rng = stream(config_.seed, kSampleStream, sweep, 0);
        // Partial Fisher-Yates: the first `take` slots are a uniform draw without replacement.
        for (std::size_t i = 0; i < take; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, n - 1);
            std::swap(picked[i], picked[pick(rng)]);
        }
        picked.resize(take);
        std::sort(picked.begin(), picked.end());
        return picked;
    }

    SfnModel with_candidate(const CandidateLink& c, std::size_t sweep, std::size_t index) const {
        SfnModel candidate = model_;
        auto rng = stream(config_.seed, kInitStream, sweep, index);
        candidate.add_link(c.parent, c.kind, c.baseline_input, init_weights(c.kind, rng));
        return candidate;
    }

    bool first_improvement(const std::vector<CandidateLink>& all, const std::vector<std::size_t>& order,
                           std::size_t sweep) {
        for (std::size_t index : order) {
            SfnModel candidate = with_candidate(all[index], sweep, index);
            const Score after = fit(candidate, config_.candidate_epochs);
            if (record_addition("add", all[index].describe(), candidate, after)) return true;
        }
        return false;
    }

    bool best_of_sweep(const std::vector<CandidateLink>& all, const std::vector<std::size_t>& order,
                       std::size_t sweep) {
        std::optional<SfnModel> best_model;
        Score best;
        std::size_t best_index = 0;
        for (std::size_t index : order) {
            SfnModel candidate = with_candidate(all[index], sweep, index);
            const Score after = fit(candidate, config_.candidate_epochs);
            if (!best_model || after.val_mse < best.val_mse) {
                best_model = std::move(candidate);
                best = after;
                best_index = index;
            }
        }
        if (!best_model) return false;
        return record_addition("add", all[best_index].describe(), *best_model, best);
    }

    TraceEntry make_entry(std::string action, std::string what, const Score& after, std::uint64_t before_hash) const {
        TraceEntry e;
        e.step = trace_.entries.size();
        e.action = std::move(action);
        e.candidate = std::move(what);
        e.train_J_before = current_.train_J;
        e.val_mse_before = current_.val_mse;
        e.train_J_after = after.train_J;
        e.val_mse_after = after.val_mse;
        e.hash_before = before_hash;
        e.hash_after = before_hash;
        return e;
    }

    // Admission test plus top-up training for an accepted structure.
    bool record_addition(std::string action, std::string what, SfnModel& candidate, const Score& after) {
        const std::uint64_t before_hash = model_hash(model_);
        TraceEntry entry = make_entry(std::move(action), std::move(what), after, before_hash);
        entry.accepted = admit(current_.val_mse, after.val_mse, config_.admission_threshold);
        if (entry.accepted) {
            Score final_score = after;
            SfnModel topped = candidate;
            const Score topped_score = fit(topped, config_.topup_epochs);
            if (topped_score.val_mse <= after.val_mse) {
                candidate = std::move(topped);
                final_score = topped_score;
            }
            model_ = std::move(candidate);
            current_ = final_score;
            ++added_;
            entry.train_J_after = final_score.train_J;
            entry.val_mse_after = final_score.val_mse;
            entry.hash_after = model_hash(model_);
        }
        trace_.entries.push_back(entry);
        return entry.accepted;
    }

    const Samples& train_;
    const Samples& validation_;
    SearchConfig config_;
    SfnModel model_;
    Score current_;
    SearchTrace trace_;
    std::size_t added_ = 0;
};

SfnModel empty_model(const Samples& train, const SearchConfig& config) {
    if (train.empty()) throw EmptyData("no training rows");
    return SfnModel(train.X.cols(), config.max_depth);
}

} // namespace

std::string SearchTrace::to_csv() const {
    std::string out =
        "step,action,candidate,train_J_before,train_J_after,val_mse_before,val_mse_after,accepted,hash_before,hash_after\n";
    for (const auto& e : entries) {
        out += std::to_string(e.step) + "," + e.action + "," + e.candidate + "," + fmt(e.train_J_before) + "," +
               fmt(e.train_J_after) + "," + fmt(e.val_mse_before) + "," + fmt(e.val_mse_after) + "," +
               (e.accepted ? "1" : "0") + "," + std::to_string(e.hash_before) + "," + std::to_string(e.hash_after) +
               "\n";
    }
    return out;
}

SearchResult forward_link_by_link(const Samples& train, const Samples& validation, const SearchConfig& config) {
    Search search(train, validation, config, empty_model(train, config));
    search.forward(false, false);
    return search.finish();
}

SearchResult forward_reduced_random(const Samples& train, const Samples& validation, const SearchConfig& config) {
    SearchConfig c = config;
    c.algorithm = Algorithm::FRS;
    Search search(train, validation, c, empty_model(train, c));
    search.forward(true, false);
    return search.finish();
}

SearchResult forward_layer_by_layer(const Samples& train, const Samples& validation, const SearchConfig& config) {
    Search search(train, validation, config, empty_model(train, config));
    search.layers();
    return search.finish();
}

SearchResult prune(SfnModel model, const Samples& train, const Samples& validation, const SearchConfig& config) {
    Search search(train, validation, config, std::move(model));
    search.prune_all();
    return search.finish();
}

SearchResult backward_build(const Samples& train, const Samples& validation, const SearchConfig& config) {
    Search search(train, validation, config, empty_model(train, config));
    search.layers();
    search.prune_all();
    return search.finish();
}

SearchResult forward_backward(const Samples& train, const Samples& validation, const SearchConfig& config) {
    SearchConfig c = config;
    c.algorithm = Algorithm::FB;
    Search search(train, validation, c, empty_model(train, c));
    search.forward(false, true);
    search.prune_all();
    return search.finish();
}

SearchResult build_model(const Samples& train, const Samples& validation, const SearchConfig& config) {
    switch (config.algorithm) {
    case Algorithm::FLK: return forward_link_by_link(train, validation, config);
    case Algorithm::FLY: return forward_layer_by_layer(train, validation, config);
    case Algorithm::FRS: return forward_reduced_random(train, validation, config);
    case Algorithm::B: return backward_build(train, validation, config);
    case Algorithm::FB: return forward_backward(train, validation, config);
    }
    throw ConfigError("unknown algorithm");
}

} // namespace sfn
