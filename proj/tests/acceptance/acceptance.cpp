// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fail. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "expr_oracle.hpp"
#include "fixtures.hpp"
#include "sfn/baseline_mlp.hpp"
#include "sfn/data_pipeline.hpp"
#include "sfn/grad_engine.hpp"
#include "sfn/harness.hpp"
#include "sfn/kernels.hpp"
#include "sfn/random_model.hpp"
#include "sfn/structure_search.hpp"

using namespace sfn;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<double> uniform_vec(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

std::size_t roots_of(const SfnModel& m, FunctionKind kind) {
    std::size_t n = 0;
    for (const auto& r : m.roots()) n += r.kind == kind;
    return n;
}

// ---------------------------------------------------------------------------

Outcome gradient_correctness() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    double worst = 0.0;
    std::size_t redraws = 0;
    for (int c = 0; c < 200; ++c) {
        const GradientCase g = random_gradient_case(rng, {}, &redraws);
        const auto a = batch_gradient(g.model, g.X, g.d);
        const auto n = finite_diff_gradient(g.model, g.X, g.d, 1e-6);
        for (std::size_t i = 0; i < n.size(); ++i)
            worst = std::max(worst, std::fabs(a.gradient[i] - n[i]) /
                                        (std::max(std::fabs(a.gradient[i]), std::fabs(n[i])) + 1e-9));
    }
    const double secs = seconds_since(t0);
    return {worst < 1e-5 && secs < 30.0,
            fmt("max rel error %.3e (< 1e-5), %.2f s (< 30 s), %zu non-evaluable draws redrawn", worst, secs, redraws)};
}

Outcome smooth_transition() {
    std::mt19937_64 rng(777);
    double worst = 0.0;
    int skipped = 0;
    for (int c = 0; c < 100; ++c) {
        RandomModelSpec spec;
        spec.arity = 1 + rng() % 4;
        SfnModel m = random_model(rng, spec);
        std::vector<Parent> points{kRoot};
        for (LinkId id : m.link_ids())
            if (m.link_depth(id) < m.max_depth()) points.push_back(id);
        const Parent where = points[rng() % points.size()];
        const FunctionKind kind = kAllKinds[rng() % 3];
        LinkWeights w = init_weights(kind, rng);
        w.multiplier = 0.0;
        SfnModel grown = m;
        grown.add_link(where, kind, rng() % spec.arity, w);
        for (int i = 0; i < 20; ++i) {
            const auto x = uniform_vec(rng, spec.arity, -2.0, 2.0);
            if (!evaluable(m, x, HUGE_VAL) || !evaluable(grown, x, HUGE_VAL)) {
                ++skipped;
                continue;
            }
            const double y = eval_model(m, x);
            worst = std::max(worst, std::fabs(eval_model(grown, x) - y) / (1.0 + std::fabs(y)));
        }
    }
    return {worst <= 1e-15, fmt("max |dy|/(1+|y|) = %.3e (<= 1e-15) over 100 x 20, %d non-evaluable inputs skipped", worst,
                                  skipped)};
}

// Results of criterion 3, reused by 4 and 5.
struct RecoveryRun {
    SearchResult result;
    double train_mse = 0.0;
    double seconds = 0.0;
};

const Dataset& recovery_data() {
    static const Dataset data = fixtures::recovery_dataset();
    return data;
}

RecoveryRun recovery_run(Algorithm alg, std::uint64_t seed) {
    static std::map<std::pair<int, std::uint64_t>, RecoveryRun> cache;
    const auto key = std::make_pair(static_cast<int>(alg), seed);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    const Dataset& data = recovery_data();
    const Samples train = data.subset(Role::Train), validation = data.subset(Role::Validation);
    SearchConfig cfg;
    cfg.algorithm = alg;
    cfg.seed = seed;
    cfg.train.seed = seed;
    const auto t0 = Clock::now();
    RecoveryRun run{build_model(train, validation, cfg), 0.0, 0.0};
    run.seconds = seconds_since(t0);
    run.train_mse = mse(run.result.model, train.X, train.d);
    cache.emplace(key, run);
    return run;
}

Outcome in_class_recovery() {
    bool ok = true;
    std::string detail;
    for (Algorithm alg : {Algorithm::FLK, Algorithm::B, Algorithm::FB}) {
        const RecoveryRun r = recovery_run(alg, 1);
        const std::size_t e3 = roots_of(r.result.model, FunctionKind::E3);
        const std::size_t e2 = roots_of(r.result.model, FunctionKind::E2);
        const bool pass = r.train_mse < 1e-3 && e3 >= 1 && e2 >= 1 && r.seconds < 120.0;
        ok = ok && pass;
        detail += fmt("%s%s: train MSE %.2e, E3 roots %zu, E2 roots %zu, %zu weights, %.1f s%s",
                      detail.empty() ? "" : "; ", std::string(to_string(alg)).c_str(), r.train_mse, e3, e2,
                      r.result.model.count_weights(), r.seconds, pass ? "" : " [fail]");
    }
    return {ok, detail};
}

Outcome admission_soundness() {
    const double a = SearchConfig{}.admission_threshold;
    std::size_t entries = 0, accepted = 0;
    for (Algorithm alg : {Algorithm::FLK, Algorithm::B, Algorithm::FB}) {
        const RecoveryRun r = recovery_run(alg, 1);
        const std::string problem = fixtures::replay_trace(r.result.trace, r.result.model, a, model_hash(SfnModel(2, 1)));
        if (!problem.empty()) return {false, std::string(to_string(alg)) + ": " + problem};
        entries += r.result.trace.entries.size();
        for (const auto& e : r.result.trace.entries) accepted += e.accepted;
    }
    return {true, fmt("%zu trace entries replayed (%zu accepted), hash chain intact", entries, accepted)};
}

Outcome sparsity_ordering() {
    std::size_t b_ok = 0, fb_ok = 0;
    std::string pairs;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const std::size_t fly = recovery_run(Algorithm::FLY, seed).result.model.count_weights();
        const std::size_t b = recovery_run(Algorithm::B, seed).result.model.count_weights();
        const std::size_t flk = recovery_run(Algorithm::FLK, seed).result.model.count_weights();
        const std::size_t fb = recovery_run(Algorithm::FB, seed).result.model.count_weights();
        b_ok += b <= fly;
        fb_ok += fb <= flk;
        pairs += fmt("%s[B %zu/FLY %zu, FB %zu/FLK %zu]", pairs.empty() ? "" : " ", b, fly, fb, flk);
    }
    return {b_ok == 5 && fb_ok >= 4, fmt("B<=FLY %zu/5, FB<=FLK %zu/5 (>= 4): ", b_ok, fb_ok) + pairs};
}

Outcome mlp_weight_identity() {
    const std::size_t h[] = {3, 6, 9, 12, 15};
    const std::size_t expected[] = {16, 31, 46, 61, 76};
    std::string got;
    bool ok = true;
    for (std::size_t i = 0; i < 5; ++i) {
        const std::size_t n = mlp_weight_count(4, h[i]);
        ok = ok && n == expected[i];
        got += fmt("%sh=%zu:%zu", got.empty() ? "" : " ", h[i], n);
    }
    return {ok, got};
}

Outcome pipeline_counts() {
    const TimeSeries daily = synth_series({});
    const TimeSeries ten = block_average(daily, 10);
    const TimeSeries thirty = block_average(daily, 30);
    Dataset rows;
    rows.X = Matrix(ten.size(), 1);
    rows.d = ten.values;
    rows.target_index.resize(ten.size());
    for (std::size_t i = 0; i < ten.size(); ++i) rows.target_index[i] = i;
    partition(rows, {});
    const std::size_t first = rows.partition.train.size() + rows.partition.validation.size();
    const std::size_t second = rows.partition.test.size();
    const bool ok = daily.size() == 3600 && ten.size() == 360 && first == 180 && second == 180 && thirty.size() == 120 &&
                    rows.partition.train.size() == 135 && rows.partition.validation.size() == 45;
    return {ok, fmt("3600 -> block10 %zu (split %zu/%zu, train %zu/validation %zu), block30 %zu", ten.size(), first,
                    second, rows.partition.train.size(), rows.partition.validation.size(), thirty.size())};
}

std::map<std::string, std::string> read_dir(const std::filesystem::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::ifstream in(entry.path(), std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        files[entry.path().filename().string()] = s.str();
    }
    return files;
}

Outcome forecast_harness() {
    ExperimentConfig cfg;  // 3600 daily points, block 10 -> 360, all seven algorithms, 5 runs
    const auto base = std::filesystem::temp_directory_path() / "sfn_acceptance_harness";
    std::filesystem::remove_all(base);

    const auto t0 = Clock::now();
    const RunReport report = run_experiment(cfg);
    const double secs = seconds_since(t0);
    emit_report(report, base / "first");
    emit_report(run_experiment(cfg), base / "second");
    const auto first = read_dir(base / "first"), second = read_dir(base / "second");
    const bool identical = first == second && !first.empty();

    bool complete = report.rows.size() == 7;
    double sfn_weights = 0.0;
    std::size_t sfn_rows = 0, failures = 0;
    for (const auto& row : report.rows) {
        complete = complete && row.runs.size() == cfg.runs;
        failures += row.failed;
        if (row.algorithm != "B-BP" && row.algorithm != "ES-BP") {
            sfn_weights += row.avg_weights;
            ++sfn_rows;
        }
    }
    complete = complete && failures == 0;
    const double avg = sfn_rows ? sfn_weights / static_cast<double>(sfn_rows) : NAN;
    const double mlp = static_cast<double>(mlp_weight_count(cfg.forecast.lags, cfg.mlp.hidden));
    bool each_below = true;
    std::string per_row;
    for (const auto& row : report.rows) {
        if (row.algorithm == "B-BP" || row.algorithm == "ES-BP") continue;
        each_below = each_below && row.avg_weights < mlp;
        per_row += fmt(" %s=%.1f", row.algorithm.c_str(), row.avg_weights);
    }
    std::filesystem::remove_all(base);
    const bool ok = complete && identical && avg < mlp && secs < 600.0;
    return {ok, fmt("%zu rows x %zu runs, %zu failed cells, %zu files byte-identical: %s, SFN avg weights %.1f "
                    "(< %.0f; per row%s), %.0f s (< 600 s)",
                    report.rows.size(), cfg.runs, failures, first.size(), identical ? "yes" : "no", avg, mlp,
                    per_row.c_str(), secs)};
}

Outcome multi_step_degradation() {
    double mse[3];
    for (std::size_t k = 1; k <= 3; ++k) {
        ExperimentConfig cfg;
        cfg.algorithms = {"B"};
        cfg.forecast.horizon = k;
        const RunReport r = run_experiment(cfg);
        mse[k - 1] = r.rows[0].test_avg;
    }
    const bool ok = mse[0] <= mse[1] && mse[1] <= mse[2];
    return {ok, fmt("B-SFN average test MSE k=1 %.4e, k=2 %.4e, k=3 %.4e", mse[0], mse[1], mse[2])};
}

Outcome symbolic_round_trip() {
    std::mt19937_64 rng(4242);
    double worst_abs = 0.0;
    int skipped = 0;
    for (int t = 0; t < 100; ++t) {
        RandomModelSpec spec;
        spec.arity = 1 + rng() % 4;
        const SfnModel m = random_model(rng, spec);
        const std::string text = render_symbolic(m);
        for (int i = 0; i < 10; ++i) {
            const auto x = uniform_vec(rng, spec.arity, -2.0, 2.0);
            if (!evaluable(m, x, HUGE_VAL)) {
                ++skipped;
                continue;
            }
            worst_abs = std::max(worst_abs, std::fabs(oracle::eval_expression(text, x) - eval_model(m, x)));
        }
    }
    return {worst_abs <= 1e-12, fmt("100 models x 10 inputs, max |oracle - eval_model| = %.3e (<= 1e-12), %d non-evaluable inputs skipped",
                worst_abs, skipped)};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"Gradient correctness", gradient_correctness},
        {"Smooth transition", smooth_transition},
        {"In-class recovery", in_class_recovery},
        {"Admission soundness", admission_soundness},
        {"Sparsity ordering", sparsity_ordering},
        {"MLP weight-count identity", mlp_weight_identity},
        {"Pipeline counts", pipeline_counts},
        {"Forecast harness end-to-end", forecast_harness},
        {"Multi-step degradation", multi_step_degradation},
        {"Symbolic export round-trip", symbolic_round_trip},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    std::printf("kernels: %s\n", std::string(kernels::name(kernels::active().isa)).c_str());
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int n = static_cast<int>(i + 1);
        if (!only.empty() && !only.count(n)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", n, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
