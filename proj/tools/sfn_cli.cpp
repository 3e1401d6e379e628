// Command-line front end: fit, experiment, synth, gradcheck, prune.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "sfn/data_pipeline.hpp"
#include "sfn/error.hpp"
#include "sfn/expr_tree.hpp"
#include "sfn/grad_engine.hpp"
#include "sfn/harness.hpp"
#include "sfn/kernels.hpp"
#include "sfn/random_model.hpp"
#include "sfn/structure_search.hpp"

namespace {

struct DataOptions {
    std::string series;
    std::string table;
    bool synth = false;
    std::size_t block = 1;
    std::size_t lags = 4;
    std::size_t horizon = 1;
    std::optional<double> test_fraction;
    double validation_fraction = 0.25;
    bool original_scale = false;
};

struct SearchOptions {
    std::string algorithm = "FLK";
    std::uint64_t seed = 1;
    std::size_t max_depth = 1;
    double threshold = 1e-4;
    double rf = 0.5;
    std::size_t k = 5;
    std::size_t max_links = 32;
    std::size_t candidate_epochs = 500;
    std::size_t topup_epochs = 2000;
    double learning_rate = 0.05;
    double momentum = 0.2;
    std::size_t max_epochs = 10000;
    bool best_of_sweep = false;
};

void add_data_options(CLI::App* cmd, DataOptions& o) {
    auto* src = cmd->add_option_group("source");
    src->add_option("--series", o.series, "CSV time series (one value per line)");
    src->add_option("--table", o.table, "CSV regression table: x0,...,x{p-1},y");
    src->add_flag("--synth", o.synth, "use the default synthetic series");
    src->require_option(1);
    cmd->add_option("--block", o.block, "block-average size for series input");
    cmd->add_option("--lags", o.lags, "lagged inputs per row");
    cmd->add_option("--horizon", o.horizon, "steps ahead to predict");
    cmd->add_option("--test-fraction", o.test_fraction, "fraction of rows held out (default 0.5 series, 0 table)");
    cmd->add_option("--validation-fraction", o.validation_fraction, "validation share of the remaining rows");
    cmd->add_flag("--original-scale", o.original_scale, "report MSE in the original units");
}

void add_search_options(CLI::App* cmd, SearchOptions& o) {
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--max-depth", o.max_depth, "maximum tree depth");
    cmd->add_option("--threshold", o.threshold, "admission threshold on validation MSE");
    cmd->add_option("--rf", o.rf, "FRS reduction factor");
    cmd->add_option("--k", o.k, "FB: prune after every K accepted links");
    cmd->add_option("--max-links", o.max_links, "cap on accepted additions");
    cmd->add_option("--candidate-epochs", o.candidate_epochs, "training epochs per candidate");
    cmd->add_option("--topup-epochs", o.topup_epochs, "training epochs after acceptance");
    cmd->add_option("--learning-rate", o.learning_rate, "steepest-descent learning rate");
    cmd->add_option("--momentum", o.momentum, "momentum constant");
    cmd->add_option("--max-epochs", o.max_epochs, "hard epoch cap");
    cmd->add_flag("--best-of-sweep", o.best_of_sweep, "admit the best candidate of each sweep");
}

sfn::SearchConfig to_search(const SearchOptions& o) {
    sfn::SearchConfig c;
    c.algorithm = sfn::parse_algorithm(o.algorithm);
    c.seed = o.seed;
    c.max_depth = o.max_depth;
    c.admission_threshold = o.threshold;
    c.rf = o.rf;
    c.k_prune_interval = o.k;
    c.max_links = o.max_links;
    c.candidate_epochs = std::min(o.candidate_epochs, o.max_epochs);
    c.topup_epochs = std::min(o.topup_epochs, o.max_epochs);
    c.best_of_sweep = o.best_of_sweep;
    c.train.learning_rate = o.learning_rate;
    c.train.momentum = o.momentum;
    c.train.max_epochs = o.max_epochs;
    c.train.seed = o.seed;
    c.validate();
    return c;
}

sfn::Dataset load_dataset(const DataOptions& o, std::uint64_t seed) {
    sfn::PartitionConfig split;
    split.validation_fraction = o.validation_fraction;
    split.seed = seed;
    if (!o.table.empty()) {
        split.test_fraction = o.test_fraction.value_or(0.0);
        return sfn::make_regression_dataset(sfn::load_table_csv(o.table), split, true);
    }
    split.test_fraction = o.test_fraction.value_or(0.5);
    const sfn::TimeSeries raw = o.synth ? sfn::synth_series({}) : sfn::load_csv(o.series);
    sfn::ForecastConfig fc;
    fc.block = o.block;
    fc.lags = o.lags;
    fc.horizon = o.horizon;
    fc.split = split;
    return sfn::prepare_forecast(raw, fc);
}

double report_mse(const sfn::SfnModel& model, const sfn::Samples& s, const sfn::Dataset& data, bool original) {
    if (s.empty()) return std::nan("");
    double acc = 0.0;
    for (std::size_t r = 0; r < s.size(); ++r) {
        double y = sfn::eval_model(model, s.X.row(r));
        double d = s.d[r];
        if (original) {
            y = data.scaling.invert(y);
            d = data.scaling.invert(d);
        }
        acc += (y - d) * (y - d);
    }
    return acc / static_cast<double>(s.size());
}

void print_model_summary(const sfn::SfnModel& model, const sfn::Dataset& data, bool original) {
    std::printf("y = %s\n", sfn::render_symbolic(model).c_str());
    std::printf("weights: %zu  depth: %zu\n", model.count_weights(), model.depth());
    std::printf("train MSE: %.6g\n", report_mse(model, data.subset(sfn::Role::Train), data, original));
    std::printf("validation MSE: %.6g\n", report_mse(model, data.subset(sfn::Role::Validation), data, original));
    if (!data.partition.test.empty())
        std::printf("test MSE: %.6g\n", report_mse(model, data.subset(sfn::Role::Test), data, original));
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw sfn::Error("cannot write '" + path + "'");
    out << text;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw sfn::Error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Symbolic function network: fit, experiment, synth, gradcheck, prune"};
    app.require_subcommand(1);
    std::string isa = "auto";
    app.add_option("--isa", isa, "kernel variant: auto, scalar or avx2")->check(CLI::IsMember({"auto", "scalar", "avx2"}));

    // fit
    auto* fit = app.add_subcommand("fit", "build one SFN model and print it");
    DataOptions fit_data;
    SearchOptions fit_search;
    std::string fit_save, fit_trace;
    add_data_options(fit, fit_data);
    add_search_options(fit, fit_search);
    fit->add_option("--algorithm", fit_search.algorithm, "FLK, FLY, FRS, B or FB");
    fit->add_option("--save", fit_save, "write the model in text form");
    fit->add_option("--trace", fit_trace, "write the search trace as CSV");

    // experiment
    auto* exp = app.add_subcommand("experiment", "run the comparison table from a config file");
    std::string exp_config, exp_output;
    std::vector<std::string> exp_set;
    std::optional<std::uint64_t> exp_seed;
    exp->add_option("--config", exp_config, "key = value config file")->required();
    exp->add_option("--output", exp_output, "output directory (overrides output_dir)");
    exp->add_option("--set", exp_set, "override a config key: key=value");
    exp->add_option("--seed", exp_seed, "base seed");

    // synth
    auto* syn = app.add_subcommand("synth", "generate a synthetic seasonal series");
    sfn::SynthConfig synth;
    std::string synth_out;
    syn->add_option("--length", synth.length, "number of points");
    syn->add_option("--base", synth.base, "mean level");
    syn->add_option("--amplitude", synth.amplitude, "seasonal amplitude");
    syn->add_option("--period", synth.period, "seasonal period");
    syn->add_option("--phase", synth.phase, "seasonal phase (radians)");
    syn->add_option("--noise", synth.noise, "AR(1) innovation scale");
    syn->add_option("--phi", synth.phi, "AR(1) coefficient");
    syn->add_option("--seed", synth.seed, "random seed");
    syn->add_option("--out", synth_out, "output CSV (stdout when omitted)");

    // gradcheck
    auto* grad = app.add_subcommand("gradcheck", "compare analytic and finite-difference gradients");
    std::size_t gc_cases = 200, gc_depth = 3, gc_arity = 4, gc_batch = 16;
    double gc_h = 1e-6, gc_limit = 1e-5;
    std::uint64_t gc_seed = 1;
    grad->add_option("--cases", gc_cases, "random (tree, weights, batch) cases");
    grad->add_option("--max-depth", gc_depth, "maximum tree depth");
    grad->add_option("--max-arity", gc_arity, "maximum input arity");
    grad->add_option("--batch", gc_batch, "examples per batch");
    grad->add_option("--step", gc_h, "finite-difference step");
    grad->add_option("--limit", gc_limit, "maximum allowed relative error");
    grad->add_option("--seed", gc_seed, "random seed");

    // prune
    auto* prn = app.add_subcommand("prune", "prune a saved model on a data set");
    DataOptions prune_data;
    SearchOptions prune_search;
    std::string prune_model, prune_out;
    add_data_options(prn, prune_data);
    add_search_options(prn, prune_search);
    prn->add_option("--model", prune_model, "model in text form")->required();
    prn->add_option("--out", prune_out, "write the pruned model");

    CLI11_PARSE(app, argc, argv);

    if (isa == "scalar") sfn::kernels::select(sfn::kernels::Isa::Scalar);
    else if (isa == "avx2") sfn::kernels::select(sfn::kernels::Isa::Avx2);
    else sfn::kernels::select_best();

    try {
        if (*fit) {
            const sfn::SearchConfig config = to_search(fit_search);
            const sfn::Dataset data = load_dataset(fit_data, fit_search.seed);
            const sfn::SearchResult result =
                sfn::build_model(data.subset(sfn::Role::Train), data.subset(sfn::Role::Validation), config);
            std::printf("algorithm: %s\n", std::string(sfn::to_string(config.algorithm)).c_str());
            print_model_summary(result.model, data, fit_data.original_scale);
            if (!fit_save.empty()) write_file(fit_save, sfn::serialize_model(result.model));
            if (!fit_trace.empty()) write_file(fit_trace, result.trace.to_csv());
        } else if (*exp) {
            sfn::KeyValueConfig kv = sfn::KeyValueConfig::load(exp_config);
            for (const auto& kvs : exp_set) {
                const auto eq = kvs.find('=');
                if (eq == std::string::npos) throw sfn::ConfigError("--set expects key=value, got " + kvs);
                kv.set(kvs.substr(0, eq), kvs.substr(eq + 1));
            }
            if (exp_seed) kv.set("seed", std::to_string(*exp_seed));
            std::string out_dir = exp_output.empty() ? kv.get_string("output_dir", "sfn_report") : exp_output;
            const sfn::ExperimentConfig config = sfn::experiment_config_from(kv);
            const sfn::RunReport report = sfn::run_experiment(config);
            sfn::emit_report(report, out_dir);
            std::fputs(sfn::report_markdown(report).c_str(), stdout);
            std::printf("\nreport written to %s\n", out_dir.c_str());
        } else if (*syn) {
            const sfn::TimeSeries series = sfn::synth_series(synth);
            if (synth_out.empty()) {
                std::puts("value");
                for (double v : series.values) std::printf("%.17g\n", v);
            } else {
                sfn::write_csv(series, synth_out);
            }
        } else if (*grad) {
            std::mt19937_64 rng(gc_seed);
            double worst = 0.0;
            std::size_t redraws = 0;
            const sfn::GradientCaseSpec gspec{gc_arity, gc_depth, gc_batch};
            for (std::size_t c = 0; c < gc_cases; ++c) {
                const sfn::GradientCase g = sfn::random_gradient_case(rng, gspec, &redraws);
                const auto& model = g.model;
                const auto& X = g.X;
                const auto& d = g.d;
                const auto analytic = sfn::batch_gradient(model, X, d);
                const auto numeric = sfn::finite_diff_gradient(model, X, d, gc_h);
                for (std::size_t i = 0; i < analytic.gradient.size(); ++i) {
                    const double a = analytic.gradient[i], n = numeric[i];
                    worst = std::max(worst, std::fabs(a - n) / (std::max(std::fabs(a), std::fabs(n)) + 1e-9));
                }
            }
            std::printf("cases: %zu  redrawn: %zu  kernels: %s  max relative error: %.3e  limit: %.1e\n", gc_cases,
                        redraws, std::string(sfn::kernels::name(sfn::kernels::active().isa)).c_str(), worst,
                        gc_limit);
            return worst < gc_limit ? 0 : 1;
        } else if (*prn) {
            sfn::SearchConfig config = to_search(prune_search);
            const sfn::Dataset data = load_dataset(prune_data, prune_search.seed);
            sfn::SfnModel model = sfn::parse_model(read_file(prune_model));
            std::printf("before: %zu weights\n", model.count_weights());
            const sfn::SearchResult result =
                sfn::prune(model, data.subset(sfn::Role::Train), data.subset(sfn::Role::Validation), config);
            print_model_summary(result.model, data, prune_data.original_scale);
            if (!prune_out.empty()) write_file(prune_out, sfn::serialize_model(result.model));
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
