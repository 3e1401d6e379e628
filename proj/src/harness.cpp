#include "sfn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>

#include "sfn/error.hpp"
#include "sfn/expr_tree.hpp"

namespace sfn {

namespace {

bool is_mlp(const std::string& name) { return name == "B-BP" || name == "ES-BP"; }

std::string canonical_algorithm(const std::string& name) {
    std::string upper;
    for (char c : name) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (upper == "B-BP" || upper == "BBP") return "B-BP";
    if (upper == "ES-BP" || upper == "ESBP") return "ES-BP";
    return std::string(to_string(parse_algorithm(upper)));
}

std::string fmt17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string fmt_short(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
}

double mean_sq(std::span<const double> predicted, std::span<const double> actual) {
    double acc = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double e = predicted[i] - actual[i];
        acc += e * e;
    }
    return acc / static_cast<double>(actual.size());
}

} // namespace

void ExperimentConfig::validate() const {
    if (runs < 1) throw ConfigError("runs must be at least 1");
    if (algorithms.empty()) throw ConfigError("no algorithms configured");
    for (const auto& a : algorithms) canonical_algorithm(a);
    if (jobs < 1) throw ConfigError("jobs must be at least 1");
    if (mlp.hidden < 1) throw ConfigError("mlp_hidden must be at least 1");
    SearchConfig s = search;
    s.algorithm = Algorithm::FRS;
    s.validate();
    s.algorithm = Algorithm::FB;
    s.validate();
}

ExperimentConfig experiment_config_from(const KeyValueConfig& kv) {
    ExperimentConfig c;
    const std::string source = kv.get_string("source", "synth");
    c.csv_path = source == "synth" ? "" : source;

    c.synth.length = kv.get_uint("synth_length", c.synth.length);
    c.synth.base = kv.get_double("synth_base", c.synth.base);
    c.synth.amplitude = kv.get_double("synth_amplitude", c.synth.amplitude);
    c.synth.period = kv.get_double("synth_period", c.synth.period);
    c.synth.phase = kv.get_double("synth_phase", c.synth.phase);
    c.synth.noise = kv.get_double("synth_noise", c.synth.noise);
    c.synth.phi = kv.get_double("synth_phi", c.synth.phi);
    c.synth.seed = kv.get_uint("synth_seed", c.synth.seed);

    c.forecast.block = kv.get_uint("block", c.forecast.block);
    c.forecast.lags = kv.get_uint("lags", c.forecast.lags);
    c.forecast.horizon = kv.get_uint("horizon", c.forecast.horizon);
    c.forecast.split.test_fraction = kv.get_double("test_fraction", c.forecast.split.test_fraction);
    c.forecast.split.validation_fraction = kv.get_double("validation_fraction", c.forecast.split.validation_fraction);
    const std::string mode = kv.get_string("validation_mode", "chronological");
    if (mode == "chronological") c.forecast.split.validation_mode = ValidationMode::Chronological;
    else if (mode == "random") c.forecast.split.validation_mode = ValidationMode::Random;
    else throw ConfigError("validation_mode must be chronological or random");

    c.algorithms = kv.get_list("algorithms", c.algorithms);
    for (auto& a : c.algorithms) a = canonical_algorithm(a);
    c.runs = kv.get_uint("runs", c.runs);
    c.seed = kv.get_uint("seed", c.seed);
    c.forecast.split.seed = c.seed;
    c.jobs = kv.get_uint("jobs", c.jobs);
    c.original_scale = kv.get_bool("original_scale", c.original_scale);

    TrainConfig& t = c.search.train;
    t.learning_rate = kv.get_double("learning_rate", t.learning_rate);
    t.momentum = kv.get_double("momentum", t.momentum);
    t.max_epochs = kv.get_uint("max_epochs", t.max_epochs);
    t.tolerance = kv.get_double("tolerance", t.tolerance);
    t.patience_epochs = kv.get_uint("patience_epochs", t.patience_epochs);
    t.max_loss_increase = kv.get_double("max_loss_increase", t.max_loss_increase);
    t.max_lr_halvings = static_cast<int>(kv.get_uint("max_lr_halvings", static_cast<std::uint64_t>(t.max_lr_halvings)));

    c.search.max_depth = kv.get_uint("max_depth", c.search.max_depth);
    c.search.admission_threshold = kv.get_double("admission_threshold", c.search.admission_threshold);
    c.search.rf = kv.get_double("rf", c.search.rf);
    c.search.k_prune_interval = kv.get_uint("k_prune_interval", c.search.k_prune_interval);
    c.search.max_links = kv.get_uint("max_links", c.search.max_links);
    c.search.candidate_epochs = kv.get_uint("candidate_epochs", c.search.candidate_epochs);
    c.search.topup_epochs = kv.get_uint("topup_epochs", c.search.topup_epochs);
    c.search.best_of_sweep = kv.get_bool("best_of_sweep", c.search.best_of_sweep);
    c.search.prune_retrain = kv.get_bool("prune_retrain", c.search.prune_retrain);
    c.search.candidate_epochs = std::min(c.search.candidate_epochs, t.max_epochs);
    c.search.topup_epochs = std::min(c.search.topup_epochs, t.max_epochs);

    c.mlp.train = t;
    c.mlp.hidden = kv.get_uint("mlp_hidden", c.mlp.hidden);
    c.mlp.patience = kv.get_uint("mlp_patience", c.mlp.patience);

    kv.get_string("output_dir", "");  // consumed by the CLI
    if (auto unused = kv.unused_keys(); !unused.empty()) throw ConfigError("unknown config key '" + unused.front() + "'");
    c.validate();
    return c;
}

std::string table_label(const std::string& algorithm, const ExperimentConfig& config) {
    const std::string name = canonical_algorithm(algorithm);
    if (is_mlp(name)) return name + " (" + std::to_string(config.mlp.hidden) + ")";
    std::string label = name + "-SFN (" + std::to_string(config.search.max_depth) + ")";
    if (name == "FB") label += "(K=" + std::to_string(config.search.k_prune_interval) + ")";
    if (name == "FRS") label += "(RF=" + fmt_short(config.search.rf) + ")";
    return label;
}

RunRecord run_cell(const std::string& algorithm, std::uint64_t seed, const Dataset& data,
                   const ExperimentConfig& config) {
    RunRecord rec;
    rec.algorithm = algorithm;
    rec.seed = seed;
    const Samples train = data.subset(Role::Train);
    const Samples validation = data.subset(Role::Validation);
    const Samples test = data.subset(Role::Test);

    auto to_space = [&](std::vector<double> v) {
        return config.original_scale ? data.scaling.invert(v) : v;
    };

    try {
        rec.algorithm = canonical_algorithm(algorithm);
        std::function<std::vector<double>(const Matrix&)> predict;
        std::optional<SfnModel> sfn_model;
        std::optional<MlpModel> mlp_model;

        if (is_mlp(rec.algorithm)) {
            MlpConfig mc = config.mlp;
            mc.train.seed = seed;
            MlpFit fit = rec.algorithm == "B-BP" ? mlp_train_bbp(train, mc) : mlp_train_esbp(train, validation, mc);
            mlp_model = fit.model;
            rec.weights = mlp_weight_count(*mlp_model);
            std::string listing = "MLP inputs=" + std::to_string(mlp_model->input_count()) +
                                  " hidden=" + std::to_string(mlp_model->hidden_count()) + "\n";
            for (double w : mlp_model->weights()) listing += fmt17(w) + "\n";
            rec.symbolic = listing;
            predict = [&](const Matrix& X) { return mlp_model->predict(X); };
        } else {
            SearchConfig sc = config.search;
            sc.algorithm = parse_algorithm(rec.algorithm);
            sc.seed = seed;
            sc.train.seed = seed;
            SearchResult result = build_model(train, validation, sc);
            sfn_model = std::move(result.model);
            rec.weights = sfn_model->count_weights();
            rec.symbolic = render_symbolic(*sfn_model);
            rec.serialized = serialize_model(*sfn_model);
            rec.trace_csv = result.trace.to_csv();
            predict = [&](const Matrix& X) {
                std::vector<double> out(X.rows());
                for (std::size_t r = 0; r < X.rows(); ++r) out[r] = eval_model(*sfn_model, X.row(r));
                return out;
            };
        }

        auto score = [&](const Samples& s) { return mean_sq(to_space(predict(s.X)), to_space(s.d)); };
        rec.train_mse = score(train);
        rec.validation_mse = score(validation);
        const std::vector<double> predicted = to_space(predict(test.X));
        const std::vector<double> actual = to_space(test.d);
        rec.test_mse = mean_sq(predicted, actual);
        for (std::size_t i = 0; i < actual.size(); ++i) rec.predictions.push_back({i, actual[i], predicted[i]});
        if (!std::isfinite(rec.train_mse) || !std::isfinite(rec.test_mse))
            throw NonFiniteResult("non-finite error on evaluation");
    } catch (const std::exception& e) {
        rec.error = rec.algorithm + " seed " + std::to_string(seed) + ": " + e.what();
    }
    return rec;
}

void aggregate(AlgorithmReport& row) {
    row.failed = 0;
    std::vector<const RunRecord*> ok;
    for (const auto& r : row.runs) {
        if (r.error) ++row.failed;
        else ok.push_back(&r);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.train_best = row.train_worst = row.train_avg = nan;
    row.test_best = row.test_worst = row.test_avg = nan;
    row.avg_weights = nan;
    row.collapsed = false;
    row.best_run_symbolic.clear();
    if (ok.empty()) return;

    double train_sum = 0.0, test_sum = 0.0, weight_sum = 0.0;
    row.train_best = row.test_best = std::numeric_limits<double>::infinity();
    row.train_worst = row.test_worst = -std::numeric_limits<double>::infinity();
    const RunRecord* best_run = ok.front();
    for (const RunRecord* r : ok) {
        row.train_best = std::min(row.train_best, r->train_mse);
        row.train_worst = std::max(row.train_worst, r->train_mse);
        row.test_best = std::min(row.test_best, r->test_mse);
        row.test_worst = std::max(row.test_worst, r->test_mse);
        train_sum += r->train_mse;
        test_sum += r->test_mse;
        weight_sum += static_cast<double>(r->weights);
        if (r->validation_mse < best_run->validation_mse) best_run = r;
    }
    const double n = static_cast<double>(ok.size());
    row.train_avg = train_sum / n;
    row.test_avg = test_sum / n;
    row.avg_weights = weight_sum / n;
    row.best_run_symbolic = best_run->symbolic;

    if (ok.size() > 1 && row.failed == 0) {
        row.collapsed = std::all_of(ok.begin(), ok.end(), [&](const RunRecord* r) {
            return r->symbolic == ok.front()->symbolic && r->train_mse == ok.front()->train_mse &&
                   r->test_mse == ok.front()->test_mse;
        });
    }
}

RunReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    const TimeSeries raw = config.csv_path.empty() ? synth_series(config.synth) : load_csv(config.csv_path);
    const Dataset data = prepare_forecast(raw, config.forecast);

    struct Cell {
        std::size_t row;
        std::uint64_t seed;
        RunRecord record;
    };
    std::vector<Cell> cells;
    for (std::size_t a = 0; a < config.algorithms.size(); ++a)
        for (std::size_t r = 0; r < config.runs; ++r) cells.push_back({a, config.seed + r, {}});

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++)
            cells[i].record = run_cell(config.algorithms[cells[i].row], cells[i].seed, data, config);
    };
    if (config.jobs <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < std::min(config.jobs, cells.size()); ++j) pool.emplace_back(worker);
    }

    RunReport report;
    char title[160];
    std::snprintf(title, sizeof title, "%s, block=%zu, lags=%zu, horizon=%zu, %s MSE",
                  config.csv_path.empty() ? "synthetic series" : config.csv_path.c_str(), config.forecast.block,
                  config.forecast.lags, config.forecast.horizon, config.original_scale ? "original-scale" : "scaled");
    report.title = title;
    for (const auto& name : config.algorithms) {
        AlgorithmReport row;
        row.algorithm = name;
        row.label = table_label(name, config);
        report.rows.push_back(std::move(row));
    }
    for (auto& cell : cells) report.rows[cell.row].runs.push_back(std::move(cell.record));
    for (auto& row : report.rows) aggregate(row);
    return report;
}

// ---------------------------------------------------------------------------
// Output

std::string report_markdown(const RunReport& report) {
    std::string md = "# " + report.title + "\n\n";
    md += "| Algorithm | Train best MSE | Train worst MSE | Train average MSE | Test best MSE | Test worst MSE | "
          "Test average MSE | Average # weights |\n";
    md += "|---|---|---|---|---|---|---|---|\n";
    for (const auto& row : report.rows) {
        auto cell = [](double x) { return std::isnan(x) ? std::string("failed") : fmt_short(x); };
        md += "| " + row.label + " | ";
        if (row.collapsed) {
            md += " | | " + cell(row.train_avg) + " | | | " + cell(row.test_avg);
        } else {
            md += cell(row.train_best) + " | " + cell(row.train_worst) + " | " + cell(row.train_avg) + " | " +
                  cell(row.test_best) + " | " + cell(row.test_worst) + " | " + cell(row.test_avg);
        }
        md += " | " + cell(row.avg_weights) + " |\n";
    }
    md += "\nRuns per algorithm: " + std::to_string(report.rows.empty() ? 0 : report.rows.front().runs.size()) +
          ". Rows with a single value had identical results on every run.\n";

    bool any_failure = false;
    for (const auto& row : report.rows)
        for (const auto& run : row.runs)
            if (run.error) {
                if (!any_failure) md += "\n## Failures\n\n";
                any_failure = true;
                md += "- " + *run.error + "\n";
            }

    md += "\n## Best-run models (lowest validation MSE)\n\n";
    for (const auto& row : report.rows) {
        if (is_mlp(row.algorithm) || row.best_run_symbolic.empty()) continue;
        md += "- " + row.label + ": `y = " + row.best_run_symbolic + "`\n";
    }
    return md;
}

std::string report_csv(const RunReport& report) {
    std::string csv = "algorithm,label,runs,failed,collapsed,train_best,train_worst,train_avg,test_best,test_worst,"
                      "test_avg,avg_weights\n";
    for (const auto& row : report.rows) {
        csv += row.algorithm + "," + row.label + "," + std::to_string(row.runs.size()) + "," +
               std::to_string(row.failed) + "," + (row.collapsed ? "1" : "0") + "," + fmt17(row.train_best) + "," +
               fmt17(row.train_worst) + "," + fmt17(row.train_avg) + "," + fmt17(row.test_best) + "," +
               fmt17(row.test_worst) + "," + fmt17(row.test_avg) + "," + fmt17(row.avg_weights) + "\n";
    }
    return csv;
}

std::string runs_csv(const RunReport& report) {
    std::string csv = "algorithm,seed,train_mse,validation_mse,test_mse,weights,error\n";
    for (const auto& row : report.rows)
        for (const auto& r : row.runs)
            csv += r.algorithm + "," + std::to_string(r.seed) + "," + fmt17(r.train_mse) + "," +
                   fmt17(r.validation_mse) + "," + fmt17(r.test_mse) + "," + std::to_string(r.weights) + "," +
                   (r.error ? "failed" : "") + "\n";
    return csv;
}

std::string predictions_csv(const RunRecord& run) {
    std::string csv = "index,actual,predicted\n";
    for (const auto& p : run.predictions)
        csv += std::to_string(p.index) + "," + fmt17(p.actual) + "," + fmt17(p.predicted) + "\n";
    return csv;
}

std::vector<AlgorithmReport> parse_report_csv(std::string_view text) {
    std::vector<AlgorithmReport> rows;
    std::size_t pos = 0, line_no = 0;
    auto number = [&](std::string_view s) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("bad number '" + std::string(s) + "'", line_no);
        return v;
    };
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (++line_no == 1 || line.empty()) continue;
        std::vector<std::string_view> f;
        std::size_t start = 0;
        while (true) {
            auto comma = line.find(',', start);
            f.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (f.size() != 12) throw ParseError("expected 12 columns", line_no);
        AlgorithmReport row;
        row.algorithm = f[0];
        row.label = f[1];
        row.runs.resize(static_cast<std::size_t>(number(f[2])));
        row.failed = static_cast<std::size_t>(number(f[3]));
        row.collapsed = f[4] == "1";
        row.train_best = number(f[5]);
        row.train_worst = number(f[6]);
        row.train_avg = number(f[7]);
        row.test_best = number(f[8]);
        row.test_worst = number(f[9]);
        row.test_avg = number(f[10]);
        row.avg_weights = number(f[11]);
        rows.push_back(std::move(row));
    }
    return rows;
}

void emit_report(const RunReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_text(dir / "report.md", report_markdown(report));
    write_text(dir / "report.csv", report_csv(report));
    write_text(dir / "runs.csv", runs_csv(report));
    for (const auto& row : report.rows) {
        for (const auto& run : row.runs) {
            const std::string stem = run.algorithm + "_" + std::to_string(run.seed);
            if (run.error) continue;
            write_text(dir / ("predictions_" + stem + ".csv"), predictions_csv(run));
            write_text(dir / ("model_" + stem + ".txt"), run.symbolic + "\n");
            if (!run.serialized.empty()) write_text(dir / ("model_" + stem + ".sfn"), run.serialized);
            if (!run.trace_csv.empty()) write_text(dir / ("trace_" + stem + ".csv"), run.trace_csv);
        }
    }
}

} // namespace sfn
