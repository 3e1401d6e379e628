#pragma once

// Forecasting experiments: prepare one data set, run every configured
// algorithm over several seeds, and aggregate the results into a
// best/worst/average table with weight counts.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sfn/baseline_mlp.hpp"
#include "sfn/config_file.hpp"
#include "sfn/data_pipeline.hpp"
#include "sfn/structure_search.hpp"

namespace sfn {

struct ExperimentConfig {
    std::string csv_path;  // empty: synthetic series
    SynthConfig synth;
    ForecastConfig forecast;
    // SFN names (FLK, FLY, FRS, B, FB) and MLP names (B-BP, ES-BP).
    std::vector<std::string> algorithms{"B-BP", "ES-BP", "FLK", "FLY", "B", "FB", "FRS"};
    std::size_t runs = 5;
    std::uint64_t seed = 1;
    SearchConfig search;
    MlpConfig mlp;
    bool original_scale = false;
    std::size_t jobs = 1;

    void validate() const;
};

// Keys: see README ("Configuration keys"). Throws ConfigError for unknown keys.
ExperimentConfig experiment_config_from(const KeyValueConfig& kv);

struct PredictionRow {
    std::size_t index = 0;  // row of the test set
    double actual = 0.0;
    double predicted = 0.0;
};

struct RunRecord {
    std::string algorithm;  // short name, e.g. FLK or B-BP
    std::uint64_t seed = 0;
    double train_mse = 0.0;
    double validation_mse = 0.0;
    double test_mse = 0.0;
    std::size_t weights = 0;
    std::string symbolic;    // rendered model (SFN) or weight listing (MLP)
    std::string serialized;  // SFN text format; empty for MLP
    std::string trace_csv;   // SFN search trace; empty for MLP
    std::vector<PredictionRow> predictions;
    std::optional<std::string> error;
};

struct AlgorithmReport {
    std::string algorithm;
    std::string label;  // table label, e.g. "FB-SFN (1)(K=5)"
    std::vector<RunRecord> runs;
    bool collapsed = false;  // every run produced the same model and errors
    std::size_t failed = 0;
    double train_best = 0.0, train_worst = 0.0, train_avg = 0.0;
    double test_best = 0.0, test_worst = 0.0, test_avg = 0.0;
    double avg_weights = 0.0;
    std::string best_run_symbolic;  // run with the lowest validation MSE
};

struct RunReport {
    std::string title;
    std::vector<AlgorithmReport> rows;
};

// Fills best/worst/average, the collapse flag and the best-run model from runs.
void aggregate(AlgorithmReport& row);

std::string table_label(const std::string& algorithm, const ExperimentConfig& config);

RunReport run_experiment(const ExperimentConfig& config);

// One run of one algorithm on a prepared data set; never throws for training
// failures (they land in RunRecord::error).
RunRecord run_cell(const std::string& algorithm, std::uint64_t seed, const Dataset& data, const ExperimentConfig& config);

std::string report_markdown(const RunReport& report);
std::string report_csv(const RunReport& report);
std::string runs_csv(const RunReport& report);
std::string predictions_csv(const RunRecord& run);

// Parses report_csv output back into rows (aggregates only).
std::vector<AlgorithmReport> parse_report_csv(std::string_view text);

// Writes report.md, report.csv, runs.csv and per-run predictions, model and
// trace files into `dir`.
void emit_report(const RunReport& report, const std::filesystem::path& dir);

} // namespace sfn
