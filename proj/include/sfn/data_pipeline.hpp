#pragma once

// Time-series preparation: block averaging, min-max scaling fitted on the
// training range, lagged windows and chronological partitioning.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sfn/matrix.hpp"

namespace sfn {

struct TimeSeries {
    std::vector<double> values;
    std::string source;

    std::size_t size() const { return values.size(); }
};

// output[i] = mean(values[i*block, (i+1)*block)); a trailing partial block is dropped.
TimeSeries block_average(const TimeSeries& series, std::size_t block);

// Min-max scaling to [0, 1].
struct ScalingRecord {
    double min = 0.0;
    double max = 1.0;

    double apply(double x) const { return (x - min) / (max - min); }
    double invert(double s) const { return s * (max - min) + min; }
    std::vector<double> apply(std::span<const double> xs) const;
    std::vector<double> invert(std::span<const double> xs) const;
};

// Fits on values[begin, end). Throws DegenerateRange when the range is constant.
ScalingRecord fit_scale(std::span<const double> values, std::size_t begin, std::size_t end);
ScalingRecord fit_scale(std::span<const double> values);

enum class Role : std::uint8_t { Train, Validation, Test };

struct Partition {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

struct Dataset {
    Matrix X;
    std::vector<double> d;
    // Series index of each row's target, for windowed data.
    std::vector<std::size_t> target_index;
    Partition partition;
    ScalingRecord scaling;

    std::size_t rows() const { return d.size(); }
    Samples subset(Role role) const;
    Samples subset(std::span<const std::size_t> rows) const;
};

// Row t: inputs [x(t-p+1) .. x(t)], target x(t+k). Row count is len - p - k + 1.
Dataset make_windows(std::span<const double> series, std::size_t lags, std::size_t horizon);

enum class ValidationMode : std::uint8_t { Chronological, Random };

struct PartitionConfig {
    double test_fraction = 0.5;
    double validation_fraction = 0.25;  // of the train+validation block
    ValidationMode validation_mode = ValidationMode::Chronological;
    std::uint64_t seed = 1;
};

// The first round(n * (1 - test_fraction)) rows become train+validation, the
// rest test. Within the first block the validation rows are the last
// round(n_trainval * validation_fraction) (or a seeded random subset).
// Throws ConfigError for fractions outside [0, 1) or when a set would be empty.
void partition(Dataset& dataset, const PartitionConfig& config);

// Everything the harness needs for one forecasting problem. Scaling is fitted
// on the series values that feed train and validation rows.
struct ForecastConfig {
    std::size_t block = 10;
    std::size_t lags = 4;
    std::size_t horizon = 1;
    PartitionConfig split;
};

Dataset prepare_forecast(const TimeSeries& raw, const ForecastConfig& config);

// Tabular regression data: rows keep their order and are partitioned like
// forecast rows. With scale_target the targets are min-max scaled using the
// train+validation targets; inputs are left as given.
Dataset make_regression_dataset(const Samples& samples, const PartitionConfig& config, bool scale_target);

// One numeric value per line. An optional non-numeric header on the first line
// is skipped; with several comma-separated columns the last is the value.
// Throws ParseError with the line number.
TimeSeries load_csv(const std::filesystem::path& path);
TimeSeries parse_series_csv(std::string_view text, std::string source = {});
void write_csv(const TimeSeries& series, const std::filesystem::path& path);

// Regression table: columns x0..x{p-1}, y with an optional header line.
Samples load_table_csv(const std::filesystem::path& path);
Samples parse_table_csv(std::string_view text);
void write_table_csv(const Samples& samples, const std::filesystem::path& path);

// Row dump with role labels (train/validation/test).
std::string dataset_csv(const Dataset& dataset);

// x(t) = base + amplitude * sin(2 pi t / period + phase) + n(t),
// n(t) = phi * n(t-1) + noise * eps(t), eps ~ N(0, 1), n(-1) = 0.
struct SynthConfig {
    std::size_t length = 3600;
    double base = 10.0;
    double amplitude = 5.0;
    double period = 360.0;
    double phase = 0.0;
    double noise = 0.5;
    double phi = 0.7;
    std::uint64_t seed = 1;
};

TimeSeries synth_series(const SynthConfig& config);

} // namespace sfn
