#include "sfn/data_pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "sfn/error.hpp"

namespace sfn {

TimeSeries block_average(const TimeSeries& series, std::size_t block) {
    if (block == 0) throw ConfigError("block size must be at least 1");
    TimeSeries out;
    out.source = series.source;
    const std::size_t blocks = series.size() / block;
    out.values.reserve(blocks);
    for (std::size_t i = 0; i < blocks; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < block; ++j) acc += series.values[i * block + j];
        out.values.push_back(acc / static_cast<double>(block));
    }
    return out;
}

std::vector<double> ScalingRecord::apply(std::span<const double> xs) const {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = apply(xs[i]);
    return out;
}

std::vector<double> ScalingRecord::invert(std::span<const double> xs) const {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = invert(xs[i]);
    return out;
}

ScalingRecord fit_scale(std::span<const double> values, std::size_t begin, std::size_t end) {
    if (begin >= end || end > values.size()) throw ConfigError("invalid scaling range");
    const auto [lo, hi] = std::minmax_element(values.begin() + begin, values.begin() + end);
    if (!(*hi > *lo)) throw DegenerateRange("cannot scale a constant range");
    return ScalingRecord{*lo, *hi};
}

ScalingRecord fit_scale(std::span<const double> values) { return fit_scale(values, 0, values.size()); }

Samples Dataset::subset(std::span<const std::size_t> rows) const {
    Samples out;
    out.X = Matrix(0, X.cols());
    for (std::size_t r : rows) {
        out.X.append_row(X.row(r));
        out.d.push_back(d[r]);
    }
    return out;
}

Samples Dataset::subset(Role role) const {
    switch (role) {
    case Role::Train: return subset(partition.train);
    case Role::Validation: return subset(partition.validation);
    case Role::Test: return subset(partition.test);
    }
    return {};
}

Dataset make_windows(std::span<const double> series, std::size_t lags, std::size_t horizon) {
    if (lags < 1) throw ConfigError("need at least one lag");
    if (horizon < 1) throw ConfigError("horizon must be at least 1");
    if (series.size() < lags + horizon) throw EmptyData("series too short for the requested window");
    Dataset out;
    out.X = Matrix(0, lags);
    const std::size_t rows = series.size() - lags - horizon + 1;
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = r + lags - 1;  // last input index
        out.X.append_row(series.subspan(r, lags));
        out.d.push_back(series[t + horizon]);
        out.target_index.push_back(t + horizon);
    }
    return out;
}

void partition(Dataset& dataset, const PartitionConfig& config) {
    if (!(config.test_fraction >= 0.0 && config.test_fraction < 1.0))
        throw ConfigError("test_fraction must lie in [0, 1)");
    if (!(config.validation_fraction >= 0.0 && config.validation_fraction < 1.0))
        throw ConfigError("validation_fraction must lie in [0, 1)");
    if (config.test_fraction + config.validation_fraction * (1.0 - config.test_fraction) > 1.0)
        throw ConfigError("fractions exceed the data set");

    const std::size_t n = dataset.rows();
    const auto n_trainval = static_cast<std::size_t>(std::llround(static_cast<double>(n) * (1.0 - config.test_fraction)));
    const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n_trainval) * config.validation_fraction));
    if (n_trainval == n_val) throw ConfigError("training set would be empty");

    Partition p;
    std::vector<std::size_t> trainval(n_trainval);
    for (std::size_t i = 0; i < n_trainval; ++i) trainval[i] = i;
    if (config.validation_mode == ValidationMode::Chronological) {
        p.train.assign(trainval.begin(), trainval.end() - static_cast<std::ptrdiff_t>(n_val));
        p.validation.assign(trainval.end() - static_cast<std::ptrdiff_t>(n_val), trainval.end());
    } else {
        std::vector<std::size_t> shuffled = trainval;
        std::mt19937_64 rng(config.seed);
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        p.validation.assign(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_val));
        std::sort(p.validation.begin(), p.validation.end());
        std::set_difference(trainval.begin(), trainval.end(), p.validation.begin(), p.validation.end(),
                            std::back_inserter(p.train));
    }
    for (std::size_t i = n_trainval; i < n; ++i) p.test.push_back(i);
    dataset.partition = std::move(p);
}

Dataset prepare_forecast(const TimeSeries& raw, const ForecastConfig& config) {
    const TimeSeries averaged = block_average(raw, config.block);
    for (double v : averaged.values)
        if (!std::isfinite(v)) throw ConfigError("series contains non-finite values");
    if (averaged.size() < config.lags + config.horizon + 1)
        throw EmptyData("series of " + std::to_string(averaged.size()) + " points is too short");

    // Partition on the unscaled windows first to learn which series values the
    // train and validation rows touch, then scale with that range only.
    Dataset windows = make_windows(averaged.values, config.lags, config.horizon);
    partition(windows, config.split);
    std::size_t fit_end = 0;
    for (std::size_t r : windows.partition.train) fit_end = std::max(fit_end, windows.target_index[r] + 1);
    for (std::size_t r : windows.partition.validation) fit_end = std::max(fit_end, windows.target_index[r] + 1);

    const ScalingRecord scaling = fit_scale(averaged.values, 0, fit_end);
    const std::vector<double> scaled = scaling.apply(averaged.values);
    Dataset out = make_windows(scaled, config.lags, config.horizon);
    out.partition = std::move(windows.partition);
    out.scaling = scaling;
    return out;
}

Dataset make_regression_dataset(const Samples& samples, const PartitionConfig& config, bool scale_target) {
    if (samples.empty()) throw EmptyData("no rows");
    Dataset out;
    out.X = samples.X;
    out.d = samples.d;
    out.target_index.resize(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) out.target_index[i] = i;
    partition(out, config);
    if (scale_target) {
        std::vector<double> fit_values;
        for (std::size_t r : out.partition.train) fit_values.push_back(out.d[r]);
        for (std::size_t r : out.partition.validation) fit_values.push_back(out.d[r]);
        out.scaling = fit_scale(fit_values);
        out.d = out.scaling.apply(out.d);
    } else {
        out.scaling = ScalingRecord{0.0, 1.0};
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_double(std::string_view token, double& out) {
    token = trim(token);
    if (token.empty()) return false;
    if (token.front() == '+') token.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
    return ec == std::errc() && ptr == token.data() + token.size() && std::isfinite(out);
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

template <class Fn>
void for_each_line(std::string_view text, Fn fn) {
    std::size_t line_no = 0, pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        fn(trim(text.substr(pos, end - pos)), ++line_no);
        pos = end + 1;
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
}

std::string fmt17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

TimeSeries parse_series_csv(std::string_view text, std::string source) {
    TimeSeries out;
    out.source = std::move(source);
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line.empty()) return;
        auto fields = split_commas(line);
        double value = 0.0;
        if (!parse_double(fields.back(), value)) {
            if (line_no == 1) return;  // header
            throw ParseError("expected a numeric value, got '" + std::string(line) + "'", line_no);
        }
        out.values.push_back(value);
    });
    return out;
}

TimeSeries load_csv(const std::filesystem::path& path) { return parse_series_csv(read_file(path), path.string()); }

void write_csv(const TimeSeries& series, const std::filesystem::path& path) {
    std::string text = "value\n";
    for (double v : series.values) text += fmt17(v) + "\n";
    write_file(path, text);
}

Samples parse_table_csv(std::string_view text) {
    Samples out;
    std::size_t width = 0;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line.empty()) return;
        auto fields = split_commas(line);
        std::vector<double> row(fields.size());
        bool numeric = true;
        for (std::size_t i = 0; i < fields.size() && numeric; ++i) numeric = parse_double(fields[i], row[i]);
        if (!numeric) {
            if (line_no == 1) return;
            throw ParseError("non-numeric field in '" + std::string(line) + "'", line_no);
        }
        if (fields.size() < 2) throw ParseError("need at least one input column and a target", line_no);
        if (width == 0) {
            width = fields.size();
            out.X = Matrix(0, width - 1);
        } else if (fields.size() != width) {
            throw ParseError("expected " + std::to_string(width) + " columns", line_no);
        }
        out.d.push_back(row.back());
        row.pop_back();
        out.X.append_row(row);
    });
    if (out.empty()) throw EmptyData("table has no rows");
    return out;
}

Samples load_table_csv(const std::filesystem::path& path) { return parse_table_csv(read_file(path)); }

void write_table_csv(const Samples& samples, const std::filesystem::path& path) {
    std::string text;
    for (std::size_t c = 0; c < samples.X.cols(); ++c) text += "x" + std::to_string(c) + ",";
    text += "y\n";
    for (std::size_t r = 0; r < samples.size(); ++r) {
        for (double x : samples.X.row(r)) text += fmt17(x) + ",";
        text += fmt17(samples.d[r]) + "\n";
    }
    write_file(path, text);
}

std::string dataset_csv(const Dataset& dataset) {
    std::vector<std::string> role(dataset.rows(), "unused");
    for (std::size_t r : dataset.partition.train) role[r] = "train";
    for (std::size_t r : dataset.partition.validation) role[r] = "validation";
    for (std::size_t r : dataset.partition.test) role[r] = "test";

    std::string text = "row,role";
    for (std::size_t c = 0; c < dataset.X.cols(); ++c) text += ",x" + std::to_string(c);
    text += ",d\n";
    for (std::size_t r = 0; r < dataset.rows(); ++r) {
        text += std::to_string(r) + "," + role[r];
        for (double x : dataset.X.row(r)) text += "," + fmt17(x);
        text += "," + fmt17(dataset.d[r]) + "\n";
    }
    return text;
}

TimeSeries synth_series(const SynthConfig& config) {
    if (!(config.period > 0.0)) throw ConfigError("period must be positive");
    if (!(std::fabs(config.phi) < 1.0)) throw ConfigError("phi must lie in (-1, 1)");
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> eps(0.0, 1.0);
    TimeSeries out;
    out.source = "synth";
    out.values.reserve(config.length);
    double n = 0.0;
    for (std::size_t t = 0; t < config.length; ++t) {
        n = config.phi * n + config.noise * eps(rng);
        // Reducing t modulo the period first keeps the seasonal term exactly periodic.
        const double cycle = std::fmod(static_cast<double>(t), config.period) / config.period;
        const double season = std::sin(2.0 * std::numbers::pi * cycle + config.phase);
        out.values.push_back(config.base + config.amplitude * season + n);
    }
    return out;
}

} // namespace sfn
