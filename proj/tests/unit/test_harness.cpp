#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "sfn/harness.hpp"

using namespace sfn;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.synth.length = 1200;
    c.forecast.block = 10;
    c.runs = 2;
    c.search.candidate_epochs = 100;
    c.search.topup_epochs = 200;
    c.search.max_links = 3;
    c.search.train.max_epochs = 400;
    c.mlp.train.max_epochs = 300;
    c.mlp.hidden = 3;
    c.algorithms = {"B-BP", "ES-BP", "FLK", "FRS"};
    return c;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

RunRecord record(double train, double test, std::size_t weights, const std::string& symbolic, double val = 0.1) {
    RunRecord r;
    r.algorithm = "FLK";
    r.train_mse = train;
    r.test_mse = test;
    r.validation_mse = val;
    r.weights = weights;
    r.symbolic = symbolic;
    return r;
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("aggregation") {
    AlgorithmReport one;
    one.runs = {record(0.2, 0.3, 5, "a")};
    aggregate(one);
    CHECK(one.train_best == one.train_worst);
    CHECK(one.train_avg == one.train_best);
    CHECK(one.test_avg == 0.3);
    CHECK_FALSE(one.collapsed);

    AlgorithmReport many;
    many.runs = {record(0.2, 0.3, 5, "a", 0.5), record(0.1, 0.5, 7, "b", 0.05), record(0.3, 0.1, 9, "c", 0.2)};
    aggregate(many);
    CHECK(many.train_best == 0.1);
    CHECK(many.train_worst == 0.3);
    CHECK(many.test_best == 0.1);
    CHECK(many.test_worst == 0.5);
    CHECK(many.train_avg == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(many.avg_weights == 7.0);
    CHECK(many.best_run_symbolic == "b");
    CHECK(many.train_best <= many.train_avg);
    CHECK(many.train_avg <= many.train_worst);

    AlgorithmReport same;
    same.runs = {record(0.2, 0.3, 5, "a"), record(0.2, 0.3, 5, "a"), record(0.2, 0.3, 5, "a")};
    aggregate(same);
    CHECK(same.collapsed);

    AlgorithmReport failing = many;
    failing.runs[1].error = "boom";
    aggregate(failing);
    CHECK(failing.failed == 1);
    CHECK(failing.train_avg == doctest::Approx(0.25));
}

TEST_CASE("table labels") {
    ExperimentConfig c;
    CHECK(table_label("FB", c) == "FB-SFN (1)(K=5)");
    CHECK(table_label("FRS", c) == "FRS-SFN (1)(RF=0.5)");
    CHECK(table_label("B-BP", c) == "B-BP (9)");
    CHECK(table_label("FLY", c) == "FLY-SFN (1)");
}

TEST_CASE("an experiment runs end to end and is reproducible") {
    const ExperimentConfig c = small_config();
    const RunReport a = run_experiment(c);
    REQUIRE(a.rows.size() == 4);
    for (const auto& row : a.rows) {
        CAPTURE(row.algorithm);
        CHECK(row.runs.size() == 2);
        CHECK(row.failed == 0);
        double sum = 0.0;
        for (const auto& r : row.runs) sum += r.test_mse;
        CHECK(std::fabs(row.test_avg - sum / 2.0) <= 1e-12);
        CHECK(row.test_best <= row.test_avg);
        CHECK(row.test_avg <= row.test_worst);
    }
    // FLK does not depend on the seed beyond candidate initialization; MLP rows use the seed
    CHECK(a.rows[0].runs[0].seed == c.seed);
    CHECK(a.rows[0].runs[1].seed == c.seed + 1);

    // weight bookkeeping
    for (const auto& r : a.rows[2].runs) CHECK(r.weights == parse_model(r.serialized).count_weights());
    for (const auto& r : a.rows[0].runs) CHECK(r.weights == mlp_weight_count(4, 3));

    // test-set predictions
    const Dataset data = prepare_forecast(synth_series(c.synth), c.forecast);
    for (const auto& row : a.rows)
        for (const auto& r : row.runs) CHECK(r.predictions.size() == data.partition.test.size());

    const RunReport b = run_experiment(c);
    CHECK(report_csv(a) == report_csv(b));
    CHECK(runs_csv(a) == runs_csv(b));
    CHECK(report_markdown(a) == report_markdown(b));

    ExperimentConfig threaded = c;
    threaded.jobs = 3;
    CHECK(report_csv(run_experiment(threaded)) == report_csv(a));
}

TEST_CASE("report CSV round-trips") {
    const RunReport r = run_experiment(small_config());
    const auto rows = parse_report_csv(report_csv(r));
    REQUIRE(rows.size() == r.rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].algorithm == r.rows[i].algorithm);
        CHECK(rows[i].label == r.rows[i].label);
        CHECK(rows[i].train_avg == r.rows[i].train_avg);
        CHECK(rows[i].test_worst == r.rows[i].test_worst);
        CHECK(rows[i].avg_weights == r.rows[i].avg_weights);
        CHECK(rows[i].collapsed == r.rows[i].collapsed);
    }
}

TEST_CASE("emitted files") {
    const auto dir = std::filesystem::temp_directory_path() / "sfn_test_report";
    std::filesystem::remove_all(dir);
    const RunReport r = run_experiment(small_config());
    emit_report(r, dir);
    CHECK(std::filesystem::exists(dir / "report.md"));
    CHECK(std::filesystem::exists(dir / "report.csv"));
    CHECK(std::filesystem::exists(dir / "runs.csv"));
    CHECK(std::filesystem::exists(dir / "predictions_FLK_1.csv"));
    CHECK(std::filesystem::exists(dir / "model_FLK_1.sfn"));
    CHECK(std::filesystem::exists(dir / "trace_FRS_2.csv"));
    CHECK(std::filesystem::exists(dir / "predictions_B-BP_2.csv"));
    const std::string md = slurp(dir / "report.md");
    CHECK(md.find("| Algorithm |") != std::string::npos);
    CHECK(md.find("FRS-SFN (1)(RF=0.5)") != std::string::npos);
    CHECK(parse_model(slurp(dir / "model_FLK_1.sfn")) == parse_model(r.rows[2].runs[0].serialized));
    std::filesystem::remove_all(dir);
}

TEST_CASE("a failing cell does not abort the others") {
    const Dataset data = prepare_forecast(synth_series({}), {});
    ExperimentConfig c = small_config();
    c.search.max_depth = 1;
    const RunRecord bad = run_cell("NOPE", 1, data, c);
    CHECK(bad.error);
    CHECK(bad.error->find("NOPE") != std::string::npos);
    const RunRecord good = run_cell("FLK", 1, data, c);
    CHECK_FALSE(good.error);
}

TEST_CASE("seed-invariant algorithms collapse to one row") {
    ExperimentConfig c = small_config();
    c.algorithms = {"FLY"};
    c.runs = 3;
    // FLY initializes layers from the seed, so pin every run to the same one
    const Dataset data = prepare_forecast(synth_series(c.synth), c.forecast);
    AlgorithmReport row;
    for (int i = 0; i < 3; ++i) row.runs.push_back(run_cell("FLY", 7, data, c));
    aggregate(row);
    CHECK(row.collapsed);
}

TEST_CASE("in-class regression: SFN against a small MLP under equal epochs") {
    sfn::PartitionConfig split;
    split.test_fraction = 0.25;
    const Dataset data = make_regression_dataset(fixtures::recovery_samples(200), split, true);
    ExperimentConfig c;
    c.search.candidate_epochs = 500;
    c.search.topup_epochs = 2000;
    c.mlp.hidden = 3;
    c.mlp.train.max_epochs = 2500;
    const RunRecord sfn_run = run_cell("FB", 1, data, c);
    const RunRecord mlp_run = run_cell("B-BP", 1, data, c);
    REQUIRE_FALSE(sfn_run.error);
    REQUIRE_FALSE(mlp_run.error);
    MESSAGE("FB-SFN test MSE " << sfn_run.test_mse << " (" << sfn_run.weights << " weights); B-BP(3) test MSE "
                               << mlp_run.test_mse);
    CHECK(sfn_run.test_mse < 1e-2);
}

}
