#include <doctest.h>

#include <cmath>
#include <random>

#include "sfn/error.hpp"
#include "sfn/grad_engine.hpp"
#include "sfn/random_model.hpp"
#include "sfn/trainer.hpp"

using namespace sfn;

namespace {

Matrix grid_1d(std::size_t n, double lo, double hi) {
    Matrix X(n, 1);
    for (std::size_t i = 0; i < n; ++i) X(i, 0) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return X;
}

} // namespace

TEST_SUITE("trainer") {

TEST_CASE("one-example E3 fit reaches the closed-form optimum") {
    SfnModel m(1, 1);
    m.add_link(kRoot, FunctionKind::E3, 0, LinkWeights::e3(0.2));
    Matrix X(1, 1);
    X(0, 0) = 1.0;
    const std::vector<double> d{std::log(2.0)};
    const TrainResult r = train(m, X, d, TrainConfig{});
    CHECK(std::fabs(m.flatten_weights()[0] - 1.0) < 1e-4);
    CHECK(r.weight_snapshot == m.flatten_weights());
}

TEST_CASE("target inside the hypothesis class is fitted to 1e-6") {
    const Matrix X = grid_1d(50, -2.0, 2.0);
    std::vector<double> d(50);
    for (std::size_t i = 0; i < 50; ++i) d[i] = 2.0 * std::log(X(i, 0) * X(i, 0) + 1.0);
    SfnModel m(1, 1);
    m.add_link(kRoot, FunctionKind::E3, 0, LinkWeights::e3(-0.3));
    train(m, X, d, TrainConfig{});
    CHECK(mse(m, X, d) < 1e-6);
    CHECK(m.flatten_weights()[0] == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("a model already at J = 0 is left alone") {
    const Matrix X = grid_1d(10, -1.0, 1.0);
    SfnModel m(1, 1);
    m.add_link(kRoot, FunctionKind::E1, 0, LinkWeights::e1(0.7, 1.2));
    std::vector<double> d(10);
    for (std::size_t i = 0; i < 10; ++i) d[i] = eval_model(m, X.row(i));
    const auto before = m.flatten_weights();
    const TrainResult r = train(m, X, d, TrainConfig{});
    CHECK(r.epochs_run == 0);
    CHECK(m.flatten_weights() == before);
}

TEST_CASE("mse") {
    const Matrix X = grid_1d(4, 0.0, 1.0);
    const std::vector<double> ones(4, 1.0);
    SfnModel empty(1, 1);
    CHECK(mse(empty, X, ones) == 1.0);

    std::mt19937_64 rng(6);
    RandomModelSpec spec;
    spec.arity = 1;
    const SfnModel m = random_model(rng, spec);
    const Matrix R = random_matrix(rng, 17, 1, -1.0, 1.0);
    std::vector<double> d(17);
    for (double& v : d) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    CHECK(mse(m, R, d) * 17.0 == doctest::Approx(batch_gradient(m, R, d).J).epsilon(1e-12));
}

TEST_CASE("init_weights ranges and determinism") {
    std::mt19937_64 a(42), b(42);
    for (int i = 0; i < 10000; ++i) {
        const auto kind = kAllKinds[i % 3];
        const LinkWeights w = init_weights(kind, a);
        CHECK(w == init_weights(kind, b));
        CHECK(w.multiplier >= -0.5);
        CHECK(w.multiplier <= 0.5);
        switch (kind) {
        case FunctionKind::E1:
            REQUIRE(w.shape);
            CHECK(*w.shape >= 0.5);
            CHECK(*w.shape <= 1.5);
            break;
        case FunctionKind::E2:
            REQUIRE(w.shape);
            CHECK(*w.shape >= -0.5);
            CHECK(*w.shape <= 0.5);
            break;
        case FunctionKind::E3: CHECK_FALSE(w.shape); break;
        }
    }
}

TEST_CASE("descent sanity with a small step and no momentum") {
    std::mt19937_64 rng(77);
    std::size_t pairs = 0, violations = 0;
    for (int c = 0; c < 20; ++c) {
        RandomModelSpec spec;
        spec.max_depth = 2;
        spec.weight_lo = -1.0;
        spec.weight_hi = 1.0;
        SfnModel m = random_model(rng, spec);
        const Matrix X = random_matrix(rng, 30, 2, -1.0, 1.0);
        std::vector<double> d(30);
        for (double& v : d) v = std::uniform_real_distribution<double>(-1, 1)(rng);

        BatchEvaluator eval(m, X, d);
        TrainConfig cfg;
        cfg.learning_rate = 1e-4;
        cfg.momentum = 0.0;
        cfg.max_epochs = 100;
        cfg.patience_epochs = 0;
        double last = eval.loss(m.flatten_weights());
        steepest_descent([&](std::span<const double> w, std::span<double> g) { return eval.loss_and_gradient(w, g); },
                         m.flatten_weights(), cfg, [&](std::size_t, std::span<const double>, double J) {
                             ++pairs;
                             if (J > last) {
                                 ++violations;
                                 CHECK(J - last < 1e-12);
                             }
                             last = J;
                             return false;
                         });
    }
    CHECK(pairs >= 1900);
    CHECK(static_cast<double>(violations) <= 0.01 * static_cast<double>(pairs));
}

TEST_CASE("every weight with a nonzero gradient moves in one epoch") {
    std::mt19937_64 rng(9);
    SfnModel m = random_model(rng, {});
    const Matrix X = random_matrix(rng, 20, 2, -1.0, 1.0);
    std::vector<double> d(20, 0.5);
    const auto before = m.flatten_weights();
    const auto g = batch_gradient(m, X, d);
    TrainConfig cfg;
    cfg.max_epochs = 1;
    cfg.learning_rate = 1e-3;
    train(m, X, d, cfg);
    const auto after = m.flatten_weights();
    for (std::size_t i = 0; i < before.size(); ++i)
        if (g.gradient[i] != 0.0) CHECK(after[i] != before[i]);
}

TEST_CASE("training is reproducible bit for bit") {
    std::mt19937_64 rng(10);
    const SfnModel start = random_model(rng, {});
    const Matrix X = random_matrix(rng, 40, 2, -1.0, 1.0);
    std::vector<double> d(40);
    for (double& v : d) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    SfnModel a = start, b = start;
    TrainConfig cfg;
    cfg.max_epochs = 300;
    const TrainResult ra = train(a, X, d, cfg);
    const TrainResult rb = train(b, X, d, cfg);
    CHECK(ra.final_train_J == rb.final_train_J);
    CHECK(ra.epochs_run == rb.epochs_run);
    CHECK(ra.weight_snapshot == rb.weight_snapshot);
    CHECK(a == b);
}

TEST_CASE("overflowing steps are rejected and the learning rate halves") {
    // A large initial alpha with a large step pushes exp() past the guard.
    SfnModel m(1, 1);
    m.add_link(kRoot, FunctionKind::E2, 0, LinkWeights::e2(1.0, 3.0));
    const Matrix X = grid_1d(20, -2.0, 2.0);
    const std::vector<double> d(20, 0.0);
    const double start_J = batch_gradient(m, X, d).J;
    TrainConfig cfg;
    cfg.learning_rate = 10.0;
    cfg.max_epochs = 200;
    const TrainResult r = train(m, X, d, cfg);
    CHECK(r.lr_halvings > 0);
    CHECK(std::isfinite(r.final_train_J));
    CHECK(r.final_train_J <= start_J);
    CHECK(r.weight_snapshot.size() == m.count_weights());
}

TEST_CASE("divergence stops after the configured halvings") {
    int calls = 0;
    const Objective always_bad = [&](std::span<const double> w, std::span<double> g) {
        if (calls++ == 0) {
            g[0] = 1.0;
            return w[0] * w[0] + 1.0;
        }
        throw NonFiniteResult("boom");
    };
    TrainConfig cfg;
    cfg.max_lr_halvings = 3;
    const TrainResult r = steepest_descent(always_bad, {0.5}, cfg);
    CHECK(r.diverged);
    CHECK(r.lr_halvings == 3);
    CHECK(r.weight_snapshot == std::vector<double>{0.5});
}

TEST_CASE("preconditions") {
    SfnModel empty(1, 1);
    const Matrix X = grid_1d(3, 0, 1);
    const std::vector<double> d(3, 0.0);
    CHECK_THROWS_AS(train(empty, X, d, {}), EmptyModel);
    SfnModel m(1, 1);
    m.add_link(kRoot, FunctionKind::E3, 0, LinkWeights::e3(1));
    CHECK_THROWS_AS(train(m, Matrix(0, 1), std::vector<double>{}, {}), EmptyData);
    TrainConfig bad;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = {};
    bad.momentum = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = {};
    bad.max_epochs = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

}
