#include <doctest.h>

#include <cmath>
#include <sstream>

#include "adatailr/error.hpp"
#include "adatailr/simplex.hpp"
#include "adatailr/trainer.hpp"

using namespace adatailr;

TEST_CASE("weight_auc examples") {
    CHECK(weight_auc(std::vector{0.9, 0.8, 0.1}, {true, true, false}) == 1.0);
    CHECK(weight_auc(std::vector{0.4, 0.4, 0.4, 0.4}, {true, false, true, false}) == 0.5);
    CHECK(weight_auc(std::vector{0.9, 0.8, 0.3}, {true, false, false}) == 1.0);
    CHECK(weight_auc(std::vector{0.1, 0.9}, {true, false}) == 0.0);
    CHECK_THROWS_AS(weight_auc(std::vector{0.1, 0.2}, {true, true}), Error);

    // brute-force pair count oracle
    const std::vector<double> w{0.3, 0.7, 0.7, 0.1, 0.5, 0.3, 0.9};
    const std::vector<bool> f{true, false, true, false, true, false, true};
    double wins = 0.0, pairs = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        for (std::size_t j = 0; j < w.size(); ++j) {
            if (!f[i] || f[j]) continue;
            pairs += 1.0;
            wins += w[i] > w[j] ? 1.0 : (w[i] == w[j] ? 0.5 : 0.0);
        }
    }
    CHECK(std::abs(weight_auc(w, f) - wins / pairs) < 1e-15);
}

TEST_CASE("closed_form_mle") {
    Dataset d{{{0, 0, true}, {0, 0, true}, {0, 1, true}, {1, 1, true}}, 2, 2};
    const auto m = closed_form_mle(d);
    CHECK(std::abs(m(0, 0) - 2.0 / 3.0) < 1e-8);
    CHECK(m(1, 1) > 1.0 - 1e-8);
    Dataset empty{{{0, 0, true}}, 2, 2};
    CHECK_THROWS_AS(closed_form_mle(empty), Error);

    const auto task = make_task(2, 5, 0.5, 3);
    const auto big = closed_form_mle(corrupt(task, {0.0}, 100000, 4));
    for (std::size_t c = 0; c < 2; ++c) CHECK(raw::l1_dist(big.row(c), task.conditionals.row(c)) < 0.02);
}

TEST_CASE("step 0 adatailr gamma is one half") {
    const auto task = make_task(4, 7, 0.3, 1);
    const auto data = corrupt(task, {0.4}, 50, 2);
    for (double lambda : {0.3, 1.0, 9.0}) {
        TrainConfig cfg;
        cfg.loss.kind = LossKind::adatailr;
        cfg.loss.lambda = lambda;
        cfg.steps = 1;
        cfg.batch_size = 16;
        const auto r = train(task, data, cfg);
        CHECK(r.metrics.rows.front().step == 0);
        CHECK(r.metrics.rows.front().mean_gamma == 0.5);
        const auto w = dataset_weights(Matrix(4, 7, 1.0 / 7.0), data, cfg.loss, 0.0);
        for (double g : w.gamma) CHECK(g == 0.5);
    }
}

TEST_CASE("kld full batch converges to the empirical optimum") {
    const auto task = make_task(6, 8, 0.3, 5);
    const auto data = corrupt(task, {0.0}, 400, 6);
    TrainConfig cfg;
    cfg.batch_size = 1 << 30;
    cfg.steps = 5000;
    cfg.eval_every = 500;
    const auto r = train(task, data, cfg);
    const auto mle = closed_form_mle(data);
    const auto p = r.model.conditionals();
    for (std::size_t c = 0; c < 6; ++c) CHECK(raw::l1_dist(p.row(c), mle.row(c)) <= 0.05);
    CHECK(r.metrics.rows.back().tvd_to_clean < 0.05);
    CHECK(r.metrics.rows.back().step == 5000);
}

TEST_CASE("training is bitwise reproducible and metrics are in range") {
    const auto task = make_task(5, 6, 0.3, 7);
    const auto data = corrupt(task, {0.3}, 80, 8);
    for (LossKind kind : {LossKind::kld, LossKind::tailr, LossKind::adatailr, LossKind::loss_truncation,
                          LossKind::gmm_reweight}) {
        TrainConfig cfg;
        cfg.loss.kind = kind;
        cfg.steps = 200;
        cfg.batch_size = 64;
        cfg.eval_every = 20;
        cfg.seed = 3;
        std::ostringstream a, b;
        write_metrics_csv(a, train(task, data, cfg).metrics);
        const auto r = train(task, data, cfg);
        write_metrics_csv(b, r.metrics);
        CHECK(a.str() == b.str());
        CHECK(r.metrics.rows.size() == 11);
        for (const auto& m : r.metrics.rows) {
            CHECK(m.tvd_to_clean >= 0.0);
            CHECK(m.tvd_to_clean <= 1.0);
            CHECK(m.weight_auc >= 0.0);
            CHECK(m.weight_auc <= 1.0);
            CHECK(m.d_hat == doctest::Approx(m.tvd_to_clean).epsilon(1e-12));
        }
    }
}

TEST_CASE("metrics csv header") {
    std::ostringstream os;
    write_metrics_csv(os, RunMetrics{{{0, 1.0, 0.5, 0.25, 0.125, 0.5, 0.125}}});
    CHECK(os.str() == "step,train_loss,mean_gamma,mean_weight,tvd_to_clean,weight_auc,d_hat\n0,1,0.5,0.25,0.125,0.5,0.125\n");
}

TEST_CASE("config validation") {
    const auto task = make_task(2, 3, 1.0, 1);
    const auto data = corrupt(task, {0.0}, 5, 1);
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    try {
        train(task, data, cfg);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::non_positive_learning_rate);
    }
    const auto other = make_task(3, 3, 1.0, 1);
    try {
        train(other, data, TrainConfig{});
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::shape_mismatch);
    }
}
