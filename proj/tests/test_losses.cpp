#include <doctest.h>

#include <cmath>
#include <random>

#include "adatailr/error.hpp"
#include "adatailr/gmm.hpp"
#include "adatailr/losses.hpp"

using namespace adatailr;

namespace {

TokenBatch batch_of(std::vector<std::vector<double>> rows, std::vector<std::size_t> labels) {
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    return TokenBatch(std::move(m), std::move(labels));
}

// AdaTaiLr weight computed from scratch: Γ = clamp(½ + λ(‖p‖² − p_y)).
double oracle_ada_weight(const std::vector<double>& p, std::size_t y, double lambda, double delta, double* gamma) {
    double sq = 0.0;
    for (double v : p) sq += v * v;
    const double g = std::min(1.0, std::max(0.0, 0.5 + lambda * (sq - p[y])));
    if (gamma) *gamma = g;
    return std::max(delta, p[y] / (g + (1.0 - g) * p[y]));
}

}  // namespace

TEST_CASE("kld examples") {
    CHECK(kld_loss(batch_of({{1.0, 0.0}, {0.0, 1.0}}, {0, 1})).total == 0.0);
    CHECK(std::abs(kld_loss(batch_of({{0.5, 0.5}}, {0})).total - std::log(2.0)) < 1e-12);
    const auto two = kld_loss(batch_of({{0.8, 0.2}, {0.8, 0.2}}, {0, 1}));
    CHECK(std::abs(two.total - 1.832582) < 1e-6);
    CHECK(std::abs(two.total - (-std::log(0.8) - std::log(0.2))) < 1e-12);
}

TEST_CASE("tailr examples") {
    const auto b = batch_of({{0.8, 0.2}, {0.3, 0.7}, {0.5, 0.5}}, {0, 0, 1});
    const auto k = kld_loss(b);
    const auto t0 = tailr_loss(b, 0.0, 0.0);
    CHECK(t0.total == k.total);  // bitwise
    CHECK(t0.per_token_loss == k.per_token_loss);
    for (double w : t0.per_token_weight) CHECK(w == 1.0);

    const auto t1 = tailr_loss(batch_of({{0.5, 0.5}}, {0}), 1.0, 0.0);
    CHECK(t1.per_token_weight[0] == 0.5);
    CHECK(std::abs(t1.total - 0.346574) < 1e-6);

    const auto floored = tailr_loss(batch_of({{0.5, 0.5}}, {0}), 0.5, 0.7);
    CHECK(floored.per_token_weight[0] == 0.7);
}

TEST_CASE("tailr weight is increasing in p and bounded") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 5000; ++t) {
        const double gamma = u(rng) * 0.999 + 0.001;
        double a = u(rng), b = u(rng);
        if (a == b || a == 0.0 || b == 0.0) continue;
        if (a > b) std::swap(a, b);
        CHECK(tailr_weight(a, gamma) < tailr_weight(b, gamma));
        CHECK(tailr_weight(b, gamma) > 0.0);
        CHECK(tailr_weight(b, gamma) <= 1.0);
    }
    CHECK(tailr_weight(1.0, 0.3) == 1.0);
}

TEST_CASE("adatailr worked examples") {
    const auto uni = adatailr_loss(batch_of({{0.5, 0.5}}, {0}), 1.0, 0.0);
    CHECK(uni.per_token_gamma[0] == 0.5);
    CHECK(std::abs(uni.per_token_weight[0] - 2.0 / 3.0) < 1e-15);
    CHECK(std::abs(uni.total - 0.462098) < 1e-6);

    const auto ex = adatailr_loss(batch_of({{0.8, 0.2}}, {0}), 1.0, 0.0);
    CHECK(std::abs(ex.per_token_gamma[0] - 0.38) < 1e-12);
    CHECK(std::abs(ex.per_token_weight[0] - 0.913242) < 1e-6);
    CHECK(std::abs(ex.per_token_weight[0] - 0.8 / 0.876) < 1e-12);
    CHECK(std::abs(ex.total - (0.8 / 0.876) * -std::log(0.8)) < 1e-12);

    // p = (0.99, 0.01): 2H₂ = 0.0198, z̃ = 0.01 − 0.0198, Γ = 0.4902
    const auto hi = adatailr_weights(batch_of({{0.99, 0.01}}, {0}), 1.0, 0.0);
    CHECK(std::abs(hi.gamma[0] - 0.4902) < 1e-12);
    CHECK(std::abs(hi.weight[0] - 0.99 / (0.4902 + 0.5098 * 0.99)) < 1e-12);

    // Γ clamped to 0 → plain NLL
    const auto zero = adatailr_loss(batch_of({{0.99, 0.01}}, {0}), 100.0, 0.0);
    CHECK(zero.per_token_gamma[0] == 0.0);
    CHECK(zero.per_token_weight[0] == 1.0);
    CHECK(std::abs(zero.total + std::log(0.99)) < 1e-15);

    const auto floored = adatailr_weights(batch_of({{0.95, 0.05}}, {1}), 1.0, 0.2);
    CHECK(floored.weight[0] == 0.2);
}

TEST_CASE("adatailr uniform rows give gamma one half exactly") {
    for (std::size_t n : {2, 3, 5, 7, 31, 32, 100}) {
        std::vector<double> row(n, 1.0 / static_cast<double>(n));
        for (double lambda : {0.01, 1.0, 50.0}) {
            for (std::size_t y : {std::size_t{0}, n - 1}) {
                const auto w = adatailr_weights(batch_of({row}, {y}), lambda, 0.0);
                CHECK(w.gamma[0] == 0.5);
            }
        }
    }
}

TEST_CASE("adatailr weights match an independent oracle") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 300; ++t) {
        const std::size_t n = 2 + rng() % 12;
        std::vector<double> p(n);
        double s = 0.0;
        for (double& v : p) s += (v = u(rng) * u(rng));
        for (double& v : p) v /= s;
        const std::size_t y = rng() % n;
        const double lambda = 0.1 + 5.0 * u(rng), delta = 0.3 * u(rng);
        double g = 0.0;
        const double w = oracle_ada_weight(p, y, lambda, delta, &g);
        const auto got = adatailr_weights(batch_of({p}, {y}), lambda, delta);
        CHECK(std::abs(got.gamma[0] - g) < 1e-12);
        CHECK(std::abs(got.weight[0] - w) < 1e-12);
        CHECK(got.weight[0] >= delta);
        CHECK(got.weight[0] <= 1.0);
    }
}

TEST_CASE("loss truncation") {
    const std::vector<double> l{1, 2, 3, 4, 5};
    const auto r = loss_truncation(l, 0.2);
    CHECK(r.total == 10.0);
    CHECK(r.mask == std::vector<double>{1, 1, 1, 1, 0});
    CHECK(loss_truncation(l, 0.0).total == 15.0);

    const auto ties = loss_truncation(std::vector<double>{2, 2, 2}, 0.34);
    CHECK(ties.total == 2.0);
    CHECK(ties.mask == std::vector<double>{1, 0, 0});

    std::mt19937_64 rng(9);
    std::vector<double> x(50);
    for (double& v : x) v = static_cast<double>(rng() % 1000) / 100.0;
    double prev = INFINITY;
    for (int k = 0; k < 100; ++k) {
        const double total = loss_truncation(x, k / 100.0).total;
        CHECK(total <= prev);
        prev = total;
    }
    CHECK_THROWS_AS(loss_truncation(x, 1.0), Error);
}

TEST_CASE("gmm reweight separates clusters") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> lo(0.1, 0.01), hi(3.0, 0.01);
    std::vector<double> losses;
    for (int i = 0; i < 200; ++i) losses.push_back(i % 2 ? hi(rng) : lo(rng));
    const auto r = gmm_reweight(losses, 2);
    CHECK_FALSE(r.degenerate);
    for (std::size_t i = 0; i < losses.size(); ++i) {
        if (i % 2) {
            CHECK(r.weights[i] < 0.01);
        } else {
            CHECK(r.weights[i] > 0.99);
        }
        double total = 0.0;
        for (double v : r.posteriors[i]) total += v;
        CHECK(std::abs(total - 1.0) < 1e-9);
    }
}

TEST_CASE("gmm reweight edge cases") {
    const auto same = gmm_reweight(std::vector<double>(10, 0.7), 2);
    CHECK(same.degenerate);
    for (double w : same.weights) CHECK(w == 1.0);

    std::vector<double> near{1.00, 1.01, 0.99, 1.02, 0.98, 1.00, 1.01, 0.99, 1.00, 9.0};
    const auto out = gmm_reweight(near, 2);
    CHECK(out.weights.back() < 0.5);
}

TEST_CASE("loss gradients") {
    Matrix logits(1, 2, 0.0);
    const std::vector<std::size_t> y{0};
    LossSpec kld;
    const Matrix g = loss_grad(logits, y, kld);
    CHECK(g(0, 0) == -0.5);
    CHECK(g(0, 1) == 0.5);

    const Matrix p = softmax_rows(logits);
    const std::vector<double> zeros{0.0};
    const Matrix zero = weighted_nll_grad(p, y, zeros);
    CHECK(zero(0, 0) == 0.0);
    CHECK(zero(0, 1) == 0.0);

    Matrix one(1, 2);
    one(0, 0) = 1.0;
    LossSpec ada{.kind = LossKind::adatailr, .lambda = 1.0, .delta = 0.0};
    CHECK(grad_check_error(one, y, ada, 1e-5) < 1e-5);

    // analytic form w·(softmax − onehot)
    const Matrix ps = softmax_rows(one);
    const TokenBatch b(ps, {0});
    const double w = token_weights(b, ada).weight[0];
    const Matrix ga = loss_grad(one, y, ada);
    CHECK(std::abs(ga(0, 0) - w * (ps(0, 0) - 1.0)) < 1e-15);
    CHECK(std::abs(ga(0, 1) - w * ps(0, 1)) < 1e-15);
}

TEST_CASE("softmax is stable for large logits") {
    Matrix l(1, 3);
    l(0, 0) = 1000.0;
    l(0, 1) = 999.0;
    l(0, 2) = -1000.0;
    const Matrix p = softmax_rows(l);
    CHECK(std::isfinite(p(0, 0)));
    CHECK(std::abs(p(0, 0) + p(0, 1) + p(0, 2) - 1.0) < 1e-12);
    CHECK(std::abs(p(0, 0) / p(0, 1) - std::exp(1.0)) < 1e-9);
}

TEST_CASE("loss spec validation and names") {
    CHECK(parse_loss_kind("adatailr") == LossKind::adatailr);
    CHECK(parse_loss_kind("KLD") == LossKind::kld);
    CHECK_THROWS_AS(parse_loss_kind("focal"), Error);
    LossSpec s;
    s.gamma = 1.5;
    CHECK_THROWS_AS(s.validate(), Error);
    s = {};
    s.lambda = 0.0;
    CHECK_THROWS_AS(s.validate(), Error);
    s = {};
    s.gmm_components = 1;
    CHECK_THROWS_AS(s.validate(), Error);
    CHECK_THROWS_AS(TokenBatch(Matrix(2, 2, 0.5), {0}), Error);
    CHECK_THROWS_AS(TokenBatch(Matrix(1, 2, 0.5), {2}), Error);
}
