#include <doctest.h>

#include <cmath>
#include <random>

#include "adatailr/error.hpp"
#include "adatailr/gmm.hpp"

using namespace adatailr;

TEST_CASE("em recovers a well separated two-component mixture") {
    std::mt19937_64 rng(21);
    std::normal_distribution<double> a(-2.0, 0.5), b(4.0, 1.0);
    std::vector<double> x;
    for (int i = 0; i < 3000; ++i) x.push_back(i % 3 == 0 ? b(rng) : a(rng));
    const auto fit = fit_gmm_1d(x, 2);
    const std::size_t lo = fit.means[0] < fit.means[1] ? 0 : 1, hi = 1 - lo;
    CHECK(std::abs(fit.means[lo] + 2.0) < 0.1);
    CHECK(std::abs(fit.means[hi] - 4.0) < 0.15);
    CHECK(std::abs(fit.variances[lo] - 0.25) < 0.05);
    CHECK(std::abs(fit.variances[hi] - 1.0) < 0.15);
    CHECK(std::abs(fit.mixing[hi] - 1.0 / 3.0) < 0.03);
    CHECK(std::abs(fit.mixing[0] + fit.mixing[1] - 1.0) < 1e-12);
    CHECK(fit.iterations <= 100);
}

TEST_CASE("em is deterministic and respects the variance floor") {
    std::vector<double> x{1, 1, 1, 1, 5, 5, 5, 5};
    const auto f1 = fit_gmm_1d(x, 2);
    const auto f2 = fit_gmm_1d(x, 2);
    CHECK(f1.means == f2.means);
    CHECK(f1.variances == f2.variances);
    for (double v : f1.variances) CHECK(v >= 1e-6);
}

TEST_CASE("three components") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 0.1);
    std::vector<double> x;
    for (int i = 0; i < 900; ++i) x.push_back(static_cast<double>(i % 3) * 3.0 + n(rng));
    const auto r = gmm_reweight(x, 3);
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i % 3 == 0) {
            CHECK(r.weights[i] > 0.99);
        } else {
            CHECK(r.weights[i] < 0.01);
        }
    }
}

TEST_CASE("too few samples is an error") {
    CHECK_THROWS_AS(gmm_reweight(std::vector<double>{1.0, 2.0, 3.0}, 2), Error);
}
