#include "adatailr/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "adatailr/error.hpp"

namespace adatailr {

namespace {

double log_normal_pdf(double x, double mean, double var) {
    const double d = x - mean;
    return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

double log_sum_exp(std::span<const double> v) {
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

// k-means++ on scalars: first center uniformly, the rest proportional to the
// squared distance from the nearest chosen center.
std::vector<double> kmeans_pp_centers(std::span<const double> values, int k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    std::vector<double> centers{values[pick(rng)]};
    std::vector<double> d2(values.size());
    while (static_cast<int>(centers.size()) < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            double best = INFINITY;
            for (double c : centers) best = std::min(best, (values[i] - c) * (values[i] - c));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            centers.push_back(centers.back());
            continue;
        }
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng);
        std::size_t chosen = values.size() - 1;
        for (std::size_t i = 0; i < values.size(); ++i) {
            target -= d2[i];
            if (target <= 0.0 && d2[i] > 0.0) {
                chosen = i;
                break;
            }
        }
        centers.push_back(values[chosen]);
    }
    return centers;
}

}  // namespace

GaussianMixture1D fit_gmm_1d(std::span<const double> values, int components, const GmmOptions& options) {
    if (components < 2) throw Error(Errc::invalid_argument, "components must be >= 2");
    const std::size_t n = values.size();
    const auto k = static_cast<std::size_t>(components);
    if (n < 2 * k) {
        throw Error(Errc::invalid_argument,
                    "need >= 2*components samples, got " + std::to_string(n));
    }

    double global_mean = 0.0;
    for (double v : values) global_mean += v;
    global_mean /= static_cast<double>(n);
    double global_var = 0.0;
    for (double v : values) global_var += (v - global_mean) * (v - global_mean);
    global_var = std::max(global_var / static_cast<double>(n), options.variance_floor);

    GaussianMixture1D g;
    g.means = kmeans_pp_centers(values, components, options.seed);
    g.mixing.assign(k, 0.0);
    g.variances.assign(k, 0.0);

    // Hard assignment to the nearest center seeds the variances and weights.
    std::vector<double> sum(k, 0.0), sum_sq(k, 0.0), count(k, 0.0);
    for (double v : values) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < k; ++j) {
            if (std::abs(v - g.means[j]) < std::abs(v - g.means[best])) best = j;
        }
        sum[best] += v;
        sum_sq[best] += v * v;
        count[best] += 1.0;
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (count[j] > 0.0) {
            const double m = sum[j] / count[j];
            g.means[j] = m;
            g.variances[j] = std::max(sum_sq[j] / count[j] - m * m, options.variance_floor);
            g.mixing[j] = count[j] / static_cast<double>(n);
        } else {
            g.variances[j] = global_var;
            g.mixing[j] = 1.0 / static_cast<double>(n);
        }
    }
    double mix_total = 0.0;
    for (double w : g.mixing) mix_total += w;
    for (double& w : g.mixing) w /= mix_total;

    std::vector<double> resp(n * k);
    std::vector<double> row(k);
    double prev_ll = -INFINITY;
    for (int it = 0; it < options.max_iterations; ++it) {
        // E step
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) {
                row[j] = std::log(g.mixing[j]) + log_normal_pdf(values[i], g.means[j], g.variances[j]);
            }
            const double lse = log_sum_exp(row);
            ll += lse;
            for (std::size_t j = 0; j < k; ++j) resp[i * k + j] = std::exp(row[j] - lse);
        }
        g.log_likelihood = ll;
        g.iterations = it + 1;
        if (ll - prev_ll < options.tolerance) break;
        prev_ll = ll;

        // M step
        for (std::size_t j = 0; j < k; ++j) {
            double nk = 0.0, mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                nk += resp[i * k + j];
                mean += resp[i * k + j] * values[i];
            }
            if (nk <= 0.0) continue;
            mean /= nk;
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = values[i] - mean;
                var += resp[i * k + j] * d * d;
            }
            g.means[j] = mean;
            g.variances[j] = std::max(var / nk, options.variance_floor);
            g.mixing[j] = std::max(nk / static_cast<double>(n), 1e-300);
        }
    }
    return g;
}

GmmReweightResult gmm_reweight(std::span<const double> losses, int components, const GmmOptions& options) {
    if (components < 2) throw Error(Errc::invalid_argument, "components must be >= 2");
    if (losses.size() < 2 * static_cast<std::size_t>(components)) {
        throw Error(Errc::invalid_argument, "need >= 2*components losses");
    }
    GmmReweightResult out;
    const auto [lo, hi] = std::minmax_element(losses.begin(), losses.end());
    if (*lo == *hi) {
        out.weights.assign(losses.size(), 1.0);
        out.degenerate = true;
        return out;
    }

    out.fit = fit_gmm_1d(losses, components, options);
    const auto k = static_cast<std::size_t>(components);
    const std::size_t clean = static_cast<std::size_t>(
        std::min_element(out.fit.means.begin(), out.fit.means.end()) - out.fit.means.begin());

    out.weights.resize(losses.size());
    out.posteriors.assign(losses.size(), std::vector<double>(k));
    std::vector<double> row(k);
    for (std::size_t i = 0; i < losses.size(); ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            row[j] = std::log(out.fit.mixing[j]) +
                     log_normal_pdf(losses[i], out.fit.means[j], out.fit.variances[j]);
        }
        const double lse = log_sum_exp(row);
        for (std::size_t j = 0; j < k; ++j) out.posteriors[i][j] = std::exp(row[j] - lse);
        out.weights[i] = out.posteriors[i][clean];
    }
    return out;
}

}  // namespace adatailr
