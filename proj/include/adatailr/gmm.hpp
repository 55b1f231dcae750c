#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace adatailr {

struct GmmOptions {
    int max_iterations = 100;
    double variance_floor = 1e-6;
    double tolerance = 1e-8;  // stop when the log-likelihood gain drops below this
    std::uint64_t seed = 0;   // k-means++ seeding
};

struct GaussianMixture1D {
    std::vector<double> mixing;
    std::vector<double> means;
    std::vector<double> variances;
    double log_likelihood = 0.0;
    int iterations = 0;
};

struct GmmReweightResult {
    /// Posterior of the lowest-mean component per sample.
    std::vector<double> weights;
    /// Full posterior matrix, samples × components (empty when degenerate).
    std::vector<std::vector<double>> posteriors;
    GaussianMixture1D fit;
    bool degenerate = false;
};

/// Fits a 1-D mixture by EM from a k-means++ start.
GaussianMixture1D fit_gmm_1d(std::span<const double> values, int components,
                             const GmmOptions& options = {});

/// Clean-component posteriors of a loss mixture. All-equal losses yield
/// weights of 1 and `degenerate = true`.
GmmReweightResult gmm_reweight(std::span<const double> losses, int components,
                               const GmmOptions& options = {});

}  // namespace adatailr
