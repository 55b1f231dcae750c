#pragma once

// Numerical verification of the optimal-trade-off results and their
// supporting inequalities.
//
// Every expectation over a sampled label w ~ p_o is evaluated as an exact
// finite sum over the vocabulary; only the (p_o, p_θ) pairs are random.
// Each trial derives its own generator from (seed, trial index), so reports
// are bit-reproducible and independent of evaluation order.
//
// A report's `max_violation` is the largest (lhs − rhs) seen, measured
// against a per-trial right-hand side; `bound` is the slack that violation is
// allowed to reach (0 for per-trial bounds). pass ⇔ max_violation ≤ bound +
// tolerance.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "adatailr/simplex.hpp"

namespace adatailr {

struct TheoremReport {
    std::string name;
    std::int64_t trials = 0;
    double max_violation = -INFINITY;
    double bound = 0.0;
    double tolerance = 1e-9;
    bool pass = false;
    std::uint64_t seed = 0;
    nlohmann::ordered_json details = nlohmann::ordered_json::object();

    void finalize() { pass = max_violation <= bound + tolerance; }
};

nlohmann::ordered_json to_json(const TheoremReport& report);

/// z, D and the exact expectation of z̃ for one (p_o, p_θ) pair.
struct TheoremTrial {
    Simplex p_o;
    Simplex p_theta;
    double d;                    // ½‖p_θ − p_o‖₁
    double z;                    // tvd(p_o, p_θ) − 2H₂(p_o)
    double z_tilde_expectation;  // E_{w~p_o}[tvd(e^(w), p_θ) − 2H₂(p_θ)]

    static TheoremTrial make(Simplex p_o, Simplex p_theta);
};

/// Per-trial generator seeded from (seed, index).
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t index);

/// Flat-Dirichlet draw via normalized unit exponentials.
Simplex sample_simplex(std::size_t dim, std::mt19937_64& rng);
Simplex sample_simplex(std::size_t dim, std::uint64_t seed);

inline const std::vector<std::size_t> kDefaultTrialDims{2, 3, 4, 8, 16, 32, 64};
inline const std::vector<double> kDefaultLambdas{0.5, 1.0, 2.0, 4.0};

enum class PairMode {
    independent,     // p_o, p_θ independent flat-Dirichlet draws
    one_hot_target,  // p_o one-hot, p_θ random
    identical,       // p_θ = p_o
};

TheoremReport verify_theorem1(std::int64_t trials, const std::vector<std::size_t>& dims, int grid_points,
                              std::uint64_t seed, PairMode mode = PairMode::independent);

/// Gap E_w[ε(Γ̃(w))] − ε(Γ_opt) with the unclamped Γ̃ against 9/(16λ) + 4D.
/// Details also carry the clamped variant and the ½/λ + 4D variant.
TheoremReport verify_theorem2(std::int64_t trials, const std::vector<double>& lambdas, std::uint64_t seed,
                              const std::vector<std::size_t>& dims = kDefaultTrialDims,
                              PairMode mode = PairMode::independent);

TheoremReport verify_lemma_sampled_tvd(std::int64_t trials, std::uint64_t seed,
                                       const std::vector<std::size_t>& dims = kDefaultTrialDims,
                                       PairMode mode = PairMode::independent);

/// ‖u − v‖_∞ ≤ ½‖u − v‖₁, plus the (1, ∞) Hölder inequality on the same pairs.
TheoremReport verify_lemma_norms(std::int64_t trials, std::uint64_t seed,
                                 const std::vector<std::size_t>& dims = kDefaultTrialDims);

TheoremReport verify_lemma_zdiff(std::int64_t trials, std::uint64_t seed,
                                 const std::vector<std::size_t>& dims = kDefaultTrialDims,
                                 PairMode mode = PairMode::independent);

/// (1[z] − f(z))·z ≤ 1/(16λ) on a uniform grid over [z_lo, z_hi] that also
/// contains ±1/(4λ).
TheoremReport verify_lemma_smooth(double lambda, double z_lo = -2.0, double z_hi = 2.0, double step = 1e-4);

TheoremReport verify_lemma_dist_approx(std::int64_t trials, const std::vector<double>& lambdas, std::uint64_t seed,
                                       const std::vector<std::size_t>& dims = kDefaultTrialDims,
                                       PairMode mode = PairMode::independent);

}  // namespace adatailr
