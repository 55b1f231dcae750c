#pragma once

// Probability-simplex arithmetic: total variation distance, Tsallis entropy,
// the TaiLr estimation error and the optimal / approximate trade-off
// functions built on top of them.
//
// All functions are pure. The span overloads in `raw` skip validation and are
// meant for hot loops over rows that were validated once up front.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace adatailr {

inline constexpr double kSimplexTolerance = 1e-9;

/// A finite categorical distribution. Construction validates; there is no way
/// to obtain an invalid instance.
class Simplex {
public:
    /// Validates `probs` as-is (no renormalization). Throws on dim < 2,
    /// negative entries, or a sum further than 1e-9 from one.
    explicit Simplex(std::vector<double> probs);
    Simplex(std::initializer_list<double> probs) : Simplex(std::vector<double>(probs)) {}

    static Simplex uniform(std::size_t dim);

    std::size_t dim() const noexcept { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    std::span<const double> probs() const noexcept { return probs_; }

    bool operator==(const Simplex&) const = default;

private:
    std::vector<double> probs_;
};

/// e^(w): the one-hot distribution at token `index`.
class OneHot {
public:
    OneHot(std::size_t index, std::size_t dim);

    std::size_t index() const noexcept { return index_; }
    std::size_t dim() const noexcept { return dim_; }
    Simplex as_simplex() const;

private:
    std::size_t index_;
    std::size_t dim_;
};

struct GammaValue {
    double raw;
    double clamped;
};

/// Divides by the sum. Throws ZeroMass / NegativeEntry / DimTooSmall.
Simplex normalize(std::span<const double> raw);

double tvd(const Simplex& p, const Simplex& q);
/// 1 − p_w, i.e. ½(|1 − p_w| + Σ_{j≠w} p_j) on the simplex.
double tvd_onehot(const OneHot& w, const Simplex& p);
/// Tsallis alpha-entropy; alpha == 1 is the Shannon limit (natural log).
double tsallis_entropy(const Simplex& p, double alpha);

/// 1[z] with 1[0] = 1.
double indicator(double z);
/// Piecewise-linear relaxation of the step function with slope `lambda`.
double smooth_indicator(double z, double lambda);

/// (1−γ)·tvd(p_o, p_θ) + γ·2H₂(p_o), γ ∈ [0,1].
double estimation_error(const Simplex& p_o, const Simplex& p_theta, double gamma);
/// 1[tvd(p_o, p_θ) − 2H₂(p_o)]: the minimizer of estimation_error over γ.
double gamma_opt(const Simplex& p_o, const Simplex& p_theta);
/// ½ + λ(tvd(e^(w), p_θ) − 2H₂(p_θ)), plus its clamp to [0,1].
GammaValue gamma_tilde(const OneHot& w, const Simplex& p_theta, double lambda);

double l1_dist(const Simplex& p, const Simplex& q);
double linf_dist(const Simplex& p, const Simplex& q);
double inner(const Simplex& p, const Simplex& q);

namespace raw {

double tvd(std::span<const double> p, std::span<const double> q);
double tvd_onehot(std::size_t w, std::span<const double> p);
double sum_squares(std::span<const double> p);
/// 2·H₂(p) = 1 − Σ p_i².
double twice_tsallis2(std::span<const double> p);
double l1_dist(std::span<const double> p, std::span<const double> q);
double linf_dist(std::span<const double> p, std::span<const double> q);
double inner(std::span<const double> p, std::span<const double> q);
/// tvd − γ·z, the affine form of the estimation error; accepts any γ.
double estimation_error_affine(double tvd, double twice_h2, double gamma);
/// tvd(e^(w), p) − 2H₂(p). Exactly 0 on constant rows, where both terms
/// equal 1 − 1/N analytically.
double z_tilde(std::size_t w, std::span<const double> p);
/// Raw (unclamped) Γ̃ for label `w` under prediction `p`.
double gamma_tilde_raw(std::size_t w, std::span<const double> p, double lambda);

}  // namespace raw

}  // namespace adatailr
