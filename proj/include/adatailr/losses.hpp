#pragma once

// Token-level training objectives over a batch of predicted distributions.
//
// Every weighted objective here has the form Σ_i −w_i·log p_{i,y_i} where the
// weight w_i is a function of the prediction but is treated as a constant for
// differentiation (detached). Reduction is a plain sum over tokens.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adatailr/matrix.hpp"

namespace adatailr {

inline constexpr double kLogFloor = 1e-12;

enum class LossKind { kld, tailr, adatailr, loss_truncation, gmm_reweight };

std::string_view to_string(LossKind kind);
/// Accepts the canonical names: KLD, TaiLr, AdaTaiLr, LossTruncation, GmmReweight
/// (case-insensitive).
LossKind parse_loss_kind(std::string_view name);

struct LossSpec {
    LossKind kind = LossKind::kld;
    double gamma = 0.1;       // TaiLr trade-off
    double lambda = 1.0;      // AdaTaiLr smoothness
    double delta = 0.1;       // weight floor (TaiLr, AdaTaiLr)
    double trunc_frac = 0.2;  // LossTruncation drop fraction
    int gmm_components = 2;

    /// Range-checks every field regardless of kind.
    void validate() const;
};

/// L×N matrix of predicted distributions plus one label per row.
class TokenBatch {
public:
    TokenBatch(Matrix probs, std::vector<std::size_t> labels,
               std::optional<std::vector<bool>> clean = std::nullopt);

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t vocab() const noexcept { return probs_.cols(); }
    const Matrix& probs() const noexcept { return probs_; }
    std::span<const std::size_t> labels() const noexcept { return labels_; }
    const std::optional<std::vector<bool>>& clean() const noexcept { return clean_; }

    double label_prob(std::size_t i) const { return probs_(i, labels_[i]); }

private:
    Matrix probs_;
    std::vector<std::size_t> labels_;
    std::optional<std::vector<bool>> clean_;
};

struct WeightedLoss {
    double total = 0.0;
    std::vector<double> per_token_loss;
    std::vector<double> per_token_weight;
    std::vector<double> per_token_gamma;
};

struct TokenWeights {
    std::vector<double> weight;
    std::vector<double> gamma;
};

/// p / (γ + (1−γ)p); the γ = p = 0 limit is taken as 1.
double tailr_weight(double p, double gamma);

WeightedLoss kld_loss(const TokenBatch& batch);
WeightedLoss tailr_loss(const TokenBatch& batch, double gamma, double delta);
WeightedLoss adatailr_loss(const TokenBatch& batch, double lambda, double delta);
TokenWeights adatailr_weights(const TokenBatch& batch, double lambda, double delta);

struct TruncationResult {
    std::vector<double> mask;  // 0 for dropped entries, 1 otherwise
    double total = 0.0;
};

/// Drops the ⌈c·n⌉ largest losses; among equal losses the earliest index is
/// kept longest.
TruncationResult loss_truncation(std::span<const double> losses, double c);

/// Per-token weights for any loss kind. `delta` overrides spec.delta so the
/// trainer can schedule the floor.
TokenWeights token_weights(const TokenBatch& batch, const LossSpec& spec, double delta);
TokenWeights token_weights(const TokenBatch& batch, const LossSpec& spec);

/// Dispatches on spec.kind; gamma entries are 0 for kinds without a trade-off.
WeightedLoss compute_loss(const TokenBatch& batch, const LossSpec& spec);

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

/// Row i: w_i·(softmax(logits_i) − onehot(y_i)), weights frozen at `logits`.
Matrix weighted_nll_grad(const Matrix& probs, std::span<const std::size_t> labels,
                         std::span<const double> weights);

/// Gradient of the summed loss with respect to the logits under the
/// detached-weight contract.
Matrix loss_grad(const Matrix& logits, std::span<const std::size_t> labels, const LossSpec& spec);

/// Σ_i −w_i·log softmax(logits_i)_{y_i} for fixed weights.
double weighted_nll(const Matrix& logits, std::span<const std::size_t> labels, std::span<const double> weights);

/// ‖analytic − numeric‖₂ / max(‖analytic‖₂, ‖numeric‖₂), where the numeric
/// gradient is a central difference of weighted_nll with the weights frozen
/// at `logits`. 0 when both gradients vanish.
double grad_check_error(const Matrix& logits, std::span<const std::size_t> labels, const LossSpec& spec,
                        double step = 1e-5);

}  // namespace adatailr
