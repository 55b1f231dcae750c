#include "adatailr/losses.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <string>

#include "adatailr/error.hpp"
#include "adatailr/gmm.hpp"
#include "adatailr/simplex.hpp"

namespace adatailr {

std::string_view to_string(LossKind kind) {
    switch (kind) {
    case LossKind::kld: return "KLD";
    case LossKind::tailr: return "TaiLr";
    case LossKind::adatailr: return "AdaTaiLr";
    case LossKind::loss_truncation: return "LossTruncation";
    case LossKind::gmm_reweight: return "GmmReweight";
    }
    return "?";
}

LossKind parse_loss_kind(std::string_view name) {
    std::string lower;
    for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    for (LossKind k : {LossKind::kld, LossKind::tailr, LossKind::adatailr, LossKind::loss_truncation,
                       LossKind::gmm_reweight}) {
        std::string canon;
        for (char c : to_string(k)) canon.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        if (canon == lower) return k;
    }
    throw Error(Errc::invalid_argument, "unknown loss kind '" + std::string(name) + "'");
}

void LossSpec::validate() const {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(gamma)) throw Error(Errc::gamma_out_of_range, "gamma = " + std::to_string(gamma));
    if (!(lambda > 0.0)) throw Error(Errc::non_positive_lambda, "lambda = " + std::to_string(lambda));
    if (!in_unit(delta)) throw Error(Errc::invalid_argument, "delta must be in [0,1]");
    if (!(trunc_frac >= 0.0 && trunc_frac < 1.0)) {
        throw Error(Errc::invalid_argument, "trunc_frac must be in [0,1)");
    }
    if (gmm_components < 2) throw Error(Errc::invalid_argument, "gmm_components must be >= 2");
}

TokenBatch::TokenBatch(Matrix probs, std::vector<std::size_t> labels, std::optional<std::vector<bool>> clean)
    : probs_(std::move(probs)), labels_(std::move(labels)), clean_(std::move(clean)) {
    if (probs_.rows() != labels_.size()) {
        throw Error(Errc::shape_mismatch, "rows != labels");
    }
    if (clean_ && clean_->size() != labels_.size()) {
        throw Error(Errc::shape_mismatch, "clean flags != labels");
    }
    if (probs_.cols() < 2) throw Error(Errc::dim_too_small, "vocab < 2");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] >= probs_.cols()) {
            throw Error(Errc::index_out_of_range, "label " + std::to_string(labels_[i]));
        }
        double sum = 0.0;
        for (double v : probs_.row(i)) {
            if (!(v >= 0.0)) throw Error(Errc::negative_entry, "row " + std::to_string(i));
            sum += v;
        }
        if (std::abs(sum - 1.0) > kSimplexTolerance) {
            throw Error(Errc::not_normalized, "row " + std::to_string(i));
        }
    }
}

double tailr_weight(double p, double gamma) {
    const double denom = gamma + (1.0 - gamma) * p;
    return denom > 0.0 ? p / denom : 1.0;
}

namespace {

double nll(double p) { return -std::log(std::max(p, kLogFloor)); }

void check_unit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::invalid_argument, std::string(name) + " must be in [0,1]");
}

WeightedLoss apply_weights(const TokenBatch& batch, TokenWeights tw) {
    WeightedLoss out;
    out.per_token_loss.resize(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        out.per_token_loss[i] = tw.weight[i] * nll(batch.label_prob(i));
    }
    // Fixed index order keeps totals bit-reproducible.
    for (double l : out.per_token_loss) out.total += l;
    out.per_token_weight = std::move(tw.weight);
    out.per_token_gamma = std::move(tw.gamma);
    return out;
}

TokenWeights constant_gamma_weights(const TokenBatch& batch, double gamma, double delta) {
    TokenWeights tw{std::vector<double>(batch.size()), std::vector<double>(batch.size(), gamma)};
    for (std::size_t i = 0; i < batch.size(); ++i) {
        tw.weight[i] = std::max(delta, tailr_weight(batch.label_prob(i), gamma));
    }
    return tw;
}

std::vector<double> nll_per_token(const TokenBatch& batch) {
    std::vector<double> out(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) out[i] = nll(batch.label_prob(i));
    return out;
}

}  // namespace

WeightedLoss kld_loss(const TokenBatch& batch) {
    return apply_weights(batch, {std::vector<double>(batch.size(), 1.0), std::vector<double>(batch.size(), 0.0)});
}

WeightedLoss tailr_loss(const TokenBatch& batch, double gamma, double delta) {
    check_unit(gamma, "gamma");
    check_unit(delta, "delta");
    return apply_weights(batch, constant_gamma_weights(batch, gamma, delta));
}

TokenWeights adatailr_weights(const TokenBatch& batch, double lambda, double delta) {
    if (!(lambda > 0.0)) throw Error(Errc::non_positive_lambda, "lambda = " + std::to_string(lambda));
    check_unit(delta, "delta");
    TokenWeights tw{std::vector<double>(batch.size()), std::vector<double>(batch.size())};
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto row = batch.probs().row(i);
        const std::size_t y = batch.labels()[i];
        const double g = std::clamp(0.5 + lambda * raw::z_tilde(y, row), 0.0, 1.0);
        tw.gamma[i] = g;
        tw.weight[i] = std::max(delta, tailr_weight(row[y], g));
    }
    return tw;
}

WeightedLoss adatailr_loss(const TokenBatch& batch, double lambda, double delta) {
    return apply_weights(batch, adatailr_weights(batch, lambda, delta));
}

TruncationResult loss_truncation(std::span<const double> losses, double c) {
    if (!(c >= 0.0 && c < 1.0)) throw Error(Errc::invalid_argument, "c must be in [0,1)");
    const std::size_t n = losses.size();
    const auto drop = static_cast<std::size_t>(std::ceil(c * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Largest first; among ties the later index is dropped first.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (losses[a] != losses[b]) return losses[a] > losses[b];
        return a > b;
    });
    TruncationResult out{std::vector<double>(n, 1.0), 0.0};
    for (std::size_t k = 0; k < std::min(drop, n); ++k) out.mask[order[k]] = 0.0;
    for (std::size_t i = 0; i < n; ++i) out.total += out.mask[i] * losses[i];
    return out;
}

TokenWeights token_weights(const TokenBatch& batch, const LossSpec& spec, double delta) {
    const std::size_t n = batch.size();
    switch (spec.kind) {
    case LossKind::kld:
        return {std::vector<double>(n, 1.0), std::vector<double>(n, 0.0)};
    case LossKind::tailr:
        check_unit(spec.gamma, "gamma");
        check_unit(delta, "delta");
        return constant_gamma_weights(batch, spec.gamma, delta);
    case LossKind::adatailr:
        return adatailr_weights(batch, spec.lambda, delta);
    case LossKind::loss_truncation: {
        auto tr = loss_truncation(nll_per_token(batch), spec.trunc_frac);
        return {std::move(tr.mask), std::vector<double>(n, 0.0)};
    }
    case LossKind::gmm_reweight: {
        auto losses = nll_per_token(batch);
        if (losses.size() < 2 * static_cast<std::size_t>(spec.gmm_components)) {
            return {std::vector<double>(n, 1.0), std::vector<double>(n, 0.0)};
        }
        auto res = gmm_reweight(losses, spec.gmm_components);
        return {std::move(res.weights), std::vector<double>(n, 0.0)};
    }
    }
    throw Error(Errc::invalid_argument, "unknown loss kind");
}

TokenWeights token_weights(const TokenBatch& batch, const LossSpec& spec) {
    return token_weights(batch, spec, spec.delta);
}

WeightedLoss compute_loss(const TokenBatch& batch, const LossSpec& spec) {
    switch (spec.kind) {
    case LossKind::kld: return kld_loss(batch);
    case LossKind::tailr: return tailr_loss(batch, spec.gamma, spec.delta);
    case LossKind::adatailr: return adatailr_loss(batch, spec.lambda, spec.delta);
    default: return apply_weights(batch, token_weights(batch, spec));
    }
}

Matrix softmax_rows(const Matrix& logits) {
    Matrix out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto in = logits.row(r);
        auto dst = out.row(r);
        const double m = *std::max_element(in.begin(), in.end());
        double s = 0.0;
        for (std::size_t j = 0; j < in.size(); ++j) {
            dst[j] = std::exp(in[j] - m);
            s += dst[j];
        }
        for (double& v : dst) v /= s;
    }
    return out;
}

Matrix weighted_nll_grad(const Matrix& probs, std::span<const std::size_t> labels, std::span<const double> weights) {
    if (probs.rows() != labels.size() || labels.size() != weights.size()) {
        throw Error(Errc::shape_mismatch, "grad inputs disagree on length");
    }
    Matrix g(probs.rows(), probs.cols());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const double w = weights[i];
        const auto p = probs.row(i);
        auto dst = g.row(i);
        for (std::size_t j = 0; j < p.size(); ++j) dst[j] = w * p[j];
        dst[labels[i]] -= w;
    }
    return g;
}

Matrix loss_grad(const Matrix& logits, std::span<const std::size_t> labels, const LossSpec& spec) {
    spec.validate();
    Matrix probs = softmax_rows(logits);
    TokenBatch batch(probs, {labels.begin(), labels.end()});
    const auto tw = token_weights(batch, spec);
    return weighted_nll_grad(batch.probs(), labels, tw.weight);
}

double weighted_nll(const Matrix& logits, std::span<const std::size_t> labels, std::span<const double> weights) {
    if (logits.rows() != labels.size() || labels.size() != weights.size()) {
        throw Error(Errc::shape_mismatch, "objective inputs disagree on length");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto l = logits.row(i);
        const double m = *std::max_element(l.begin(), l.end());
        double s = 0.0;
        for (double v : l) s += std::exp(v - m);
        total += weights[i] * (m + std::log(s) - l[labels[i]]);
    }
    return total;
}

double grad_check_error(const Matrix& logits, std::span<const std::size_t> labels, const LossSpec& spec,
                        double step) {
    spec.validate();
    const Matrix probs = softmax_rows(logits);
    const TokenBatch batch(probs, {labels.begin(), labels.end()});
    const auto weights = token_weights(batch, spec).weight;
    const Matrix analytic = weighted_nll_grad(probs, labels, weights);

    Matrix x = logits;
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t k = 0; k < x.data().size(); ++k) {
        const double orig = x.data()[k];
        x.data()[k] = orig + step;
        const double up = weighted_nll(x, labels, weights);
        x.data()[k] = orig - step;
        const double down = weighted_nll(x, labels, weights);
        x.data()[k] = orig;
        const double numeric = (up - down) / (2.0 * step);
        const double a = analytic.data()[k];
        diff2 += (a - numeric) * (a - numeric);
        a2 += a * a;
        n2 += numeric * numeric;
    }
    const double scale = std::sqrt(std::max(a2, n2));
    return scale > 1e-12 ? std::sqrt(diff2) / scale : 0.0;
}

}  // namespace adatailr
