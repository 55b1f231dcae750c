#include "adatailr/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "adatailr/error.hpp"

namespace adatailr {

std::string_view to_string(Errc code) {
    switch (code) {
    case Errc::zero_mass: return "ZeroMass";
    case Errc::negative_entry: return "NegativeEntry";
    case Errc::dim_too_small: return "DimTooSmall";
    case Errc::dim_mismatch: return "DimMismatch";
    case Errc::not_normalized: return "NotNormalized";
    case Errc::index_out_of_range: return "IndexOutOfRange";
    case Errc::gamma_out_of_range: return "GammaOutOfRange";
    case Errc::non_positive_lambda: return "NonPositiveLambda";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::bad_shape: return "BadShape";
    case Errc::non_positive_concentration: return "NonPositiveConcentration";
    case Errc::missing_noise_rows: return "MissingNoiseRows";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::non_positive_learning_rate: return "NonPositiveLearningRate";
    case Errc::one_class_only: return "OneClassOnly";
    case Errc::empty_context: return "EmptyContext";
    case Errc::size_exceeds_corpus: return "SizeExceedsCorpus";
    case Errc::io_error: return "IoError";
    case Errc::parse_error: return "ParseError";
    }
    return "Unknown";
}

namespace {

void check_entries(std::span<const double> probs) {
    if (probs.size() < 2) {
        throw Error(Errc::dim_too_small, "need at least 2 entries, got " + std::to_string(probs.size()));
    }
    for (double v : probs) {
        if (!(v >= 0.0)) throw Error(Errc::negative_entry, "entry " + std::to_string(v));
    }
}

void check_same_dim(std::size_t a, std::size_t b) {
    if (a != b) {
        throw Error(Errc::dim_mismatch, std::to_string(a) + " vs " + std::to_string(b));
    }
}

void check_lambda(double lambda) {
    if (!(lambda > 0.0)) throw Error(Errc::non_positive_lambda, "lambda = " + std::to_string(lambda));
}

}  // namespace

Simplex::Simplex(std::vector<double> probs) : probs_(std::move(probs)) {
    check_entries(probs_);
    double sum = 0.0;
    for (double v : probs_) sum += v;
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
        throw Error(Errc::not_normalized, "sum = " + std::to_string(sum));
    }
}

Simplex Simplex::uniform(std::size_t dim) {
    return Simplex(std::vector<double>(dim, 1.0 / static_cast<double>(dim)));
}

OneHot::OneHot(std::size_t index, std::size_t dim) : index_(index), dim_(dim) {
    if (dim < 2) throw Error(Errc::dim_too_small, "one-hot dim " + std::to_string(dim));
    if (index >= dim) {
        throw Error(Errc::index_out_of_range, std::to_string(index) + " >= " + std::to_string(dim));
    }
}

Simplex OneHot::as_simplex() const {
    std::vector<double> probs(dim_, 0.0);
    probs[index_] = 1.0;
    return Simplex(std::move(probs));
}

Simplex normalize(std::span<const double> values) {
    check_entries(values);
    double sum = 0.0;
    for (double v : values) sum += v;
    if (!(sum > 0.0)) throw Error(Errc::zero_mass, "sum = " + std::to_string(sum));
    std::vector<double> out(values.begin(), values.end());
    for (double& v : out) v /= sum;
    return Simplex(std::move(out));
}

namespace raw {

double tvd(std::span<const double> p, std::span<const double> q) { return 0.5 * l1_dist(p, q); }

// ½(|1 − p_w| + Σ_{j≠w} p_j) collapses to 1 − p_w on the simplex.
double tvd_onehot(std::size_t w, std::span<const double> p) { return 1.0 - p[w]; }

double sum_squares(std::span<const double> p) {
    double s = 0.0;
    for (double v : p) s += v * v;
    return s;
}

double twice_tsallis2(std::span<const double> p) { return 1.0 - sum_squares(p); }

double l1_dist(std::span<const double> p, std::span<const double> q) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return s;
}

double linf_dist(std::span<const double> p, std::span<const double> q) {
    double m = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) m = std::max(m, std::abs(p[i] - q[i]));
    return m;
}

double inner(std::span<const double> p, std::span<const double> q) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * q[i];
    return s;
}

double estimation_error_affine(double tvd, double twice_h2, double gamma) {
    return (1.0 - gamma) * tvd + gamma * twice_h2;
}

double z_tilde(std::size_t w, std::span<const double> p) {
    if (std::adjacent_find(p.begin(), p.end(), std::not_equal_to<>()) == p.end()) return 0.0;
    return tvd_onehot(w, p) - twice_tsallis2(p);
}

double gamma_tilde_raw(std::size_t w, std::span<const double> p, double lambda) {
    return 0.5 + lambda * z_tilde(w, p);
}

}  // namespace raw

double tvd(const Simplex& p, const Simplex& q) {
    check_same_dim(p.dim(), q.dim());
    return raw::tvd(p.probs(), q.probs());
}

double tvd_onehot(const OneHot& w, const Simplex& p) {
    check_same_dim(w.dim(), p.dim());
    return raw::tvd_onehot(w.index(), p.probs());
}

double tsallis_entropy(const Simplex& p, double alpha) {
    if (!(alpha > 0.0)) throw Error(Errc::invalid_argument, "alpha must be > 0");
    if (alpha == 1.0) {
        double h = 0.0;
        for (double v : p.probs()) {
            if (v > 0.0) h -= v * std::log(v);
        }
        return h;
    }
    double s = 0.0;
    if (alpha == 2.0) {
        s = raw::sum_squares(p.probs());
    } else {
        for (double v : p.probs()) s += std::pow(v, alpha);
    }
    return (1.0 - s) / (alpha * (alpha - 1.0));
}

double indicator(double z) { return z >= 0.0 ? 1.0 : 0.0; }

double smooth_indicator(double z, double lambda) {
    check_lambda(lambda);
    const double half_width = 1.0 / (2.0 * lambda);
    if (z < -half_width) return 0.0;
    if (z > half_width) return 1.0;
    return std::clamp(lambda * z + 0.5, 0.0, 1.0);
}

double estimation_error(const Simplex& p_o, const Simplex& p_theta, double gamma) {
    check_same_dim(p_o.dim(), p_theta.dim());
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw Error(Errc::gamma_out_of_range, "gamma = " + std::to_string(gamma));
    }
    return raw::estimation_error_affine(raw::tvd(p_o.probs(), p_theta.probs()),
                                        raw::twice_tsallis2(p_o.probs()), gamma);
}

double gamma_opt(const Simplex& p_o, const Simplex& p_theta) {
    check_same_dim(p_o.dim(), p_theta.dim());
    return indicator(raw::tvd(p_o.probs(), p_theta.probs()) - raw::twice_tsallis2(p_o.probs()));
}

GammaValue gamma_tilde(const OneHot& w, const Simplex& p_theta, double lambda) {
    check_same_dim(w.dim(), p_theta.dim());
    check_lambda(lambda);
    const double r = raw::gamma_tilde_raw(w.index(), p_theta.probs(), lambda);
    return {r, std::clamp(r, 0.0, 1.0)};
}

double l1_dist(const Simplex& p, const Simplex& q) {
    check_same_dim(p.dim(), q.dim());
    return raw::l1_dist(p.probs(), q.probs());
}

double linf_dist(const Simplex& p, const Simplex& q) {
    check_same_dim(p.dim(), q.dim());
    return raw::linf_dist(p.probs(), q.probs());
}

double inner(const Simplex& p, const Simplex& q) {
    check_same_dim(p.dim(), q.dim());
    return raw::inner(p.probs(), q.probs());
}

}  // namespace adatailr
