#include "adatailr/theorem_lab.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "adatailr/error.hpp"

namespace adatailr {

using nlohmann::ordered_json;

namespace {

constexpr double kTieThreshold = 1e-9;

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
}

struct PairDraw {
    Simplex p_o;
    Simplex p_theta;
};

PairDraw draw_pair(std::size_t dim, std::mt19937_64& rng, PairMode mode) {
    switch (mode) {
    case PairMode::independent: {
        Simplex p_o = sample_simplex(dim, rng);
        Simplex p_theta = sample_simplex(dim, rng);
        return {std::move(p_o), std::move(p_theta)};
    }
    case PairMode::one_hot_target: {
        const auto w = static_cast<std::size_t>(rng() % dim);
        Simplex p_theta = sample_simplex(dim, rng);
        return {OneHot(w, dim).as_simplex(), std::move(p_theta)};
    }
    case PairMode::identical: {
        Simplex p = sample_simplex(dim, rng);
        return {p, p};
    }
    }
    throw Error(Errc::invalid_argument, "unknown pair mode");
}

std::size_t dim_for(const std::vector<std::size_t>& dims, std::int64_t trial) {
    if (dims.empty()) throw Error(Errc::invalid_argument, "empty dim set");
    return dims[static_cast<std::size_t>(trial) % dims.size()];
}

void check_lambdas(const std::vector<double>& lambdas) {
    if (lambdas.empty()) throw Error(Errc::invalid_argument, "empty lambda set");
    for (double l : lambdas) {
        if (!(l > 0.0)) throw Error(Errc::non_positive_lambda, "lambda = " + std::to_string(l));
    }
}

ordered_json finite_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json witness(const TheoremTrial& t, std::int64_t trial) {
    return {{"trial", trial},
            {"dim", t.p_o.dim()},
            {"D", t.d},
            {"z", t.z},
            {"z_tilde_expectation", t.z_tilde_expectation}};
}

// E_{w~p_o}[z̃(w)] as an explicit finite sum.
double expected_z_tilde(const Simplex& p_o, const Simplex& p_theta) {
    double e = 0.0;
    for (std::size_t w = 0; w < p_o.dim(); ++w) e += p_o[w] * raw::z_tilde(w, p_theta.probs());
    return e;
}

}  // namespace

ordered_json to_json(const TheoremReport& r) {
    return {{"name", r.name},
            {"trials", r.trials},
            {"seed", r.seed},
            {"bound", r.bound},
            {"tolerance", r.tolerance},
            {"max_violation", finite_or_null(r.max_violation)},
            {"pass", r.pass},
            {"details", r.details}};
}

TheoremTrial TheoremTrial::make(Simplex p_o, Simplex p_theta) {
    if (p_o.dim() != p_theta.dim()) throw Error(Errc::dim_mismatch, "trial pair");
    const double d = 0.5 * raw::l1_dist(p_theta.probs(), p_o.probs());
    const double z = raw::tvd(p_o.probs(), p_theta.probs()) - raw::twice_tsallis2(p_o.probs());
    const double ez = expected_z_tilde(p_o, p_theta);
    return {std::move(p_o), std::move(p_theta), d, z, ez};
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

Simplex sample_simplex(std::size_t dim, std::mt19937_64& rng) {
    if (dim < 2) throw Error(Errc::dim_too_small, "dim = " + std::to_string(dim));
    std::vector<double> e(dim);
    double sum = 0.0;
    for (double& v : e) {
        v = -std::log1p(-unit_uniform(rng));
        sum += v;
    }
    if (!(sum > 0.0)) {
        // All-zero exponentials are a probability-zero event; fall back to uniform.
        return Simplex::uniform(dim);
    }
    for (double& v : e) v /= sum;
    return Simplex(std::move(e));
}

Simplex sample_simplex(std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample_simplex(dim, rng);
}

TheoremReport verify_theorem1(std::int64_t trials, const std::vector<std::size_t>& dims, int grid_points,
                              std::uint64_t seed, PairMode mode) {
    if (grid_points < 3) throw Error(Errc::invalid_argument, "grid_points must be >= 3");
    TheoremReport rep{.name = "theorem1", .trials = trials, .bound = 0.0, .tolerance = 1e-12, .seed = seed};

    std::int64_t ties = 0, opt_one = 0, opt_zero = 0;
    ordered_json worst;
    for (std::int64_t t = 0; t < trials; ++t) {
        auto rng = trial_rng(seed, static_cast<std::uint64_t>(t));
        auto [p_o, p_theta] = draw_pair(dim_for(dims, t), rng, mode);
        const double g = gamma_opt(p_o, p_theta);
        (g == 1.0 ? opt_one : opt_zero)++;

        const double z = raw::tvd(p_o.probs(), p_theta.probs()) - raw::twice_tsallis2(p_o.probs());
        if (std::abs(z) < kTieThreshold) {
            ++ties;  // ε is constant in γ; every γ is optimal.
            continue;
        }
        double grid_min = INFINITY;
        for (int k = 0; k < grid_points; ++k) {
            const double gamma = static_cast<double>(k) / static_cast<double>(grid_points - 1);
            grid_min = std::min(grid_min, estimation_error(p_o, p_theta, gamma));
        }
        const double excess = estimation_error(p_o, p_theta, g) - grid_min;
        if (excess > rep.max_violation) {
            rep.max_violation = excess;
            worst = {{"trial", t}, {"dim", p_o.dim()}, {"z", z}, {"gamma_opt", g}};
        }
    }
    if (ties == trials) rep.max_violation = 0.0;
    rep.details = {{"grid_points", grid_points},
                   {"dims", dims},
                   {"ties", ties},
                   {"gamma_opt_one", opt_one},
                   {"gamma_opt_zero", opt_zero},
                   {"worst", worst}};
    rep.finalize();
    return rep;
}

TheoremReport verify_theorem2(std::int64_t trials, const std::vector<double>& lambdas, std::uint64_t seed,
                              const std::vector<std::size_t>& dims, PairMode mode) {
    check_lambdas(lambdas);
    TheoremReport rep{.name = "theorem2", .trials = trials, .bound = 0.0, .tolerance = 1e-9, .seed = seed};

    struct PerLambda {
        double max_violation = -INFINITY;
        double max_gap = -INFINITY;
        std::int64_t violations = 0;
        double clamped_max_violation = -INFINITY;
        std::int64_t clamped_violations = 0;
        std::int64_t half_bound_violations = 0;
        double clamp_binds = 0.0;
        double label_count = 0.0;
        ordered_json worst;
    };
    std::vector<PerLambda> stats(lambdas.size());

    for (std::int64_t t = 0; t < trials; ++t) {
        auto rng = trial_rng(seed, static_cast<std::uint64_t>(t));
        auto [p_o_draw, p_theta_draw] = draw_pair(dim_for(dims, t), rng, mode);
        const TheoremTrial trial = TheoremTrial::make(std::move(p_o_draw), std::move(p_theta_draw));
        const auto& p_o = trial.p_o;
        const auto& p_theta = trial.p_theta;
        const double tv = raw::tvd(p_o.probs(), p_theta.probs());
        const double h_o = raw::twice_tsallis2(p_o.probs());
        const double g_opt = indicator(trial.z);
        const double eps_opt = raw::estimation_error_affine(tv, h_o, g_opt);

        for (std::size_t li = 0; li < lambdas.size(); ++li) {
            const double lambda = lambdas[li];
            auto& s = stats[li];
            double gap = 0.0, gap_clamped = 0.0;
            for (std::size_t w = 0; w < p_o.dim(); ++w) {
                const double g_raw = raw::gamma_tilde_raw(w, p_theta.probs(), lambda);
                const double g_clamped = std::clamp(g_raw, 0.0, 1.0);
                gap += p_o[w] * (raw::estimation_error_affine(tv, h_o, g_raw) - eps_opt);
                gap_clamped += p_o[w] * (raw::estimation_error_affine(tv, h_o, g_clamped) - eps_opt);
                if (g_raw != g_clamped) s.clamp_binds += 1.0;
                s.label_count += 1.0;
            }
            const double bound = 9.0 / (16.0 * lambda) + 4.0 * trial.d;
            const double violation = gap - bound;
            const double clamped_violation = gap_clamped - bound;
            s.max_gap = std::max(s.max_gap, gap);
            if (violation > rep.tolerance) ++s.violations;
            if (clamped_violation > rep.tolerance) ++s.clamped_violations;
            if (gap - (0.5 / lambda + 4.0 * trial.d) > rep.tolerance) ++s.half_bound_violations;
            s.clamped_max_violation = std::max(s.clamped_max_violation, clamped_violation);
            if (violation > s.max_violation) {
                s.max_violation = violation;
                s.worst = witness(trial, t);
                s.worst["gap"] = gap;
                s.worst["bound"] = bound;
            }
        }
    }

    ordered_json per_lambda = ordered_json::array();
    for (std::size_t li = 0; li < lambdas.size(); ++li) {
        const auto& s = stats[li];
        rep.max_violation = std::max(rep.max_violation, s.max_violation);
        per_lambda.push_back({{"lambda", lambdas[li]},
                              {"max_violation", finite_or_null(s.max_violation)},
                              {"violations", s.violations},
                              {"max_gap", finite_or_null(s.max_gap)},
                              {"clamped_max_violation", finite_or_null(s.clamped_max_violation)},
                              {"clamped_violations", s.clamped_violations},
                              {"half_bound_violations", s.half_bound_violations},
                              {"clamp_bind_rate", s.label_count > 0 ? s.clamp_binds / s.label_count : 0.0},
                              {"worst", s.worst}});
    }
    rep.details = {{"bound_form", "9/(16*lambda) + 4*D"}, {"dims", dims}, {"per_lambda", per_lambda}};
    rep.finalize();
    return rep;
}

TheoremReport verify_lemma_sampled_tvd(std::int64_t trials, std::uint64_t seed, const std::vector<std::size_t>& dims,
                                       PairMode mode) {
    TheoremReport rep{.name = "lemma_sampled_tvd", .trials = trials, .bound = 0.0, .tolerance = 1e-12, .seed = seed};
    for (std::int64_t t = 0; t < trials; ++t) {
        auto rng = trial_rng(seed, static_cast<std::uint64_t>(t));
        auto [p_o, p_theta] = draw_pair(dim_for(dims, t), rng, mode);
        double lhs = 0.0;
        for (std::size_t w = 0; w < p_o.dim(); ++w) lhs += p_o[w] * tvd_onehot(OneHot(w, p_o.dim()), p_theta);
        const double rhs = 1.0 - inner(p_theta, p_o);
        rep.max_violation = std::max(rep.max_violation, std::abs(lhs - rhs));
    }
    if (trials == 0) rep.max_violation = 0.0;
    rep.details = {{"identity", "E_w[tvd(e_w, p_theta)] = 1 - <p_theta, p_o>"}, {"dims", dims}};
    rep.finalize();
    return rep;
}

TheoremReport verify_lemma_norms(std::int64_t trials, std::uint64_t seed, const std::vector<std::size_t>& dims) {
    TheoremReport rep{.name = "lemma_norms", .trials = trials, .bound = 0.0, .tolerance = 1e-12, .seed = seed};
    double norm_max = -INFINITY, holder_max = -INFINITY;
    for (std::int64_t t = 0; t < trials; ++t) {
        auto rng = trial_rng(seed, static_cast<std::uint64_t>(t));
        auto [p, q] = draw_pair(dim_for(dims, t), rng, PairMode::independent);
        norm_max = std::max(norm_max, linf_dist(p, q) - 0.5 * l1_dist(p, q));

        // ‖u ⊙ v‖₁ ≤ ‖u‖₁‖v‖_∞ for u = p and v = q − p.
        double prod_l1 = 0.0, u_l1 = 0.0, v_inf = 0.0;
        for (std::size_t i = 0; i < p.dim(); ++i) {
            const double v = q[i] - p[i];
            prod_l1 += std::abs(p[i] * v);
            u_l1 += std::abs(p[i]);
            v_inf = std::max(v_inf, std::abs(v));
        }
        holder_max = std::max(holder_max, prod_l1 - u_l1 * v_inf);
    }
    rep.max_violation = trials > 0 ? std::max(norm_max, holder_max) : 0.0;
    rep.details = {{"linf_minus_half_l1_max", finite_or_null(norm_max)},
                   {"holder_1_inf_max", finite_or_null(holder_max)},
                   {"dims", dims}};
    rep.finalize();
    return rep;
}

TheoremReport verify_lemma_zdiff(std::int64_t trials, std::uint64_t seed, const std::vector<std::size_t>& dims,
                                 PairMode mode) {
    TheoremReport rep{.name = "lemma_zdiff", .trials = trials, .bound = 0.0, .tolerance = 1e-9, .seed = seed};
    std::int64_t violations = 0;
    ordered_json worst;
    for (std::int64_t t = 0; t < trials; ++t) {
        auto rng = trial_rng(seed, static_cast<std::uint64_t>(t));
        auto [p_o, p_theta] = draw_pair(dim_for(dims, t), rng, mode);
        const TheoremTrial trial = TheoremTrial::make(std::move(p_o), std::move(p_theta));
        const double v = std::abs(trial.z - trial.z_tilde_expectation) - 4.0 * trial.d;
        if (v > rep.tolerance) ++violations;
        if (v > rep.max_violation) {
            rep.max_violation = v;
            worst = witness(trial, t);
        }
    }
    if (trials == 0) rep.max_violation = 0.0;
    rep.details = {{"bound_form", "4*D"}, {"violations", violations}, {"dims", dims}, {"worst", worst}};
    rep.finalize();
    return rep;
}

TheoremReport verify_lemma_smooth(double lambda, double z_lo, double z_hi, double step) {
    if (!(lambda > 0.0)) throw Error(Errc::non_positive_lambda, "lambda = " + std::to_string(lambda));
    if (!(step > 0.0) || !(z_hi > z_lo)) throw Error(Errc::invalid_argument, "bad z grid");
    TheoremReport rep{.name = "lemma_smooth", .bound = 0.0, .tolerance = 1e-12};

    std::vector<double> grid;
    const auto n = static_cast<std::int64_t>(std::floor((z_hi - z_lo) / step));
    for (std::int64_t k = 0; k <= n; ++k) grid.push_back(z_lo + static_cast<double>(k) * step);
    for (double z : {1.0 / (4.0 * lambda), -1.0 / (4.0 * lambda), 1.0 / (2.0 * lambda), -1.0 / (2.0 * lambda), 0.0}) {
        grid.push_back(z);
    }

    const double bound = 1.0 / (16.0 * lambda);
    double best = -INFINITY, argmax = 0.0;
    for (double z : grid) {
        const double value = (indicator(z) - smooth_indicator(z, lambda)) * z;
        if (value > best) {
            best = value;
            argmax = z;
        }
    }
    rep.trials = static_cast<std::int64_t>(grid.size());
    rep.max_violation = best - bound;
    rep.details = {{"lambda", lambda},
                   {"bound_value", bound},
                   {"measured_max", best},
                   {"argmax", argmax},
                   {"z_lo", z_lo},
                   {"z_hi", z_hi},
                   {"step", step}};
    rep.finalize();
    return rep;
}

TheoremReport verify_lemma_dist_approx(std::int64_t trials, const std::vector<double>& lambdas, std::uint64_t seed,
                                       const std::vector<std::size_t>& dims, PairMode mode) {
    check_lambdas(lambdas);
    TheoremReport rep{.name = "lemma_dist_approx", .trials = trials, .bound = 0.0, .tolerance = 1e-9, .seed = seed};
    std::vector<double> max_v(lambdas.size(), -INFINITY);
    std::vector<std::int64_t> violations(lambdas.size(), 0);
    std::vector<ordered_json> worst(lambdas.size());

    for (std::int64_t t = 0; t < trials; ++t) {
        auto rng = trial_rng(seed, static_cast<std::uint64_t>(t));
        auto [p_o_draw, p_theta_draw] = draw_pair(dim_for(dims, t), rng, mode);
        const TheoremTrial trial = TheoremTrial::make(std::move(p_o_draw), std::move(p_theta_draw));
        for (std::size_t li = 0; li < lambdas.size(); ++li) {
            const double lambda = lambdas[li];
            const double f_z = smooth_indicator(trial.z, lambda);
            double lhs = 0.0;
            for (std::size_t w = 0; w < trial.p_o.dim(); ++w) {
                const double zt = raw::z_tilde(w, trial.p_theta.probs());
                lhs += trial.p_o[w] * (f_z - smooth_indicator(zt, lambda)) * trial.z;
            }
            const double v = lhs - (0.5 / lambda + 4.0 * trial.d);
            if (v > rep.tolerance) ++violations[li];
            if (v > max_v[li]) {
                max_v[li] = v;
                worst[li] = witness(trial, t);
                worst[li]["lhs"] = lhs;
            }
        }
    }
    ordered_json per_lambda = ordered_json::array();
    for (std::size_t li = 0; li < lambdas.size(); ++li) {
        rep.max_violation = std::max(rep.max_violation, max_v[li]);
        per_lambda.push_back({{"lambda", lambdas[li]},
                              {"max_violation", finite_or_null(max_v[li])},
                              {"violations", violations[li]},
                              {"worst", worst[li]}});
    }
    rep.details = {{"bound_form", "1/(2*lambda) + 4*D"}, {"dims", dims}, {"per_lambda", per_lambda}};
    rep.finalize();
    return rep;
}

}  // namespace adatailr
