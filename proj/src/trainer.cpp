#include "adatailr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "adatailr/error.hpp"
#include "adatailr/simplex.hpp"

namespace adatailr {

namespace {

// Kinds whose token weight depends only on (context, label) given the model.
bool pair_separable(LossKind kind) {
    return kind == LossKind::kld || kind == LossKind::tailr || kind == LossKind::adatailr;
}

struct BatchEntry {
    std::uint32_t context;
    std::uint32_t target;
    double multiplicity;
    bool clean;
};

// Token rows for `entries` under `probs`, weighted as configured.
struct ScoredBatch {
    std::vector<double> weight;
    std::vector<double> gamma;
    std::vector<double> nll;
};

ScoredBatch score(const Matrix& probs, const std::vector<BatchEntry>& entries, const LossSpec& spec, double delta) {
    Matrix rows(entries.size(), probs.cols());
    std::vector<std::size_t> labels(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto src = probs.row(entries[i].context);
        std::copy(src.begin(), src.end(), rows.row(i).begin());
        labels[i] = entries[i].target;
    }
    TokenBatch batch(std::move(rows), std::move(labels));
    auto tw = token_weights(batch, spec, delta);
    ScoredBatch out{std::move(tw.weight), std::move(tw.gamma), std::vector<double>(entries.size())};
    for (std::size_t i = 0; i < entries.size(); ++i) {
        out.nll[i] = -std::log(std::max(batch.label_prob(i), kLogFloor));
    }
    return out;
}

std::vector<BatchEntry> aggregate(const Dataset& data, std::span<const std::size_t> idx, bool separable) {
    std::vector<BatchEntry> out;
    if (!separable) {
        out.reserve(idx.size());
        for (std::size_t i : idx) {
            const auto& ex = data.examples[i];
            out.push_back({ex.context, ex.target, 1.0, ex.clean});
        }
        return out;
    }
    std::vector<double> counts(data.num_contexts * data.vocab, 0.0);
    for (std::size_t i : idx) {
        const auto& ex = data.examples[i];
        counts[ex.context * data.vocab + ex.target] += 1.0;
    }
    for (std::size_t k = 0; k < counts.size(); ++k) {
        if (counts[k] > 0.0) {
            out.push_back({static_cast<std::uint32_t>(k / data.vocab), static_cast<std::uint32_t>(k % data.vocab),
                           counts[k], true});
        }
    }
    return out;
}

void check_consistent(const CleanTask& task, const Dataset& data) {
    if (data.num_contexts != task.num_contexts || data.vocab != task.vocab) {
        throw Error(Errc::shape_mismatch, "dataset shape differs from task");
    }
    if (data.examples.empty()) throw Error(Errc::shape_mismatch, "empty dataset");
    for (const auto& ex : data.examples) {
        if (ex.context >= task.num_contexts || ex.target >= task.vocab) {
            throw Error(Errc::shape_mismatch, "example outside task shape");
        }
    }
}

}  // namespace

void TrainConfig::validate() const {
    loss.validate();
    if (steps < 1) throw Error(Errc::invalid_argument, "steps must be >= 1");
    if (batch_size < 1) throw Error(Errc::invalid_argument, "batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw Error(Errc::non_positive_learning_rate, std::to_string(learning_rate));
    if (warmup_steps < 0) throw Error(Errc::invalid_argument, "warmup_steps must be >= 0");
    if (eval_every < 1) throw Error(Errc::invalid_argument, "eval_every must be >= 1");
}

double weight_auc(std::span<const double> weights, const std::vector<bool>& clean_flags) {
    if (weights.size() != clean_flags.size()) throw Error(Errc::shape_mismatch, "weights vs flags");
    const std::size_t n = weights.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return weights[a] < weights[b]; });

    double n_clean = 0.0, rank_sum_clean = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && weights[order[j]] == weights[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based mean of i+1..j
        for (std::size_t k = i; k < j; ++k) {
            if (clean_flags[order[k]]) rank_sum_clean += avg_rank;
        }
        i = j;
    }
    for (bool c : clean_flags) n_clean += c ? 1.0 : 0.0;
    const double n_noisy = static_cast<double>(n) - n_clean;
    if (n_clean == 0.0 || n_noisy == 0.0) throw Error(Errc::one_class_only, "need both clean and noisy flags");
    return (rank_sum_clean - n_clean * (n_clean + 1.0) / 2.0) / (n_clean * n_noisy);
}

TokenWeights dataset_weights(const Matrix& conditionals, const Dataset& data, const LossSpec& spec, double delta) {
    const std::size_t n = data.examples.size();
    TokenWeights out{std::vector<double>(n), std::vector<double>(n)};
    if (pair_separable(spec.kind)) {
        std::vector<BatchEntry> all;
        all.reserve(data.num_contexts * data.vocab);
        for (std::uint32_t c = 0; c < data.num_contexts; ++c) {
            for (std::uint32_t y = 0; y < data.vocab; ++y) all.push_back({c, y, 1.0, true});
        }
        const auto table = score(conditionals, all, spec, delta);
        for (std::size_t i = 0; i < n; ++i) {
            const auto k = data.examples[i].context * data.vocab + data.examples[i].target;
            out.weight[i] = table.weight[k];
            out.gamma[i] = table.gamma[k];
        }
        return out;
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto scored = score(conditionals, aggregate(data, idx, false), spec, delta);
    return {std::move(scored.weight), std::move(scored.gamma)};
}

TrainResult train(const CleanTask& task, const Dataset& data, const TrainConfig& config) {
    config.validate();
    check_consistent(task, data);

    const std::size_t C = task.num_contexts, N = task.vocab, n = data.examples.size();
    const bool full_batch = static_cast<std::size_t>(config.batch_size) >= n;
    const bool separable = pair_separable(config.loss.kind);

    std::vector<bool> flags(n);
    bool has_clean = false, has_noisy = false;
    for (std::size_t i = 0; i < n; ++i) {
        flags[i] = data.examples[i].clean;
        (flags[i] ? has_clean : has_noisy) = true;
    }

    TrainResult result{LogitModel{Matrix(C, N, 0.0)}, {}};
    Matrix& logits = result.model.logits;

    std::mt19937_64 rng(config.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> idx(full_batch ? n : static_cast<std::size_t>(config.batch_size));
    if (full_batch) std::iota(idx.begin(), idx.end(), std::size_t{0});

    Matrix grad(C, N);
    std::vector<double> ctx_count(C);
    for (std::int64_t step = 0; step <= config.steps; ++step) {
        if (!full_batch) {
            for (auto& i : idx) i = pick(rng);
        }
        const double delta = (config.anneal_floor && step >= config.warmup_steps) ? 0.0 : config.loss.delta;
        const Matrix probs = softmax_rows(logits);
        const auto entries = aggregate(data, idx, separable);
        const auto scored = score(probs, entries, config.loss, delta);

        if (step % config.eval_every == 0 || step == config.steps) {
            double tokens = 0.0, loss = 0.0, gamma = 0.0, weight = 0.0;
            for (std::size_t i = 0; i < entries.size(); ++i) {
                const double m = entries[i].multiplicity;
                tokens += m;
                loss += m * scored.weight[i] * scored.nll[i];
                gamma += m * scored.gamma[i];
                weight += m * scored.weight[i];
            }
            double auc = 0.5;
            if (has_clean && has_noisy) {
                auc = weight_auc(dataset_weights(probs, data, config.loss, delta).weight, flags);
            }
            double d_hat = 0.0;
            for (std::size_t c = 0; c < C; ++c) d_hat += 0.5 * raw::l1_dist(probs.row(c), task.conditionals.row(c));
            d_hat /= static_cast<double>(C);
            result.metrics.rows.push_back({step, loss / tokens, gamma / tokens, weight / tokens,
                                           exact_model_tvd(probs, task), auc, d_hat});
        }
        if (step == config.steps) break;

        std::fill(grad.data().begin(), grad.data().end(), 0.0);
        std::fill(ctx_count.begin(), ctx_count.end(), 0.0);
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const auto& e = entries[i];
            const double scale = e.multiplicity * scored.weight[i];
            const auto p = probs.row(e.context);
            auto g = grad.row(e.context);
            for (std::size_t j = 0; j < N; ++j) g[j] += scale * p[j];
            g[e.target] -= scale;
            ctx_count[e.context] += e.multiplicity;
        }
        for (std::size_t c = 0; c < C; ++c) {
            if (ctx_count[c] == 0.0) continue;
            const double step_size = config.learning_rate / ctx_count[c];
            auto l = logits.row(c);
            const auto g = grad.row(c);
            for (std::size_t j = 0; j < N; ++j) l[j] -= step_size * g[j];
        }
    }
    return result;
}

Matrix closed_form_mle(const Dataset& data) {
    if (data.num_contexts == 0 || data.vocab < 2) throw Error(Errc::bad_shape, "dataset shape");
    Matrix counts(data.num_contexts, data.vocab, 0.0);
    std::vector<std::size_t> per_ctx(data.num_contexts, 0);
    for (const auto& ex : data.examples) {
        counts(ex.context, ex.target) += 1.0;
        ++per_ctx[ex.context];
    }
    for (std::size_t c = 0; c < data.num_contexts; ++c) {
        if (per_ctx[c] == 0) throw Error(Errc::empty_context, "context " + std::to_string(c) + " has no examples");
        auto row = counts.row(c);
        double sum = 0.0;
        for (double& v : row) {
            v += 1e-9;
            sum += v;
        }
        for (double& v : row) v /= sum;
    }
    return counts;
}

void write_metrics_csv(std::ostream& os, const RunMetrics& metrics) {
    os << "step,train_loss,mean_gamma,mean_weight,tvd_to_clean,weight_auc,d_hat\n";
    char buf[256];
    for (const auto& r : metrics.rows) {
        std::snprintf(buf, sizeof buf, "%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", static_cast<long long>(r.step),
                      r.train_loss, r.mean_gamma, r.mean_weight, r.tvd_to_clean, r.weight_auc, r.d_hat);
        os << buf;
    }
}

nlohmann::ordered_json model_to_json(const LogitModel& model) {
    auto rows_of = [](const Matrix& m) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (std::size_t r = 0; r < m.rows(); ++r) {
            const auto row = m.row(r);
            rows.push_back(std::vector<double>(row.begin(), row.end()));
        }
        return rows;
    };
    return {{"C", model.logits.rows()},
            {"N", model.logits.cols()},
            {"logits", rows_of(model.logits)},
            {"conditionals", rows_of(model.conditionals())}};
}

}  // namespace adatailr
