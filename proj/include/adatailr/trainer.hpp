#pragma once

// Minibatch gradient descent on a tabular conditional softmax model.
//
// The model is one logit row per context. Each step samples a minibatch of
// examples with replacement, computes detached per-token weights under the
// configured loss, and moves every context row by the learning rate times the
// mean weighted gradient over that context's tokens in the batch.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "adatailr/losses.hpp"
#include "adatailr/matrix.hpp"
#include "adatailr/synth_bench.hpp"

namespace adatailr {

struct LogitModel {
    Matrix logits;

    Matrix conditionals() const { return softmax_rows(logits); }
};

struct TrainConfig {
    LossSpec loss;
    std::int64_t steps = 5000;
    std::int64_t batch_size = 256;  // >= dataset size means full batch
    double learning_rate = 0.5;
    std::int64_t warmup_steps = 0;
    /// When set, the weight floor δ applies only during the first
    /// warmup_steps and is 0 afterwards. Off: δ applies at every step.
    bool anneal_floor = false;
    std::uint64_t seed = 0;
    std::int64_t eval_every = 50;

    void validate() const;
};

struct MetricRow {
    std::int64_t step;
    double train_loss;   // per-token mean weighted loss on the step's batch
    double mean_gamma;   // batch mean of the per-token trade-off (0 where none)
    double mean_weight;  // batch mean of the per-token weight
    double tvd_to_clean;
    double weight_auc;   // clean-vs-noisy AUC of full-dataset weights; 0.5 with one class
    double d_hat;        // mean over contexts of ½‖softmax(logits_c) − clean_c‖₁
};

struct RunMetrics {
    std::vector<MetricRow> rows;
};

struct TrainResult {
    LogitModel model;
    RunMetrics metrics;
};

TrainResult train(const CleanTask& task, const Dataset& data, const TrainConfig& config);

/// Mann–Whitney AUC of `weights` as a score for clean = true; ties count ½.
double weight_auc(std::span<const double> weights, const std::vector<bool>& clean_flags);

/// Per-token weights of every example in `data` under the given model.
TokenWeights dataset_weights(const Matrix& conditionals, const Dataset& data, const LossSpec& spec, double delta);

/// Per-context empirical frequencies with additive smoothing 1e-9.
Matrix closed_form_mle(const Dataset& data);

void write_metrics_csv(std::ostream& os, const RunMetrics& metrics);
nlohmann::ordered_json model_to_json(const LogitModel& model);

}  // namespace adatailr
