#pragma once

// Command implementations behind the `adatailr` executable. Each command
// takes already-parsed arguments, writes its artifacts under an output
// directory, and returns the process exit code.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "adatailr/losses.hpp"
#include "adatailr/synth_bench.hpp"
#include "adatailr/trainer.hpp"

namespace adatailr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;
inline constexpr int kExitUsage = 2;

/// Everything a bench / gen-data run depends on. Flat key=value on disk.
struct RunConfig {
    TrainConfig train;

    std::size_t contexts = 32;
    std::size_t vocab = 32;
    double concentration = 0.3;
    double noise_rate = 0.4;
    NoiseKind noise_kind = NoiseKind::uniform;
    std::string noise_rows;  // JSON file of C×N rows; fixed-distribution only
    std::size_t samples_per_context = 2000;

    std::uint64_t seed = 0;
    std::string out_dir = "runs";

    std::vector<LossKind> grid_losses{LossKind::kld, LossKind::tailr, LossKind::adatailr,
                                      LossKind::loss_truncation, LossKind::gmm_reweight};
    std::vector<double> grid_rates{0.0, 0.2, 0.4};
    std::int64_t grid_seeds = 5;

    void validate() const;
};

/// Keys accepted in config files and as --key overrides, in render order.
const std::vector<std::string>& config_keys();

/// Throws Error(parse_error) on unknown keys or malformed values.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// `key = value` lines; '#' starts a comment; blank lines are skipped.
RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::filesystem::path& path);
/// Every key with its resolved value, one per line. parse_config(render) round-trips.
std::string render_config(const RunConfig& config);

/// Independent seeds for one grid cell, derived from (base, seed index).
struct CellSeeds {
    std::uint64_t task;
    std::uint64_t data;
    std::uint64_t train;
};
CellSeeds cell_seeds(std::uint64_t base, std::int64_t index);

struct GradCheckSummary {
    LossKind kind;
    std::int64_t trials = 0;
    double max_error = 0.0;
    std::int64_t failures = 0;  // trials with error > tolerance
    double tolerance = 1e-5;
    bool pass() const { return failures == 0; }
};
/// Random (logits, labels, spec) triples for one loss kind, checked with
/// grad_check_error at step 1e-5.
GradCheckSummary run_grad_check(LossKind kind, std::int64_t trials, std::uint64_t seed);
nlohmann::ordered_json to_json(const GradCheckSummary& summary);

int cmd_verify(const std::string& suite, std::optional<std::int64_t> trials, std::uint64_t seed,
               const std::filesystem::path& out_dir, std::ostream& log);
int cmd_bench(const RunConfig& config, std::ostream& log);
int cmd_gen_data(const RunConfig& config, std::ostream& log);
/// Empty `sizes` means 10 log-spaced sizes over the corpus.
int cmd_diversity(const std::filesystem::path& corpus, const std::filesystem::path& reference,
                  const std::vector<std::size_t>& sizes, std::uint64_t seed, const std::filesystem::path& out_dir,
                  std::ostream& log);
int cmd_grad_check(std::int64_t trials, std::uint64_t seed, const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace adatailr::cli
