// adatailr: theorem verification, noisy-label benchmarks, corpus diversity,
// dataset generation and gradient checks.

#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adatailr/cli.hpp"
#include "adatailr/error.hpp"

namespace cli = adatailr::cli;

namespace {

// Adds one --key option per config key (dashes or underscores both work).
// Values are applied after the config file, in key order.
void add_overrides(CLI::App& cmd, std::map<std::string, std::string>& overrides) {
    for (const auto& key : cli::config_keys()) {
        std::string dashed = key;
        for (char& c : dashed) c = c == '_' ? '-' : c;
        std::string names = "--" + dashed;
        if (dashed != key) names += ",--" + key;
        cmd.add_option_function<std::string>(
               names, [&overrides, key](const std::string& v) { overrides[key] = v; }, "override config key " + key)
            ->group("Config overrides");
    }
}

std::optional<cli::RunConfig> resolve(const std::string& path, const std::map<std::string, std::string>& overrides) {
    try {
        cli::RunConfig config = path.empty() ? cli::RunConfig{} : cli::load_config(path);
        for (const auto& key : cli::config_keys()) {
            if (auto it = overrides.find(key); it != overrides.end()) cli::set_config_value(config, key, it->second);
        }
        return config;
    } catch (const adatailr::Error& e) {
        std::cerr << "error: " << adatailr::to_string(e.code()) << ": " << e.what() << "\n";
        return std::nullopt;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive TVD-bound training losses: verification, benchmarks and corpus metrics"};
    app.require_subcommand(1);

    // verify
    auto* verify = app.add_subcommand("verify", "Check the trade-off theorems and lemmas numerically");
    std::string suite = "all";
    std::optional<std::int64_t> verify_trials;
    std::uint64_t verify_seed = 0;
    std::string verify_out = "reports";
    verify->add_option("suite", suite, "all | theorem1 | theorem2 | lemmas")->capture_default_str();
    verify->add_option("--trials", verify_trials, "trials per report (default 10000, or 1000 for the lambda sweeps)");
    verify->add_option("--seed", verify_seed)->capture_default_str();
    verify->add_option("--out", verify_out, "report directory")->capture_default_str();

    // bench
    auto* bench = app.add_subcommand("bench", "Train every (loss, noise rate, seed) cell of the grid");
    std::string bench_config;
    std::map<std::string, std::string> bench_overrides;
    bench->add_option("config", bench_config, "key=value config file (optional)")->check(CLI::ExistingFile);
    add_overrides(*bench, bench_overrides);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Write one synthetic task and its corrupted dataset");
    std::string gen_config;
    std::map<std::string, std::string> gen_overrides;
    gen->add_option("config", gen_config, "key=value config file (optional)")->check(CLI::ExistingFile);
    add_overrides(*gen, gen_overrides);

    // diversity
    auto* div = app.add_subcommand("diversity", "Token diversity and saturation of a corpus");
    std::string corpus, reference, div_out = "diversity";
    std::vector<std::size_t> sizes;
    std::uint64_t div_seed = 0;
    div->add_option("corpus", corpus, "text (one document per line) or JSONL {\"tokens\": [...]}")->required();
    div->add_option("reference", reference, "reference vocabulary, one entry per line")->required();
    div->add_option("--sizes", sizes, "ascending sample sizes (default: 10 log-spaced)")->delimiter(',');
    div->add_option("--seed", div_seed)->capture_default_str();
    div->add_option("--out", div_out)->capture_default_str();

    // grad-check
    auto* grad = app.add_subcommand("grad-check", "Compare analytic loss gradients with finite differences");
    std::int64_t grad_trials = 100;
    std::uint64_t grad_seed = 0;
    std::string grad_out = "grad_check";
    grad->add_option("--trials", grad_trials, "trials per loss kind")->capture_default_str();
    grad->add_option("--seed", grad_seed)->capture_default_str();
    grad->add_option("--out", grad_out)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::kExitOk : cli::kExitUsage;
    }

    if (verify->parsed()) return cli::cmd_verify(suite, verify_trials, verify_seed, verify_out, std::cerr);
    if (bench->parsed()) {
        auto config = resolve(bench_config, bench_overrides);
        return config ? cli::cmd_bench(*config, std::cerr) : cli::kExitUsage;
    }
    if (gen->parsed()) {
        auto config = resolve(gen_config, gen_overrides);
        return config ? cli::cmd_gen_data(*config, std::cerr) : cli::kExitUsage;
    }
    if (div->parsed()) return cli::cmd_diversity(corpus, reference, sizes, div_seed, div_out, std::cerr);
    if (grad->parsed()) return cli::cmd_grad_check(grad_trials, grad_seed, grad_out, std::cerr);
    return cli::kExitUsage;
}
