#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "adatailr/cli.hpp"
#include "adatailr/corpus_metrics.hpp"
#include "adatailr/error.hpp"
#include "adatailr/theorem_lab.hpp"

namespace adatailr::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Write-then-rename so an interrupted run never leaves a truncated file.
void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error(Errc::io_error, "cannot write " + tmp.string());
        out << content;
        if (!out) throw Error(Errc::io_error, "short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

std::string rate_label(double rate) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", rate);
    return buf;
}

Matrix load_noise_rows(const std::string& path, std::size_t contexts, std::size_t vocab) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot read noise rows " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse_error, path + ": " + e.what());
    }
    if (!j.is_array() || j.size() != contexts) throw Error(Errc::shape_mismatch, "noise rows must have C rows");
    Matrix m(contexts, vocab);
    for (std::size_t c = 0; c < contexts; ++c) {
        const auto row = j[c].get<std::vector<double>>();
        if (row.size() != vocab) throw Error(Errc::shape_mismatch, "noise row " + std::to_string(c) + " length");
        const Simplex s(row);  // validates
        std::copy(row.begin(), row.end(), m.row(c).begin());
    }
    return m;
}

NoiseModel noise_model(const RunConfig& config, double rate) {
    NoiseModel noise{rate, config.noise_kind, std::nullopt};
    if (config.noise_kind == NoiseKind::fixed_distribution) {
        noise.noise_conditionals = load_noise_rows(config.noise_rows, config.contexts, config.vocab);
    }
    return noise;
}

// Runs a command body, mapping configuration problems to the usage exit code.
template <class F>
int guarded(std::ostream& log, F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        log << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        log << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

}  // namespace

// ---- verify ---------------------------------------------------------------

int cmd_verify(const std::string& suite, std::optional<std::int64_t> trials, std::uint64_t seed,
               const fs::path& out_dir, std::ostream& log) {
    const bool all = suite == "all";
    if (!all && suite != "theorem1" && suite != "theorem2" && suite != "lemmas") {
        log << "error: unknown suite '" << suite << "'\n"
            << "usage: adatailr verify [all|theorem1|theorem2|lemmas] [--trials N] [--seed S] [--out DIR]\n";
        return kExitUsage;
    }
    if (trials && *trials < 1) {
        log << "error: --trials must be >= 1\n";
        return kExitUsage;
    }
    const std::int64_t many = trials.value_or(10000);
    const std::int64_t few = trials.value_or(1000);

    return guarded(log, [&] {
        std::vector<TheoremReport> reports;
        if (all || suite == "theorem1") reports.push_back(verify_theorem1(many, kDefaultTrialDims, 101, seed));
        if (all || suite == "theorem2") reports.push_back(verify_theorem2(few, kDefaultLambdas, seed));
        if (all || suite == "lemmas") {
            reports.push_back(verify_lemma_sampled_tvd(many, seed));
            reports.push_back(verify_lemma_norms(many, seed));
            reports.push_back(verify_lemma_zdiff(many, seed));
            reports.push_back(verify_lemma_smooth(1.0));
            reports.push_back(verify_lemma_dist_approx(few, kDefaultLambdas, seed));
        }
        bool ok = true;
        for (const auto& r : reports) {
            write_file(out_dir / (r.name + ".json"), dump(to_json(r)));
            char buf[160];
            std::snprintf(buf, sizeof buf, "%-18s %s  max_violation=%.6g  bound=%.6g\n", r.name.c_str(),
                          r.pass ? "PASS" : "FAIL", r.max_violation, r.bound);
            log << buf;
            ok = ok && r.pass;
        }
        return ok ? kExitOk : kExitFailed;
    });
}

// ---- bench ----------------------------------------------------------------

int cmd_bench(const RunConfig& config, std::ostream& log) {
    return guarded(log, [&] {
        config.validate();
        const fs::path out(config.out_dir);
        write_file(out / "config.resolved", render_config(config));

        ordered_json cells = ordered_json::array();
        // (loss, rate) -> sums for the aggregate table
        std::map<std::pair<int, double>, std::pair<double, double>> sums;

        auto write_summary = [&] {
            ordered_json aggregate = ordered_json::array();
            for (LossKind kind : config.grid_losses) {
                for (double rate : config.grid_rates) {
                    const auto it = sums.find({static_cast<int>(kind), rate});
                    if (it == sums.end()) continue;
                    std::int64_t n = 0;
                    for (const auto& c : cells) {
                        if (c["loss"] == to_string(kind) && c["rho"] == rate) ++n;
                    }
                    aggregate.push_back({{"loss", to_string(kind)},
                                         {"rho", rate},
                                         {"seeds", n},
                                         {"mean_final_tvd_to_clean", it->second.first / static_cast<double>(n)},
                                         {"mean_final_weight_auc", it->second.second / static_cast<double>(n)}});
                }
            }
            write_file(out / "summary.json", dump({{"cells", cells}, {"aggregate", aggregate}}));
        };

        for (std::int64_t s = 0; s < config.grid_seeds; ++s) {
            const CellSeeds seeds = cell_seeds(config.seed, s);
            const CleanTask task = make_task(config.contexts, config.vocab, config.concentration, seeds.task);
            for (double rate : config.grid_rates) {
                const Dataset data = corrupt(task, noise_model(config, rate), config.samples_per_context, seeds.data);
                for (LossKind kind : config.grid_losses) {
                    TrainConfig tc = config.train;
                    tc.loss.kind = kind;
                    tc.seed = seeds.train;
                    const auto result = train(task, data, tc);
                    const auto& last = result.metrics.rows.back();

                    const std::string name = std::string(to_string(kind)) + "_rho" + rate_label(rate) + "_seed" +
                                             std::to_string(s) + ".csv";
                    std::ostringstream csv;
                    write_metrics_csv(csv, result.metrics);
                    write_file(out / "metrics" / name, csv.str());

                    cells.push_back({{"loss", to_string(kind)},
                                     {"rho", rate},
                                     {"seed_index", s},
                                     {"task_seed", seeds.task},
                                     {"data_seed", seeds.data},
                                     {"train_seed", seeds.train},
                                     {"final_tvd_to_clean", last.tvd_to_clean},
                                     {"final_weight_auc", last.weight_auc},
                                     {"final_mean_gamma", last.mean_gamma},
                                     {"metrics_file", "metrics/" + name}});
                    auto& acc = sums[{static_cast<int>(kind), rate}];
                    acc.first += last.tvd_to_clean;
                    acc.second += last.weight_auc;
                    write_summary();

                    char buf[160];
                    std::snprintf(buf, sizeof buf, "%-15s rho=%-4s seed=%lld  tvd_to_clean=%.6f  weight_auc=%.4f\n",
                                  std::string(to_string(kind)).c_str(), rate_label(rate).c_str(),
                                  static_cast<long long>(s), last.tvd_to_clean, last.weight_auc);
                    log << buf << std::flush;
                }
            }
        }
        write_summary();
        return kExitOk;
    });
}

// ---- gen-data -------------------------------------------------------------

int cmd_gen_data(const RunConfig& config, std::ostream& log) {
    return guarded(log, [&] {
        config.validate();
        const fs::path out(config.out_dir);
        const CellSeeds seeds = cell_seeds(config.seed, 0);
        const CleanTask task = make_task(config.contexts, config.vocab, config.concentration, seeds.task);
        const Dataset data = corrupt(task, noise_model(config, config.noise_rate), config.samples_per_context,
                                     seeds.data);
        write_file(out / "config.resolved", render_config(config));
        write_file(out / "task.json", dump(task_to_json(task)));
        std::ostringstream jsonl;
        write_dataset_jsonl(jsonl, data);
        write_file(out / "data.jsonl", jsonl.str());
        std::size_t noisy = 0;
        for (const auto& ex : data.examples) noisy += ex.clean ? 0 : 1;
        log << "wrote " << data.examples.size() << " examples (" << noisy << " noisy) to " << out.string() << "\n";
        return kExitOk;
    });
}

// ---- diversity ------------------------------------------------------------

int cmd_diversity(const fs::path& corpus_path, const fs::path& reference_path, const std::vector<std::size_t>& sizes,
                  std::uint64_t seed, const fs::path& out_dir, std::ostream& log) {
    return guarded(log, [&] {
        std::ifstream corpus_in(corpus_path);
        if (!corpus_in) throw Error(Errc::io_error, "cannot read corpus " + corpus_path.string());
        std::ifstream ref_in(reference_path);
        if (!ref_in) throw Error(Errc::io_error, "cannot read reference " + reference_path.string());

        WhitespaceTokenizer tokenizer;
        const Corpus corpus = read_corpus(corpus_in, tokenizer);
        const ReferenceVocab reference = read_reference(ref_in, tokenizer);
        const auto resolved = sizes.empty() ? log_spaced_sizes(corpus.documents.size(), 10) : sizes;
        const DiversityReport report = diversity_report(corpus, reference, resolved, seed);

        ordered_json j = to_json(report);
        j["tokenizer"] = corpus.tokenizer_tag;
        j["seed"] = seed;
        write_file(out_dir / "diversity.json", dump(j));

        const auto& words = tokenizer.words();
        std::ostringstream hist;
        hist << (words.empty() ? "token_id,count\n" : "token_id,word,count\n");
        for (const auto& [tok, count] : report.histogram) {
            hist << tok << ",";
            if (!words.empty()) {
                std::string w = words[static_cast<std::size_t>(tok)];
                if (w.find_first_of(",\"") != std::string::npos) {
                    std::string q = "\"";
                    for (char c : w) q += c == '"' ? std::string("\"\"") : std::string(1, c);
                    w = q + "\"";
                }
                hist << w << ",";
            }
            hist << count << "\n";
        }
        write_file(out_dir / "histogram.csv", hist.str());

        std::ostringstream sat;
        sat << "sample_size,unique\n";
        for (const auto& p : report.saturation) sat << p.sample_size << "," << p.unique_count << "\n";
        write_file(out_dir / "saturation.csv", sat.str());

        log << "documents=" << report.documents << " tokens=" << report.total_tokens
            << " unique=" << report.unique_total << " unique_in_reference=" << report.unique_in_reference << "\n";
        return kExitOk;
    });
}

// ---- grad-check -----------------------------------------------------------

GradCheckSummary run_grad_check(LossKind kind, std::int64_t trials, std::uint64_t seed) {
    GradCheckSummary out{kind, trials};
    for (std::int64_t t = 0; t < trials; ++t) {
        auto rng = trial_rng(seed ^ (static_cast<std::uint64_t>(kind) << 56), static_cast<std::uint64_t>(t));
        std::uniform_int_distribution<std::size_t> rows_dist(1, 12), cols_dist(2, 16);
        std::normal_distribution<double> logit(0.0, 2.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        const std::size_t rows = rows_dist(rng), cols = cols_dist(rng);
        Matrix logits(rows, cols);
        for (double& v : logits.data()) v = logit(rng);
        std::vector<std::size_t> labels(rows);
        std::uniform_int_distribution<std::size_t> label_dist(0, cols - 1);
        for (auto& y : labels) y = label_dist(rng);

        LossSpec spec;
        spec.kind = kind;
        spec.gamma = unit(rng);
        spec.lambda = 0.25 + 3.75 * unit(rng);
        spec.delta = 0.5 * unit(rng);
        spec.trunc_frac = 0.5 * unit(rng);

        const double err = grad_check_error(logits, labels, spec, 1e-5);
        out.max_error = std::max(out.max_error, err);
        if (!(err <= out.tolerance)) ++out.failures;
    }
    return out;
}

ordered_json to_json(const GradCheckSummary& s) {
    return {{"loss", to_string(s.kind)},
            {"trials", s.trials},
            {"step", 1e-5},
            {"tolerance", s.tolerance},
            {"max_relative_error", s.max_error},
            {"failures", s.failures},
            {"pass", s.pass()}};
}

int cmd_grad_check(std::int64_t trials, std::uint64_t seed, const fs::path& out_dir, std::ostream& log) {
    if (trials < 1) {
        log << "error: --trials must be >= 1\n";
        return kExitUsage;
    }
    return guarded(log, [&] {
        ordered_json results = ordered_json::array();
        bool ok = true;
        for (LossKind kind : {LossKind::kld, LossKind::tailr, LossKind::adatailr, LossKind::loss_truncation,
                              LossKind::gmm_reweight}) {
            const auto s = run_grad_check(kind, trials, seed);
            results.push_back(to_json(s));
            char buf[160];
            std::snprintf(buf, sizeof buf, "%-15s %s  max_relative_error=%.3g  failures=%lld/%lld\n",
                          std::string(to_string(kind)).c_str(), s.pass() ? "PASS" : "FAIL", s.max_error,
                          static_cast<long long>(s.failures), static_cast<long long>(s.trials));
            log << buf;
            ok = ok && s.pass();
        }
        write_file(out_dir / "grad_check.json", dump({{"seed", seed}, {"results", results}}));
        return ok ? kExitOk : kExitFailed;
    });
}

}  // namespace adatailr::cli
