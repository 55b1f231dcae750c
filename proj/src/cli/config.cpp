#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "adatailr/cli.hpp"
#include "adatailr/error.hpp"

namespace adatailr::cli {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
    throw Error(Errc::parse_error,
                "config key '" + std::string(key) + "': '" + std::string(value) + "' is not " + std::string(want));
}

template <class T>
T parse_number(std::string_view key, std::string_view text, std::string_view want) {
    const std::string v = trim(text);
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, text, want);
    return out;
}

double parse_double(std::string_view key, std::string_view v) { return parse_number<double>(key, v, "a number"); }

std::int64_t parse_int(std::string_view key, std::string_view v) {
    return parse_number<std::int64_t>(key, v, "an integer");
}

std::size_t parse_count(std::string_view key, std::string_view v) {
    const auto n = parse_int(key, v);
    if (n < 0) bad_value(key, v, "a non-negative integer");
    return static_cast<std::size_t>(n);
}

bool parse_bool(std::string_view key, std::string_view text) {
    const std::string v = trim(text);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, text, "a boolean");
}

std::vector<std::string> split_list(std::string_view v) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= v.size()) {
        const auto comma = v.find(',', start);
        const auto end = comma == std::string_view::npos ? v.size() : comma;
        auto item = trim(v.substr(start, end - start));
        if (!item.empty()) out.push_back(std::move(item));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

// Shortest %g form that reads back to the same double.
std::string fmt(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& items, F&& f) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        out += f(items[i]);
    }
    return out;
}

struct Field {
    std::string key;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        auto add = [&](std::string key, auto set, auto get) { f.push_back({std::move(key), set, get}); };
        add("loss", [](RunConfig& c, std::string_view v) { c.train.loss.kind = parse_loss_kind(trim(v)); },
            [](const RunConfig& c) { return std::string(to_string(c.train.loss.kind)); });
        add("gamma", [](RunConfig& c, std::string_view v) { c.train.loss.gamma = parse_double("gamma", v); },
            [](const RunConfig& c) { return fmt(c.train.loss.gamma); });
        add("lambda", [](RunConfig& c, std::string_view v) { c.train.loss.lambda = parse_double("lambda", v); },
            [](const RunConfig& c) { return fmt(c.train.loss.lambda); });
        add("delta", [](RunConfig& c, std::string_view v) { c.train.loss.delta = parse_double("delta", v); },
            [](const RunConfig& c) { return fmt(c.train.loss.delta); });
        add("trunc_frac",
            [](RunConfig& c, std::string_view v) { c.train.loss.trunc_frac = parse_double("trunc_frac", v); },
            [](const RunConfig& c) { return fmt(c.train.loss.trunc_frac); });
        add("gmm_components",
            [](RunConfig& c, std::string_view v) {
                c.train.loss.gmm_components = static_cast<int>(parse_int("gmm_components", v));
            },
            [](const RunConfig& c) { return std::to_string(c.train.loss.gmm_components); });
        add("steps", [](RunConfig& c, std::string_view v) { c.train.steps = parse_int("steps", v); },
            [](const RunConfig& c) { return std::to_string(c.train.steps); });
        add("batch_size", [](RunConfig& c, std::string_view v) { c.train.batch_size = parse_int("batch_size", v); },
            [](const RunConfig& c) { return std::to_string(c.train.batch_size); });
        add("learning_rate",
            [](RunConfig& c, std::string_view v) { c.train.learning_rate = parse_double("learning_rate", v); },
            [](const RunConfig& c) { return fmt(c.train.learning_rate); });
        add("warmup_steps",
            [](RunConfig& c, std::string_view v) { c.train.warmup_steps = parse_int("warmup_steps", v); },
            [](const RunConfig& c) { return std::to_string(c.train.warmup_steps); });
        add("anneal_floor",
            [](RunConfig& c, std::string_view v) { c.train.anneal_floor = parse_bool("anneal_floor", v); },
            [](const RunConfig& c) { return std::string(c.train.anneal_floor ? "true" : "false"); });
        add("eval_every", [](RunConfig& c, std::string_view v) { c.train.eval_every = parse_int("eval_every", v); },
            [](const RunConfig& c) { return std::to_string(c.train.eval_every); });
        add("contexts", [](RunConfig& c, std::string_view v) { c.contexts = parse_count("contexts", v); },
            [](const RunConfig& c) { return std::to_string(c.contexts); });
        add("vocab", [](RunConfig& c, std::string_view v) { c.vocab = parse_count("vocab", v); },
            [](const RunConfig& c) { return std::to_string(c.vocab); });
        add("concentration",
            [](RunConfig& c, std::string_view v) { c.concentration = parse_double("concentration", v); },
            [](const RunConfig& c) { return fmt(c.concentration); });
        add("noise_rate", [](RunConfig& c, std::string_view v) { c.noise_rate = parse_double("noise_rate", v); },
            [](const RunConfig& c) { return fmt(c.noise_rate); });
        add("noise_kind",
            [](RunConfig& c, std::string_view v) {
                try {
                    c.noise_kind = parse_noise_kind(trim(v));
                } catch (const Error&) {
                    bad_value("noise_kind", v, "uniform, shuffled-task or fixed-distribution");
                }
            },
            [](const RunConfig& c) { return to_string(c.noise_kind); });
        add("noise_rows", [](RunConfig& c, std::string_view v) { c.noise_rows = trim(v); },
            [](const RunConfig& c) { return c.noise_rows; });
        add("samples_per_context",
            [](RunConfig& c, std::string_view v) {
                c.samples_per_context = parse_count("samples_per_context", v);
            },
            [](const RunConfig& c) { return std::to_string(c.samples_per_context); });
        add("seed",
            [](RunConfig& c, std::string_view v) {
                c.seed = parse_number<std::uint64_t>("seed", v, "an unsigned integer");
            },
            [](const RunConfig& c) { return std::to_string(c.seed); });
        add("out_dir", [](RunConfig& c, std::string_view v) { c.out_dir = trim(v); },
            [](const RunConfig& c) { return c.out_dir; });
        add("grid_losses",
            [](RunConfig& c, std::string_view v) {
                c.grid_losses.clear();
                for (const auto& item : split_list(v)) c.grid_losses.push_back(parse_loss_kind(item));
            },
            [](const RunConfig& c) {
                return join(c.grid_losses, [](LossKind k) { return std::string(to_string(k)); });
            });
        add("grid_rates",
            [](RunConfig& c, std::string_view v) {
                c.grid_rates.clear();
                for (const auto& item : split_list(v)) c.grid_rates.push_back(parse_double("grid_rates", item));
            },
            [](const RunConfig& c) { return join(c.grid_rates, fmt); });
        add("grid_seeds", [](RunConfig& c, std::string_view v) { c.grid_seeds = parse_int("grid_seeds", v); },
            [](const RunConfig& c) { return std::to_string(c.grid_seeds); });
        return f;
    }();
    return table;
}

}  // namespace

void RunConfig::validate() const {
    train.validate();
    if (contexts < 1) throw Error(Errc::bad_shape, "contexts must be >= 1");
    if (vocab < 2) throw Error(Errc::bad_shape, "vocab must be >= 2");
    if (!(concentration > 0.0)) throw Error(Errc::non_positive_concentration, "concentration must be > 0");
    if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) throw Error(Errc::invalid_argument, "noise_rate must be in [0,1]");
    if (samples_per_context < 1) throw Error(Errc::invalid_argument, "samples_per_context must be >= 1");
    if (noise_kind == NoiseKind::fixed_distribution && noise_rows.empty()) {
        throw Error(Errc::missing_noise_rows, "fixed-distribution noise needs noise_rows");
    }
    if (out_dir.empty()) throw Error(Errc::invalid_argument, "out_dir must not be empty");
    if (grid_losses.empty()) throw Error(Errc::invalid_argument, "grid_losses must not be empty");
    if (grid_rates.empty()) throw Error(Errc::invalid_argument, "grid_rates must not be empty");
    for (double r : grid_rates) {
        if (!(r >= 0.0 && r <= 1.0)) throw Error(Errc::invalid_argument, "grid_rates entries must be in [0,1]");
    }
    if (grid_seeds < 1) throw Error(Errc::invalid_argument, "grid_seeds must be >= 1");
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& f : fields()) k.push_back(f.key);
        return k;
    }();
    return keys;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
    for (const auto& f : fields()) {
        if (f.key == key) {
            try {
                f.set(config, value);
            } catch (const Error& e) {
                if (e.code() == Errc::parse_error) throw;
                throw Error(Errc::parse_error, "config key '" + std::string(key) + "': " + e.what());
            }
            return;
        }
    }
    throw Error(Errc::parse_error, "unknown config key '" + std::string(key) + "'");
}

RunConfig parse_config(std::istream& is) {
    RunConfig config;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(Errc::parse_error, "line " + std::to_string(lineno) + ": expected key = value");
        }
        set_config_value(config, trim(std::string_view(line).substr(0, eq)), std::string_view(line).substr(eq + 1));
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io_error, "cannot read config " + path.string());
    return parse_config(in);
}

std::string render_config(const RunConfig& config) {
    std::ostringstream os;
    for (const auto& f : fields()) os << f.key << " = " << f.get(config) << "\n";
    return os.str();
}

CellSeeds cell_seeds(std::uint64_t base, std::int64_t index) {
    const auto i = static_cast<std::uint64_t>(index);
    std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                      static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
    std::mt19937_64 rng(seq);
    CellSeeds s{};
    s.task = rng();
    s.data = rng();
    s.train = rng();
    return s;
}

}  // namespace adatailr::cli
