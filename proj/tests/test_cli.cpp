#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "adatailr/cli.hpp"
#include "adatailr/error.hpp"

using namespace adatailr;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(ADATAILR_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("adatailr_test_cli_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("config parsing") {
    std::istringstream in("# bench\nloss = AdaTaiLr\nlambda=2.5  # inline\n\ngrid_rates = 0, 0.4\nanneal_floor = true\n");
    const auto c = cli::parse_config(in);
    CHECK(c.train.loss.kind == LossKind::adatailr);
    CHECK(c.train.loss.lambda == 2.5);
    CHECK(c.grid_rates == std::vector<double>{0.0, 0.4});
    CHECK(c.train.anneal_floor);
    CHECK(c.train.steps == 5000);

    std::istringstream unknown("lamda = 2\n");
    CHECK_THROWS_AS(cli::parse_config(unknown), Error);
    std::istringstream bad("steps = 10x\n");
    CHECK_THROWS_AS(cli::parse_config(bad), Error);
    std::istringstream no_eq("steps 10\n");
    CHECK_THROWS_AS(cli::parse_config(no_eq), Error);
}

TEST_CASE("rendered config round trips") {
    cli::RunConfig c;
    cli::set_config_value(c, "lambda", "2.0");
    cli::set_config_value(c, "grid_losses", "kld, adatailr");
    cli::set_config_value(c, "learning_rate", "0.1");
    const std::string text = cli::render_config(c);
    CHECK(text.find("lambda = 2\n") != std::string::npos);
    std::istringstream in(text);
    const auto back = cli::parse_config(in);
    CHECK(cli::render_config(back) == text);
    CHECK(back.train.learning_rate == 0.1);
    CHECK(back.grid_losses == std::vector<LossKind>{LossKind::kld, LossKind::adatailr});
    CHECK(cli::config_keys().size() == 24);
}

TEST_CASE("validation") {
    cli::RunConfig c;
    CHECK_NOTHROW(c.validate());
    c.noise_kind = NoiseKind::fixed_distribution;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.grid_seeds = 0;
    CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("cell seeds are distinct and stable") {
    const auto a = cli::cell_seeds(0, 0), b = cli::cell_seeds(0, 1);
    CHECK(a.task != b.task);
    CHECK(a.task != a.data);
    CHECK(cli::cell_seeds(0, 1).train == b.train);
}

TEST_CASE("exit codes") {
    const auto out = scratch("exit");
    CHECK(run("verify nonsense --out " + out.string()) == 2);
    CHECK(run("diversity /nonexistent/corpus.txt /nonexistent/ref.txt --out " + out.string()) == 2);
    CHECK(run("bench --lamda 2") == 2);
    CHECK(run("bench --steps 0 --out-dir " + out.string()) == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("verify theorem1 --trials 200 --out " + (out / "v").string()) == 0);
    CHECK(fs::exists(out / "v" / "theorem1.json"));
    CHECK(run("grad-check --trials 10 --out " + (out / "g").string()) == 0);
}

TEST_CASE("bench override is recorded and outputs are deterministic") {
    const auto a = scratch("bench_a"), b = scratch("bench_b");
    // only out_dir differs between the two resolved configs
    const std::string args =
        " --lambda 2.0 --steps 40 --eval-every 10 --contexts 3 --vocab 4 --samples-per-context 30"
        " --grid-seeds 2 --grid-rates 0,0.4 --grid-losses kld,adatailr,gmmreweight --out-dir ";
    REQUIRE(run("bench" + args + a.string()) == 0);
    REQUIRE(run("bench" + args + b.string()) == 0);
    CHECK(slurp(a / "config.resolved").find("lambda = 2\n") != std::string::npos);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a / "metrics")) {
        ++files;
        CHECK(slurp(e.path()) == slurp(b / "metrics" / e.path().filename()));
    }
    CHECK(files == 12);
    CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
    const auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
    CHECK(summary["cells"].size() == 12);
}

TEST_CASE("gen-data and diversity are deterministic") {
    const auto a = scratch("gen");
    REQUIRE(run("gen-data --samples-per-context 20 --out-dir " + a.string()) == 0);
    std::map<std::string, std::string> first;
    for (const char* f : {"task.json", "data.jsonl", "config.resolved"}) first[f] = slurp(a / f);
    REQUIRE(run("gen-data --samples-per-context 20 --out-dir " + a.string()) == 0);
    for (const auto& [f, bytes] : first) CHECK(slurp(a / f) == bytes);
    CHECK(first["config.resolved"].find("concentration = 0.3\n") != std::string::npos);

    const std::string fx = ADATAILR_FIXTURES;
    const auto d = scratch("div");
    REQUIRE(run("diversity " + fx + "/toy_corpus.txt " + fx + "/toy_reference.txt --out " + d.string()) == 0);
    const auto rep = nlohmann::json::parse(slurp(d / "diversity.json"));
    CHECK(rep["unique_in_reference"] == 4);
    CHECK(rep["saturation"].size() == 5);  // 10 log-spaced sizes over 5 documents, deduplicated
    CHECK(slurp(d / "histogram.csv").rfind("token_id,word,count\n0,the,3\n", 0) == 0);
    CHECK(slurp(d / "saturation.csv").rfind("sample_size,unique\n", 0) == 0);
}
