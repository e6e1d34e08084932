#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "rdq/config.hpp"

namespace fs = std::filesystem;
using rdq::ConfigError;
using rdq::toml_to_json;

namespace {

std::string cli_path() {
    const char* p = std::getenv("RDQ_CLI");
    return p ? p : "./rdq";
}

std::string config_dir() {
    const char* p = std::getenv("RDQ_CONFIG_DIR");
    return p ? p : "../examples/configs";
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::path("cli_tmp") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
    REQUIRE(out.good());
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Runs the installed binary with the given arguments, cwd = workdir.
RunResult run_cli(const fs::path& workdir, const std::string& args) {
    std::string cmd = "cd '" + workdir.string() + "' && '" + cli_path() +
                      "' " + args + " > stdout.txt 2> stderr.txt";
    int rc = std::system(cmd.c_str());
    RunResult r;
    if (rc >= 0 && WIFEXITED(rc)) r.exit_code = WEXITSTATUS(rc);
    r.out = slurp(workdir / "stdout.txt");
    r.err = slurp(workdir / "stderr.txt");
    return r;
}

}  // namespace

TEST_CASE("toml subset maps tables, arrays, and scalars to json") {
    const char* text = R"(# experiment header
task = "bounds"          # trailing comment
seed = 7
big = 1_000_000
neg = -12
ratio = 1.5
flag = true
name = "a \"b\"\tc"
lit = 'C:\raw'
top = inf
hole = nan

[space]
type = "interval"
k = 2.0
vals = [1, 2.5,
        3e2,]
nested = [[1, -2], [3]]
)";
    nlohmann::json j = toml_to_json(text);
    CHECK(j["task"] == "bounds");
    CHECK(j["seed"].get<std::uint64_t>() == 7);
    CHECK(j["big"].get<std::uint64_t>() == 1000000);
    CHECK(j["neg"].get<long long>() == -12);
    CHECK(j["ratio"].get<double>() == doctest::Approx(1.5));
    CHECK(j["flag"] == true);
    CHECK(j["name"] == "a \"b\"\tc");
    CHECK(j["lit"] == "C:\\raw");
    CHECK(std::isinf(j["top"].get<double>()));
    CHECK(std::isnan(j["hole"].get<double>()));
    CHECK(j["space"]["type"] == "interval");
    CHECK(j["space"]["k"].get<double>() == doctest::Approx(2.0));
    REQUIRE(j["space"]["vals"].size() == 3);
    CHECK(j["space"]["vals"][2].get<double>() == doctest::Approx(300.0));
    CHECK(j["space"]["nested"][0][1].get<long long>() == -2);
}

TEST_CASE("toml subset rejects what it does not implement") {
    CHECK_THROWS_AS(toml_to_json("a = {x = 1}"), ConfigError);
    CHECK_THROWS_AS(toml_to_json("a.b = 1"), ConfigError);
    CHECK_THROWS_AS(toml_to_json("[[t]]\na = 1"), ConfigError);
    CHECK_THROWS_AS(toml_to_json("a = 1\na = 2"), ConfigError);
    CHECK_THROWS_AS(toml_to_json("[t]\n[t]"), ConfigError);
    CHECK_THROWS_AS(toml_to_json("a = \"open"), ConfigError);
    CHECK_THROWS_AS(toml_to_json("a ="), ConfigError);
    CHECK_THROWS_AS(toml_to_json("a = 12x"), ConfigError);
    CHECK_THROWS_AS(toml_to_json("a = \"bad\\q\""), ConfigError);
    // Errors carry the line number.
    try {
        toml_to_json("ok = 1\nbad = {y = 2}\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("analytic task writes a report and exits zero") {
    fs::path dir = fresh_dir("analytic");
    write_file(dir / "cfg.toml",
               "task = \"rd-lower\"\n"
               "seed = 1\n"
               "[space]\n"
               "type = \"interval\"\n"
               "k = 2.0\n"
               "[params]\n"
               "d_list = [0.01, 0.1]\n");
    RunResult r = run_cli(dir, "rd-lower --config cfg.toml");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("wrote rd-lower_report.csv (2 rows)") != std::string::npos);
    std::string csv = slurp(dir / "rd-lower_report.csv");
    CHECK(csv.rfind("space_id,D,rate,offset\n", 0) == 0);
}

TEST_CASE("config errors name the offending field and exit 1") {
    fs::path dir = fresh_dir("errors");

    SUBCASE("missing seed") {
        write_file(dir / "cfg.toml",
                   "task = \"rd-lower\"\n"
                   "[space]\n"
                   "type = \"interval\"\n"
                   "k = 2.0\n"
                   "[params]\n"
                   "d_list = [0.01]\n");
        RunResult r = run_cli(dir, "rd-lower --config cfg.toml");
        CHECK(r.exit_code == 1);
        CHECK(r.err.find("error: seed:") != std::string::npos);
    }
    SUBCASE("unknown space type") {
        write_file(dir / "cfg.toml",
                   "task = \"rd-lower\"\nseed = 1\n"
                   "[space]\ntype = \"weird\"\n"
                   "[params]\nd_list = [0.01]\n");
        RunResult r = run_cli(dir, "rd-lower --config cfg.toml");
        CHECK(r.exit_code == 1);
        CHECK(r.err.find("error: space.type:") != std::string::npos);
    }
    SUBCASE("task does not match the subcommand") {
        write_file(dir / "cfg.toml",
                   "task = \"bounds\"\nseed = 1\n"
                   "[space]\ntype = \"interval\"\nk = 2.0\n"
                   "[params]\nn_list = [1]\nbudget = 0\n");
        RunResult r = run_cli(dir, "rd-lower --config cfg.toml");
        CHECK(r.exit_code == 1);
        CHECK(r.err.find("error: task:") != std::string::npos);
    }
    SUBCASE("unknown top-level key") {
        write_file(dir / "cfg.toml",
                   "task = \"rd-lower\"\nseed = 1\nbanana = 3\n"
                   "[space]\ntype = \"interval\"\nk = 2.0\n"
                   "[params]\nd_list = [0.01]\n");
        RunResult r = run_cli(dir, "rd-lower --config cfg.toml");
        CHECK(r.exit_code == 1);
        CHECK(r.err.find("banana") != std::string::npos);
    }
    SUBCASE("missing config file") {
        RunResult r = run_cli(dir, "rd-lower --config nope.toml");
        CHECK(r.exit_code == 1);
    }
}

TEST_CASE("a refuted certificate exits with the violation status") {
    fs::path dir = fresh_dir("refuted");
    // Claims mass(|x - y| <= 0.5) <= 0.125 on the unit interval; the true
    // mass is at least 0.5 for every center, so every row must fail.
    write_file(dir / "cfg.toml",
               "task = \"verify-cert\"\n"
               "seed = 3\n"
               "[space]\n"
               "type = \"interval\"\n"
               "k = 2.0\n"
               "[certificate]\n"
               "kind = \"sub\"\n"
               "m = 1.0\n"
               "constant = 0.25\n"
               "delta0 = inf\n"
               "k = 2.0\n"
               "[params]\n"
               "delta_list = [0.5]\n"
               "n_centers = 2\n"
               "samples = 20000\n");
    RunResult r = run_cli(dir, "verify-cert --config cfg.toml");
    CHECK(r.exit_code == 2);
    CHECK(r.out.find("FAILED") != std::string::npos);
}

TEST_CASE("reports are byte identical across reruns and worker counts") {
    fs::path dir = fresh_dir("determinism");
    write_file(dir / "cfg.toml",
               "task = \"quantize\"\n"
               "seed = 21\n"
               "[space]\n"
               "type = \"interval\"\n"
               "k = 2.0\n"
               "[params]\n"
               "n_list = [2, 4]\n"
               "budget = 40000\n");
    RunResult a = run_cli(dir, "quantize --config cfg.toml --out a.csv");
    RunResult b = run_cli(dir, "quantize --config cfg.toml --out b.csv");
    RunResult c =
        run_cli(dir, "quantize --config cfg.toml --workers 3 --out c.csv");
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    REQUIRE(c.exit_code == 0);
    std::string ra = slurp(dir / "a.csv");
    CHECK(ra == slurp(dir / "b.csv"));
    CHECK(ra == slurp(dir / "c.csv"));
    CHECK(ra.rfind("space_id,n,v_hat,v_ci,samples,pass\n", 0) == 0);
}

TEST_CASE("json format mirrors the csv rows") {
    fs::path dir = fresh_dir("json");
    write_file(dir / "cfg.toml",
               "task = \"bounds\"\n"
               "seed = 5\n"
               "[space]\n"
               "type = \"interval\"\n"
               "k = 2.0\n"
               "[params]\n"
               "n_list = [1, 2]\n"
               "budget = 0\n");
    RunResult r =
        run_cli(dir, "bounds --config cfg.toml --format json --out r.json");
    REQUIRE(r.exit_code == 0);
    nlohmann::json doc = nlohmann::json::parse(slurp(dir / "r.json"));
    CHECK(doc["all_pass"] == true);
    REQUIRE(doc["rows"].size() == 2);
    const auto& row = doc["rows"][0];
    CHECK(row["space_id"].is_string());
    CHECK(row["L_n"].is_number());
    CHECK(row["v_hat"].is_null());  // analytic-only run takes no samples
    CHECK(row["pass"] == true);
}

TEST_CASE("command line overrides the config file") {
    fs::path dir = fresh_dir("overrides");
    write_file(dir / "cfg.toml",
               "task = \"quantize\"\n"
               "seed = 21\n"
               "out = \"from_config.csv\"\n"
               "[space]\n"
               "type = \"interval\"\n"
               "k = 2.0\n"
               "[params]\n"
               "n_list = [2]\n"
               "budget = 20000\n");
    RunResult a = run_cli(dir, "quantize --config cfg.toml");
    REQUIRE(a.exit_code == 0);
    CHECK(fs::exists(dir / "from_config.csv"));
    RunResult b = run_cli(dir, "quantize --config cfg.toml --seed 22 --out o.csv");
    REQUIRE(b.exit_code == 0);
    CHECK(slurp(dir / "from_config.csv") != slurp(dir / "o.csv"));
}

TEST_CASE("usage errors and help behave like a standard cli") {
    fs::path dir = fresh_dir("usage");
    CHECK(run_cli(dir, "--help").exit_code == 0);
    CHECK(run_cli(dir, "frobnicate --config x.toml").exit_code == 1);
    CHECK(run_cli(dir, "bounds").exit_code == 1);  // --config is required
}

TEST_CASE("shipped analytic example configs run clean") {
    fs::path dir = fresh_dir("examples");
    const char* quick[] = {
        "classical_rate_bound.toml", "product_certificates.toml",
        "cantor_sandwich.toml",      "dimension_cantor.toml",
        "dimension_sphere.toml",     "multi_letter_decay.toml",
    };
    for (const char* name : quick) {
        CAPTURE(name);
        fs::path cfg = fs::path(config_dir()) / name;
        REQUIRE(fs::exists(cfg));
        nlohmann::json j = rdq::load_config_file(cfg.string());
        std::string task = j.at("task").get<std::string>();
        RunResult r = run_cli(dir, task + " --config '" + cfg.string() + "'");
        CHECK(r.exit_code == 0);
        CHECK(r.out.find("all rows pass") != std::string::npos);
    }
}
