#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>
#include <unistd.h>

#include "coulomb_cli/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace coulomb::cli;

namespace {

struct Scratch {
    fs::path root;
    Scratch() {
        root = fs::temp_directory_path() / ("coulomb-cli-test-" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Scratch() { fs::remove_all(root); }
    std::string operator/(const std::string& s) const { return (root / s).string(); }
};

struct Result {
    int code;
    std::string out, err;
};

Result cli(std::vector<std::string> args) {
    args.insert(args.begin(), "coulomb");
    std::ostringstream o, e;
    const int code = run(args, o, e);
    return {code, o.str(), e.str()};
}

json load(const std::string& path) {
    std::ifstream is(path);
    REQUIRE(is.good());
    return json::parse(is);
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// every file in the manifest exists, and every plot table listed in the index has the rows it claims
void check_outputs(const std::string& dir, const std::set<std::string>& plots) {
    const auto m = load(dir + "/manifest.json");
    CHECK(m["status"] == "complete");
    CHECK(m["wall_clock_seconds"].get<double>() >= 0.0);
    CHECK(m.contains("conventions"));
    for (const auto& f : m["files"]) CHECK(fs::exists(dir + "/" + f.get<std::string>()));
    const auto idx = load(dir + "/plot/index.json");
    std::set<std::string> seen;
    for (const auto& e : idx) {
        const std::string file = e["file"];
        seen.insert(fs::path(file).stem().string());
        std::ifstream is(dir + "/" + file);
        std::string line;
        std::getline(is, line);
        CHECK(line.rfind("# ", 0) == 0);
        int rows = 0;
        while (std::getline(is, line))
            if (!line.empty()) ++rows;
        CHECK(rows == e["rows"].get<int>());
        CHECK(rows > 0);
    }
    for (const auto& p : plots) CHECK_MESSAGE(seen.count(p), p);
}

}  // namespace

TEST_CASE("split-check writes a report with a small residual") {
    Scratch s;
    const auto r = cli({"split-check", "--n", "3", "--seed", "7", "--out", s / "a"});
    REQUIRE(r.code == kOk);
    const auto rep = load(s / "a/report.json");
    CHECK(rep["command"] == "split-check");
    CHECK(rep["results"]["relative_residual"].get<double>() <= 1e-8);
    CHECK(rep["config"]["n"] == "3");
    CHECK_FALSE(rep["config"].contains("out"));
    check_outputs(s / "a", {"split_points", "eta_trace"});
}

TEST_CASE("lattice-scan finds the hexagonal lattice") {
    Scratch s;
    REQUIRE(cli({"lattice-scan", "--resolution", "16", "--out", s / "a"}).code == kOk);
    const auto rep = load(s / "a/report.json");
    CHECK(rep["results"]["argmin_is_hexagonal"] == true);
    CHECK(fs::exists(s / "a/lattice_scan.csv"));
    check_outputs(s / "a", {"lattice_scan"});
}

TEST_CASE("usage and validation errors leave no output") {
    Scratch s;
    auto r = cli({"fekete", "--out", s / "a"});
    CHECK(r.code == kUsage);
    CHECK(r.err.find("--n") != std::string::npos);
    CHECK_FALSE(fs::exists(s / "a"));

    CHECK(cli({"fekete", "--n", "5", "--bogus", "1", "--out", s / "b"}).code == kUsage);
    CHECK(cli({"nonsense"}).code == kUsage);
    CHECK(cli({"fekete", "--n", "five", "--out", s / "b"}).code == kUsage);
    CHECK_FALSE(fs::exists(s / "b"));

    CHECK(cli({"sample", "--n", "10", "--beta", "-1", "--out", s / "c"}).code == kValidation);
    CHECK(cli({"equilibrium", "--potential", "x^2 - y^2", "--out", s / "c"}).code == kValidation);
    CHECK(cli({"meissner", "--spacing", "-0.1", "--out", s / "c"}).code == kValidation);
    CHECK(cli({"fekete", "--n", "0", "--out", s / "c"}).code == kValidation);
    CHECK_FALSE(fs::exists(s / "c"));

    const auto v = cli({"--version"});
    CHECK(v.code == kOk);
    CHECK_FALSE(v.out.empty());
    CHECK(cli({"fekete", "--help"}).code == kOk);
}

TEST_CASE("config files merge under explicit flags") {
    Scratch s;
    {
        std::ofstream c(s / "run.cfg");
        c << "# fekete settings\n"
             "n = 7\n"
             "starts = 3   # few\n"
             "max_iterations = 500\n";
    }
    REQUIRE(cli({"fekete", "--config", s / "run.cfg", "--starts", "2", "--out", s / "a"}).code == kOk);
    const auto cfg = load(s / "a/report.json")["config"];
    CHECK(cfg["n"] == "7");
    CHECK(cfg["starts"] == "2");
    CHECK(cfg["max-iterations"] == "500");
    CHECK_FALSE(cfg.contains("config"));

    const auto pairs = read_config(s / "run.cfg");
    REQUIRE(pairs.size() == 3);
    CHECK(pairs[2].first == "max-iterations");
    CHECK(pairs[1].second == "3");
    {
        std::ofstream c(s / "bad.cfg");
        c << "n 7\n";
    }
    CHECK_THROWS(read_config(s / "bad.cfg"));
    CHECK(cli({"fekete", "--config", s / "bad.cfg", "--out", s / "b"}).code == kUsage);
    CHECK(cli({"fekete", "--config", s / "missing.cfg", "--out", s / "b"}).code == kUsage);
}

TEST_CASE("output directory from the environment, flag wins") {
    Scratch s;
    ::setenv(kOutputDirEnv, (s / "env").c_str(), 1);
    REQUIRE(cli({"lattice-scan", "--resolution", "8"}).code == kOk);
    CHECK(fs::exists(s / "env/report.json"));
    REQUIRE(cli({"lattice-scan", "--resolution", "8", "--out", s / "flag"}).code == kOk);
    CHECK(fs::exists(s / "flag/report.json"));
    ::unsetenv(kOutputDirEnv);
}

TEST_CASE("reports are byte-reproducible") {
    Scratch s;
    for (const char* d : {"a", "b"})
        REQUIRE(cli({"fekete", "--n", "12", "--starts", "3", "--seed", "4", "--out", s / d}).code == kOk);
    CHECK(slurp(s / "a/report.json") == slurp(s / "b/report.json"));
    CHECK(slurp(s / "a/plot/fekete_points.dat") == slurp(s / "b/plot/fekete_points.dat"));
}

TEST_CASE("plot data for the main experiments") {
    Scratch s;
    REQUIRE(cli({"obstacle", "--spacing", "0.05", "--lambda-factors", "0.9,2,10", "--out", s / "obs"}).code == kOk);
    check_outputs(s / "obs", {"obstacle_coverage", "obstacle_profiles"});
    const auto obs = load(s / "obs/report.json");
    CHECK(obs["results"].dump().find("coverage") != std::string::npos);

    REQUIRE(cli({"fekete", "--n", "29", "--out", s / "fk"}).code == kOk);
    check_outputs(s / "fk", {"fekete_points", "start_energies", "radial_cdf"});

    REQUIRE(cli({"sample", "--n", "1000", "--beta", "2", "--steps", "40", "--burn-in", "10", "--out", s / "gb"})
                .code == kOk);
    check_outputs(s / "gb", {"sample_points", "energy_trace"});

    REQUIRE(cli({"equilibrium", "--spacing", "0.05", "--out", s / "eq"}).code == kOk);
    check_outputs(s / "eq", {"density_profile"});
}

TEST_CASE("I/O failure exits with the numerical code") {
    Scratch s;
    { std::ofstream(s / "file") << "x"; }
    const auto r = cli({"lattice-scan", "--resolution", "8", "--out", s / "file/sub"});
    CHECK(r.code == kNumerical);
    CHECK_FALSE(r.err.empty());
}
