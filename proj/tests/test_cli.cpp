#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

std::string cli_binary() {
    const char* env = std::getenv("DICKE_CLI");
    REQUIRE(env != nullptr);
    return env;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("dicke-cli-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

int run(const std::string& args) {
    const std::string cmd = cli_binary() + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("well-formed quench invocation validates") {
    TempDir tmp;
    REQUIRE(run("--n-atoms 20 --output-dir " + tmp.path.string() +
                " --dry-run quench --lambda-i 1.41 --lambda-f 1.13") == 0);
    REQUIRE(fs::is_empty(tmp.path)); // dry runs emit nothing
}

TEST_CASE("negative coupling is rejected with a config error") {
    REQUIRE(run("--n-atoms 4 --dry-run spectrum --lambda -0.5") == 2);
}

TEST_CASE("missing subcommand and unknown flags are config errors") {
    REQUIRE(run("--n-atoms 4") == 2);
    REQUIRE(run("--n-atoms 4 --frobnicate spectrum --lambda 1.0") == 2);
}

TEST_CASE("surface run emits csv plus sidecar, refuses overwrite, honors --force") {
    TempDir tmp;
    const std::string base = "--n-atoms 8 --output-dir " + tmp.path.string() +
                             " meanfield-surface --lambda 0.25 --resolution 32";
    REQUIRE(run(base) == 0);
    REQUIRE(fs::exists(tmp.path / "surface.csv"));
    REQUIRE(fs::exists(tmp.path / "critical_contour.csv"));
    REQUIRE(fs::exists(tmp.path / "run.json"));

    const auto sidecar = nlohmann::json::parse(slurp(tmp.path / "run.json"));
    REQUIRE(sidecar["subcommand"] == "meanfield-surface");
    REQUIRE(sidecar["run_config"]["n_atoms"] == 8);
    REQUIRE(sidecar["run_config"]["meanfield-surface"]["resolution"] == 32);
    REQUIRE(sidecar["results"]["components_below_critical"] == 0);
    REQUIRE(sidecar.contains("timings"));
    REQUIRE(sidecar.contains("library_version"));

    REQUIRE(run(base) == 4);            // existing files without --force
    REQUIRE(run("--force " + base) == 0);
    REQUIRE(run("--dry-run " + base) == 0); // dry runs only validate configuration
}

TEST_CASE("flags override config file values") {
    TempDir tmp;
    const auto config_path = tmp.path / "config.json";
    {
        std::ofstream cfg(config_path);
        cfg << R"({
            "n_atoms": 8,
            "output_dir": ")" << (tmp.path / "out").string() << R"(",
            "meanfield-surface": {"lambda": 0.25, "resolution": 16}
        })";
    }
    REQUIRE(run("--config " + config_path.string() + " meanfield-surface --resolution 8") == 0);
    const auto sidecar = nlohmann::json::parse(slurp(tmp.path / "out" / "run.json"));
    REQUIRE(sidecar["run_config"]["meanfield-surface"]["resolution"] == 8); // flag wins
    REQUIRE(sidecar["run_config"]["meanfield-surface"]["lambda"] == 0.25);  // file fills the rest
    REQUIRE(sidecar["run_config"]["n_atoms"] == 8);
}

TEST_CASE("a sidecar regenerates byte-identical data files") {
    TempDir tmp;
    const auto first = tmp.path / "a";
    const auto second = tmp.path / "b";
    REQUIRE(run("--n-atoms 6 --output-dir " + first.string() +
                " meanfield-surface --lambda 2.0 --resolution 48") == 0);
    REQUIRE(run("--config " + (first / "run.json").string() + " --output-dir " + second.string() +
                " meanfield-surface") == 0);
    REQUIRE(slurp(first / "surface.csv") == slurp(second / "surface.csv"));
    REQUIRE(slurp(first / "critical_contour.csv") == slurp(second / "critical_contour.csv"));
}

TEST_CASE("spectrum output is identical with and without the cache") {
    TempDir tmp;
    const auto cache_dir = tmp.path / "cache";
    const std::string common = "--n-atoms 6 spectrum --lambda 1.3";

    REQUIRE(run("--output-dir " + (tmp.path / "cold").string() + " --cache-dir " +
                cache_dir.string() + " " + common) == 0);
    REQUIRE(run("--output-dir " + (tmp.path / "warm").string() + " --cache-dir " +
                cache_dir.string() + " " + common) == 0);
    REQUIRE(run("--output-dir " + (tmp.path / "none").string() + " --no-cache " + common) == 0);

    const auto cold = slurp(tmp.path / "cold" / "spectrum.csv");
    REQUIRE(cold == slurp(tmp.path / "warm" / "spectrum.csv"));
    REQUIRE(cold == slurp(tmp.path / "none" / "spectrum.csv"));
}

TEST_CASE("phase diagram emits the map and the line") {
    TempDir tmp;
    REQUIRE(run("--n-atoms 6 --no-cache --output-dir " + tmp.path.string() +
                " phase-diagram --lambdas 0.3 --lambdas 1.2") == 0);
    const auto map = slurp(tmp.path / "map.csv");
    REQUIRE(map.rfind("lambda,pair_index,pair_energy_over_J,delta_E,log10_delta_E\n", 0) == 0);
    const auto line = slurp(tmp.path / "line.csv");
    REQUIRE(line.rfind("lambda,Ec_over_J\n", 0) == 0);
    REQUIRE(line.find("\n1.2,") != std::string::npos); // one line point, lambda = 1.2
}

TEST_CASE("phase diagram regenerates from its sidecar") {
    TempDir tmp;
    const auto first = tmp.path / "a";
    const auto second = tmp.path / "b";
    REQUIRE(run("--n-atoms 4 --no-cache --output-dir " + first.string() +
                " phase-diagram --lambda-min 0.8 --lambda-max 1.2 --lambda-step 0.2") == 0);
    REQUIRE(run("--config " + (first / "run.json").string() + " --output-dir " + second.string() +
                " phase-diagram") == 0);
    REQUIRE(slurp(first / "map.csv") == slurp(second / "map.csv"));
    REQUIRE(slurp(first / "line.csv") == slurp(second / "line.csv"));
}
