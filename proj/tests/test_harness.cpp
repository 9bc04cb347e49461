#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "conormal_lab/conormal.hpp"
#include "conormal_lab/harness.hpp"

using namespace clab;
using namespace clab::harness;

namespace fs = std::filesystem;

namespace {

const char* kFlowConfig = R"({
  "kind": "flow",
  "model": {"kind": "sphere", "dim": 2},
  "phase_point": {"x": [1, 0, 0], "xi": [0, 1, 0]},
  "params": {"t": 1.5707963267948966}
})";

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(CONORMAL_LAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    int ret = std::system(cmd.c_str());
    return WEXITSTATUS(ret);
}

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("conormal_lab_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("configs parse into typed experiments and echo canonically") {
    auto cfg = parse_config(kFlowConfig);
    CHECK(cfg.kind == "flow");
    CHECK(cfg.model == "sphere");
    CHECK(cfg.dim == 2);
    CHECK(cfg.t == doctest::Approx(1.5707963267948966));

    auto cfg2 = parse_config(cfg.echo);  // the echo re-validates
    CHECK(cfg2.echo == cfg.echo);
}

TEST_CASE("malformed configs name the missing field") {
    CHECK_THROWS_AS(parse_config("not json"), ConfigInvalid);
    try {
        parse_config(R"({"kind": "flow"})");
        FAIL("expected ConfigInvalid");
    } catch (const ConfigInvalid& e) {
        CHECK(std::string(e.what()).find("model") != std::string::npos);
    }
    try {
        parse_config(R"({"kind": "return-stats", "model": {"kind": "torus"},
                         "H": {"kind": "torus_geodesic"}, "params": {}})");
        FAIL("expected ConfigInvalid");
    } catch (const ConfigInvalid& e) {
        CHECK(std::string(e.what()).find("seed") != std::string::npos);
    }
}

TEST_CASE("a quarter-turn flow run reports the rotated phase point") {
    auto report = run(parse_config(kFlowConfig));
    CHECK(report.json.find("\"kind\": \"flow\"") != std::string::npos);
    CHECK(report.csv_tables.count("flow") == 1);
    // x = (0, 1, 0), xi = (-1, 0, 0) up to rounding.
    CHECK(report.json.find("-1.0") != std::string::npos);
    CHECK(report.wall_seconds >= 0.0);
}

TEST_CASE("identical configs byte-reproduce their payloads") {
    const char* cfg_text = R"({
      "kind": "return-stats",
      "model": {"kind": "torus", "dim": 2},
      "H": {"kind": "torus_geodesic", "direction": [0, 1], "point": [0, 0]},
      "params": {"N": 40, "T": 3.0, "eps": 1e-2, "seed": 9}
    })";
    auto a = run(parse_config(cfg_text));
    auto b = run(parse_config(cfg_text));
    CHECK(a.json == b.json);
    REQUIRE(a.csv_tables.count("return_stats") == 1);
    CHECK(a.csv_tables.at("return_stats") == b.csv_tables.at("return_stats"));
    // Rerunning from the canonical echo reproduces the payload too.
    auto c = run(parse_config(parse_config(cfg_text).echo));
    CHECK(c.json == a.json);
}

TEST_CASE("experiment kinds dispatch to their modules") {
    const char* sweep_cfg = R"({
      "kind": "average-sweep",
      "model": {"kind": "torus", "dim": 2},
      "H": {"kind": "torus_geodesic", "direction": [0, 1], "point": [0, 0]},
      "params": {"frequencies": [8, 16, 32, 64]}
    })";
    auto sweep = run(parse_config(sweep_cfg));
    CHECK(sweep.json.find("\"alpha\"") != std::string::npos);
    CHECK(sweep.csv_tables.count("average_sweep") == 1);

    const char* box_cfg = R"({
      "kind": "boxdim",
      "H": {"kind": "cantor"},
      "params": {"N": 13}
    })";
    auto box = run(parse_config(box_cfg));
    CHECK(box.json.find("\"estimate\"") != std::string::npos);
    CHECK(box.json.find("\"admissible\"") != std::string::npos);

    const char* defect_cfg = R"({
      "kind": "defect",
      "model": {"kind": "torus", "dim": 2},
      "params": {"frequencies": [8, 16], "grid": 128, "symbol": "xi_bump"}
    })";
    auto defect = run(parse_config(defect_cfg));
    CHECK(defect.json.find("\"limit_re\": 1.0") != std::string::npos);
}

TEST_CASE("hyperbolic models accept explicit generator lists") {
    const double a = 1.0 + std::sqrt(2.0);
    const double b = std::sqrt(2.0 + 2.0 * std::sqrt(2.0));
    const double r = std::sqrt(0.5) * b;
    auto cfg_for = [&](double d22) {
        std::ostringstream os;
        os.precision(17);
        os << R"({"kind": "splitting", "model": {"kind": "hyperbolic", "generators": [)";
        os << "[" << a + b << ",0,0," << a - b << "],";
        os << "[" << a + r << "," << -r << "," << -r << "," << a - r << "],";
        os << "[" << a << "," << -b << "," << -b << "," << d22 << "],";
        os << "[" << a - r << "," << -r << "," << -r << "," << a + r << "]]},";
        os << R"("H": {"kind": "horocycle", "length": 1.0}, "params": {"N": 4, "seed": 1}})";
        return os.str();
    };
    // Determinants must be 1 within 1e-12.
    CHECK_THROWS_AS(build_model(parse_config(cfg_for(a + b))), Error);

    auto cfg = parse_config(cfg_for(a));
    auto model = build_model(cfg);
    CHECK(model.generators().size() == 8);  // closed under inversion
    auto H = build_submanifold(cfg, model);
    CHECK(H.length() == doctest::Approx(1.0));
}

TEST_CASE("sample sets serialize to coordinate/covector/weight rows") {
    auto torus = geometry::ManifoldModel::torus(2);
    auto line = conormal::Submanifold::torus_geodesic(torus, 0, 1, {0.0, 0.0});
    auto csv = samples_csv(conormal::sample_snh(line, 3, 1));
    CHECK(csv.rfind("x0,x1,xi0,xi1,weight\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("boxdim accepts external point clouds as CSV") {
    fs::path dir = temp_dir("cloud");
    {
        std::ofstream out(dir / "cloud.csv");
        out << "x\n0.0\n0.33\n0.67\n1.0\n";
    }
    auto report = run(parse_config(R"({"kind": "boxdim", "H": {"kind": "csv", "path": ")" +
                                   (dir / "cloud.csv").string() + R"("}})"));
    CHECK(report.json.find("\"estimate\"") != std::string::npos);
}

TEST_CASE("unknown suites are rejected, known ones are registered") {
    CHECK_THROWS_AS(acceptance_suite("no-such-suite"), UnknownSuite);
    auto suites = registered_suites();
    CHECK(std::find(suites.begin(), suites.end(), "torus-dichotomy") != suites.end());
    CHECK(std::find(suites.begin(), suites.end(), "all") != suites.end());
    CHECK(list_presets().find("bolza") != std::string::npos);
}

TEST_CASE("one acceptance suite runs end to end through run()") {
    const char* cfg_text = R"({
      "kind": "acceptance",
      "params": {"suite": "box-dimension"}
    })";
    auto report = run(parse_config(cfg_text));
    CHECK(report.json.find("\"all_passed\": true") != std::string::npos);
}

TEST_CASE("the command line maps error classes onto exit codes") {
    fs::path dir = temp_dir("cli");
    {
        std::ofstream out(dir / "flow.json");
        out << kFlowConfig;
    }
    CHECK(run_cli("flow --config " + (dir / "flow.json").string() + " --out " +
                  (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "report.json"));
    CHECK(fs::exists(dir / "out" / "flow.csv"));

    {
        std::ofstream out(dir / "bad.json");
        out << R"({"kind": "flow"})";
    }
    CHECK(run_cli("flow --config " + (dir / "bad.json").string()) == 2);
    CHECK(run_cli("flow --config " + (dir / "missing.json").string()) == 4);

    // Subcommand and config kind must agree.
    CHECK(run_cli("boxdim --config " + (dir / "flow.json").string()) == 2);
    CHECK(run_cli("--list-presets") == 0);

    // Numerical failures exit with their own code.
    {
        std::ofstream out(dir / "invalid_point.json");
        out << R"({"kind": "flow", "model": {"kind": "sphere", "dim": 2},
                   "phase_point": {"x": [1, 0, 0], "xi": [1, 0, 0]},
                   "params": {"t": 1.0}})";
    }
    CHECK(run_cli("flow --config " + (dir / "invalid_point.json").string()) == 3);
}

TEST_CASE("CLI reruns byte-reproduce CSV tables") {
    fs::path dir = temp_dir("cli_det");
    {
        std::ofstream out(dir / "rs.json");
        out << R"({
          "kind": "return-stats",
          "model": {"kind": "torus", "dim": 2},
          "H": {"kind": "torus_geodesic", "direction": [0, 1], "point": [0, 0]},
          "params": {"N": 25, "T": 2.5, "eps": 1e-2, "seed": 4}
        })";
    }
    REQUIRE(run_cli("return-stats --config " + (dir / "rs.json").string() + " --out " +
                    (dir / "a").string()) == 0);
    REQUIRE(run_cli("return-stats --config " + (dir / "rs.json").string() + " --out " +
                    (dir / "b").string()) == 0);
    CHECK(read_file(dir / "a" / "return_stats.csv") == read_file(dir / "b" / "return_stats.csv"));
    CHECK(read_file(dir / "a" / "report.json") == read_file(dir / "b" / "report.json"));
}
