#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "conormal_lab/conormal.hpp"

namespace clab::harness {

// Typed experiment description, parsed from a JSON config. `echo` holds the
// canonical re-serialization used for reproducibility checks.
struct ExperimentConfig {
    std::string kind;

    // model block
    std::string model = "torus";
    int dim = 2;
    std::string preset;  // "bolza"
    std::vector<std::array<double, 4>> generators;

    // H block
    std::string h_kind;
    std::vector<double> h_point;
    std::vector<double> h_center;
    double h_radius = 0.25;
    double h_psi0 = 1.0;
    double h_length = 1.0;
    std::vector<int> h_direction;
    std::string h_csv;  // point-cloud path for boxdim

    // numeric parameters
    std::uint64_t seed = 0;
    bool has_seed = false;
    std::size_t n = 0;
    double T = 0.0;
    double t = 0.0;
    double t0 = 0.05;
    double eps = 1e-3;
    std::vector<double> eps_ladder;
    std::vector<int> frequencies;
    int grid = 256;
    int side = 0;  // conormal side filter for sampling kinds (0 = both)
    bool use_normal = false;
    std::string suite;
    std::string symbol;  // named symbol preset for `defect`
    std::string out;     // output directory; the CLI --out flag overrides

    std::string echo;  // canonical JSON
};

ExperimentConfig parse_config(const std::string& json_text);  // throws ConfigInvalid
geometry::ManifoldModel build_model(const ExperimentConfig& cfg);
conormal::Submanifold build_submanifold(const ExperimentConfig& cfg,
                                        const geometry::ManifoldModel& model);

// Output of one experiment: a JSON report plus named CSV tables. Identical
// configs reproduce identical bytes.
struct RunReport {
    std::string json;
    std::map<std::string, std::string> csv_tables;
    double wall_seconds = 0.0;
};

RunReport run(const ExperimentConfig& cfg);

struct CriterionResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct SuiteResult {
    std::string suite;
    std::vector<CriterionResult> results;
    double wall_seconds = 0.0;

    bool all_passed() const {
        for (const auto& r : results)
            if (!r.passed) return false;
        return true;
    }
};

// Packaged verification experiments with pinned tolerances.
std::vector<std::string> registered_suites();
SuiteResult acceptance_suite(const std::string& name);  // throws UnknownSuite
std::string suite_ledger_json(const SuiteResult& result);

std::string list_presets();
const char* version();

// Deterministic float formatting shared by every CSV/JSON writer.
std::string format_double(double v);

// Sample-set serialization: one row per sample, (coords..., xi..., weight).
std::string samples_csv(const conormal::WeightedSampleSet& set);

}  // namespace clab::harness
