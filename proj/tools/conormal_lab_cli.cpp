#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "conormal_lab/harness.hpp"

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw clab::IoError("cannot open config file " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw clab::IoError("cannot write " + path.string());
    out << content;
}

int run_subcommand(const std::string& kind, const std::string& config_path,
                   const std::string& out_dir, bool has_seed, std::uint64_t seed) {
    clab::harness::ExperimentConfig cfg = clab::harness::parse_config(read_file(config_path));
    if (cfg.kind != kind)
        throw clab::ConfigInvalid("config kind \"" + cfg.kind +
                                  "\" does not match subcommand \"" + kind + "\"");
    if (has_seed) {
        cfg.seed = seed;
        cfg.has_seed = true;
    }
    clab::harness::RunReport report = clab::harness::run(cfg);

    std::string chosen = !out_dir.empty() ? out_dir : cfg.out;
    fs::path dir = chosen.empty() ? fs::path(".") : fs::path(chosen);
    fs::create_directories(dir);
    write_file(dir / "report.json", report.json + "\n");
    for (const auto& [name, csv] : report.csv_tables)
        write_file(dir / (name + ".csv"), csv);
    std::cout << report.json << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conormal-lab: geodesic-flow, conormal-measure and eigenfunction-average "
                 "experiments on exact model geometries"};
    app.set_version_flag("--version", std::string(clab::harness::version()));

    bool list_presets = false;
    app.add_flag("--list-presets", list_presets, "print model/H presets and exit");

    const std::vector<std::string> kinds{"flow",          "return-stats", "splitting",
                                         "volgrowth",     "average-sweep", "defect",
                                         "bound-check",   "boxdim",        "acceptance"};
    struct SubArgs {
        std::string config;
        std::string out;
        std::uint64_t seed = 0;
        bool has_seed = false;
        CLI::App* cmd = nullptr;
    };
    std::map<std::string, SubArgs> args;
    for (const auto& kind : kinds) {
        auto& a = args[kind];
        a.cmd = app.add_subcommand(kind, "run a " + kind + " experiment");
        a.cmd->add_option("--config", a.config, "experiment config (JSON)")->required();
        a.cmd->add_option("--out", a.out, "output directory for report.json and CSV tables");
        a.cmd->add_option("--seed", a.seed, "override params.seed")
            ->each([&a](const std::string&) { a.has_seed = true; });
    }

    CLI11_PARSE(app, argc, argv);

    if (list_presets) {
        std::cout << clab::harness::list_presets();
        return 0;
    }

    try {
        for (const auto& kind : kinds) {
            const auto& a = args.at(kind);
            if (a.cmd->parsed())
                return run_subcommand(kind, a.config, a.out, a.has_seed, a.seed);
        }
        std::cerr << "no subcommand given; see --help\n";
        return 2;
    } catch (const clab::ConfigInvalid& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const clab::UnknownSuite& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const clab::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const clab::Error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    }
}
