// Command-line harness: runs identity-verification experiments from a config
// file and writes a fixed-schema CSV report.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "quatfrac/parallel.hpp"
#include "quatfrac/runner.hpp"

namespace runner = quatfrac::runner;
namespace par = quatfrac::par;

int main(int argc, char** argv) {
    CLI::App app{"numerical verification of quaternionic fractional integral identities"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    int jobs = 0;
    double tol_scale = 1.0;

    auto* cmd_run = app.add_subcommand("run", "run the experiments in a config file");
    cmd_run->add_option("config", config_path, "flat key=value config file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_run->add_option("--out", out_dir, "directory for the CSV report (default: .)");
    cmd_run->add_option("--jobs", jobs,
                        "worker threads (default: $VERIFY_JOBS, then hardware)");
    cmd_run->add_option("--tol-scale", tol_scale,
                        "scale factor applied to residual bounds (default: 1)");

    auto* cmd_list = app.add_subcommand("list", "print the identity catalogue");

    CLI11_PARSE(app, argc, argv);

    if (cmd_list->parsed()) {
        std::cout << runner::identity_catalogue();
        return 0;
    }

    if (jobs <= 0) {
        if (const char* env = std::getenv("VERIFY_JOBS")) {
            char* end = nullptr;
            const long v = std::strtol(env, &end, 10);
            if (end && *end == '\0' && v > 0) jobs = static_cast<int>(v);
        }
    }
    if (jobs > 0) par::set_max_threads(jobs);

    runner::Config cfg;
    try {
        cfg = runner::load_config(config_path);
    } catch (const runner::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    const runner::RunReport rep = runner::run(cfg, tol_scale);

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    const auto csv_path =
        std::filesystem::path(out_dir) /
        (std::filesystem::path(config_path).stem().string() + ".csv");
    {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) {
            std::cerr << "cannot write report: " << csv_path.string() << '\n';
            return 2;
        }
        out << rep.csv;
    }

    for (const auto& line : rep.summary) std::cout << line << '\n';
    std::cout << "report: " << csv_path.string() << '\n';
    return rep.all_pass ? 0 : 1;
}
