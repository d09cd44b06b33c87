#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "parareal/run_io.hpp"

int main(int argc, char** argv) {
    CLI::App app{"parallel-in-time integration of separable Hamiltonian systems"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> report_dirs;
    std::optional<int> workers;
    std::optional<std::string> out_dir;
    std::optional<unsigned long long> seed;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config_path, "experiment config file")->required();
        cmd->add_option("--workers", workers, "worker threads for window propagations");
        cmd->add_option("--out", out_dir, "output directory (overrides run.output)");
        cmd->add_option("--seed", seed, "seed for random test-state generation");
    };

    CLI::App* run = app.add_subcommand("run", "run an experiment and write series, states and summary");
    add_common(run);
    CLI::App* ref = app.add_subcommand("reference", "build and cache the refined reference trajectory");
    add_common(ref);
    CLI::App* rep = app.add_subcommand("report", "join run summaries into a comparison table");
    rep->add_option("dirs", report_dirs, "run output directories")->required();

    CLI11_PARSE(app, argc, argv);

    parareal::CliOverrides overrides{workers, out_dir, seed};
    if (run->parsed()) return parareal::cmd_run(config_path, overrides, std::cerr);
    if (ref->parsed()) return parareal::cmd_reference(config_path, overrides, std::cerr);
    return parareal::cmd_report(report_dirs, std::cout);
}
