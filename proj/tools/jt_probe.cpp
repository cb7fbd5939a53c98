#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "jtprobe/experiments.hpp"

namespace {

int run_command(const std::string& experiment, const std::vector<std::string>& sets,
                const std::string& config_file, std::string out_path, bool converge) {
    jt::RunConfig cfg;
    cfg.experiment = experiment;
    if (!config_file.empty()) cfg.load_file(config_file);
    for (const auto& s : sets) cfg.set(s);
    if (out_path.empty()) out_path = experiment + (converge ? "_converge.csv" : ".csv");
    cfg.out_path = out_path;

    jt::ScanResult result =
        converge ? jt::convergence_report(cfg) : jt::run_experiment(cfg);
    std::printf("wrote %s (%zu rows)\n", out_path.c_str(), result.rows.size());
    if (!result.converged) {
        std::fprintf(stderr, "warning: run flagged non-converged (see metadata)\n");
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"periodically driven dissipative Jahn-Teller probe"};
    app.require_subcommand(1);

    std::string experiment, config_file, out_path;
    std::vector<std::string> sets;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("experiment", experiment, "experiment id (see 'list')")->required();
        cmd->add_option("--set", sets, "override as key=value (repeatable)");
        cmd->add_option("--config", config_file, "flat key=value config file");
        cmd->add_option("--out", out_path, "output CSV path");
    };
    CLI::App* run = app.add_subcommand("run", "run an experiment and write CSV");
    add_common(run);
    CLI::App* converge = app.add_subcommand(
        "converge", "sweep cutoffs and dt halvings for a 'custom' run");
    add_common(converge);
    CLI::App* list = app.add_subcommand("list", "list experiments and their defaults");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const auto& info : jt::list_experiments()) {
                std::printf("%-16s %s\n", info.name.c_str(), info.description.c_str());
                for (const auto& [k, v] : jt::default_parameters(info.name))
                    std::printf("    %s = %s\n", k.c_str(), v.c_str());
            }
            return 0;
        }
        return run_command(experiment, sets, config_file, out_path, converge->parsed());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
