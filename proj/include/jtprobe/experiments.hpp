#pragma once

#include <map>
#include <string>
#include <vector>

#include "jtprobe/scan.hpp"

namespace jt {

/// One experiment run: an experiment id plus key=value overrides in
/// CLI units (frequencies as nu = omega/2pi in kHz). Unknown keys are
/// rejected.
struct RunConfig {
    std::string experiment;
    std::map<std::string, std::string> overrides;
    std::string out_path;

    /// Parses "key=value" (as from --set or a config file line).
    void set(const std::string& assignment);
    /// Flat key=value text file; '#' starts a comment.
    void load_file(const std::string& path);
};

struct ExperimentInfo {
    std::string name;
    std::string description;
};

std::vector<ExperimentInfo> list_experiments();

/// Default parameter set of an experiment, in CLI units.
std::map<std::string, std::string> default_parameters(const std::string& experiment);

/// Runs the experiment and returns the table; writes CSV when
/// config.out_path is set. Throws std::invalid_argument on bad configs.
ScanResult run_experiment(const RunConfig& config);

/// Sweeps Fock cutoffs and dt halvings and reports per-observable
/// deviations between successive refinement levels.
ScanResult convergence_report(const RunConfig& config);

}  // namespace jt
