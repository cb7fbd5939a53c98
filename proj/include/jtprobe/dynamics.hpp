#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jtprobe/model.hpp"
#include "jtprobe/scan.hpp"

namespace jt {

struct TimeGrid {
    double t_start = 0.0;  ///< ms
    double t_end = 0.0;    ///< ms
    double dt = 0.0;       ///< step, ms
    int sample_every = 1;  ///< decimation for recorded samples

    /// drive_active: the time-dependent drive must be resolved,
    /// dt <= (2pi/phi)/32.
    void validate(bool drive_active, double phi) const;
    long steps() const;
};

/// Default grids per the integration policy: drive-resolved runs use
/// dt = T/64; effective-generator runs use dt = min(0.01/omega, 0.1/gamma).
TimeGrid default_grid(const ModelParams& p, bool drive_active, double t_end,
                      int target_samples = 1000);

enum class Generator { ExactTotal, Effective1, Effective2 };

struct TrajectorySample {
    double t = 0.0;
    double x = 0.0, p_x = 0.0, y = 0.0, p_y = 0.0;
    double var_x = 0.0, var_y = 0.0;
    double n_x = 0.0, n_y = 0.0;
    double sz = 0.0;
    double leak_x = 0.0, leak_y = 0.0;  ///< top Fock level population
    double norm_drift = 0.0;            ///< accumulated |1 - norm| (or trace)
    std::vector<double> extra;          ///< one value per extra observable
};

struct TrajectoryRecord {
    std::vector<TrajectorySample> samples;
    std::vector<std::string> extra_names;
    QuantumState final_state;
    bool converged = true;   ///< leakage and norm drift below 1e-6
    bool negativity_flagged = false;
    double max_leak_x = 0.0, max_leak_y = 0.0, max_norm_drift = 0.0;
    long renormalizations = 0;
};

struct NamedOperator {
    std::string name;
    Operator op;
};

/// Fixed-step RK4 on i d/dt psi = H(t) psi. Requires all dissipation
/// rates zero. NaN detection throws IntegrationFailure; leakage above
/// threshold only flags the record.
TrajectoryRecord evolve_pure(const QuantumState& psi0, const ModelParams& p,
                             const TimeGrid& grid, Generator gen,
                             const std::vector<NamedOperator>& extras = {});

/// Fixed-step RK4 on the Lindblad equation with all nonzero jump channels.
/// Trace is renormalized each step with the drift logged; drift beyond
/// 1e-4 throws IntegrationFailure. Negativity beyond -1e-6 in sampled
/// eigen-checks flags the record.
TrajectoryRecord evolve_density(const QuantumState& rho0, const ModelParams& p,
                                const TimeGrid& grid, Generator gen,
                                const std::vector<NamedOperator>& extras = {});

enum class KickDirection { Forward, Inverse };

/// First-order micromotion kick exp(+-G(t)) rho ~ rho +- G(t) rho with
/// G(t) rho = (1/phi) { [v^dag, rho] e^{-i phi t} - [v, rho] e^{+i phi t} }.
/// Trace-free and Hermiticity-preserving.
QuantumState micromotion_kick(const QuantumState& rho, const ModelParams& p,
                              double t, KickDirection direction);

/// <x(t*)> at t* = pi/(2 omega nu1) for each (phi, Gamma) pair, exact
/// Lindblad dynamics, lambda held fixed across the scan (omega per phi).
ScanResult dephasing_scan(const ModelParams& base, const std::vector<double>& phi_list,
                          const std::vector<double>& gamma_dephase_list,
                          int steps_per_period = 64);

}  // namespace jt
