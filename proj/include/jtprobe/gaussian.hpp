#pragma once

#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "jtprobe/model.hpp"

namespace jt {

struct TimeGrid;  // dynamics.hpp

/// First moments d = <(x, p_x, y, p_y)> and symmetric covariance
/// V_kl = (1/2)<q_k q_l + q_l q_k> - d_k d_l in the x = a^dag + a
/// convention (vacuum: d = 0, V = I).
struct MomentState {
    Eigen::Vector4d d = Eigen::Vector4d::Zero();
    Eigen::Matrix4d v = Eigen::Matrix4d::Identity();

    static MomentState vacuum() { return {}; }

    /// Smallest eigenvalue of V + i Omega; >= -1e-8 for physical states.
    double uncertainty_margin() const;
};

struct MomentDerivative {
    Eigen::Vector4d d_dot = Eigen::Vector4d::Zero();
    Eigen::Matrix4d v_dot = Eigen::Matrix4d::Zero();
};

/// Quadrature-basis drift A, force vector b and diffusion D of the
/// effective generator, in dimensionless time tau = omega t:
/// d' = A d + b,  V' = A V + V A^T + D.
Eigen::Matrix4d quad_drift(const ModelParams& p);
Eigen::Vector4d quad_force(const ModelParams& p);
Eigen::Matrix4d quad_diffusion(const ModelParams& p);

MomentDerivative moment_rhs(const MomentState& m, const ModelParams& p);

/// Steady first moments by linear solve of G0 <h> + a = 0.
/// Throws CriticalityError when G0 is singular (at criticality).
Eigen::Vector4d steady_first_moments(const ModelParams& p);
/// Printed closed forms (Appendix-B style), for cross-checking.
Eigen::Vector4d steady_first_moments_closed(const ModelParams& p);

enum class SteadyMethod { ClosedForm, LinearSolve };

/// Full steady-state moments. ClosedForm is the epsilon = 0 listing and
/// refuses lambda > 0.999 lambda_c (guard band); LinearSolve solves the
/// Lyapunov equation A V + V A^T + D = 0 and is authoritative at
/// epsilon != 0.
MomentState steady_covariance(const ModelParams& p, SteadyMethod method);

/// Mean phonon numbers <n_x>, <n_y> in the steady state (closed form
/// in lambda, lambda_c, f_tilde).
std::pair<double, double> steady_phonons(const ModelParams& p);

/// <n_beta> = (V_xx + V_pp + d_x^2 + d_p^2 - 2)/4 per mode.
std::pair<double, double> phonons_from_moments(const MomentState& m);

struct SteadyState {
    MomentState moment;
    double n_x = 0.0;
    double n_y = 0.0;
    bool converged = true;
    SteadyMethod method = SteadyMethod::LinearSolve;
};

SteadyState steady_state(const ModelParams& p, SteadyMethod method);

enum class QfiMethod { ClosedForm, GaussianGeneral };

/// Quantum Fisher information for force estimation, with respect to the
/// dimensionless f_tilde = f/omega (F_Q(f) = F_Q(f_tilde)/omega^2).
/// GaussianGeneral evaluates (d d/d f_tilde)^T V^{-1} (d d/d f_tilde);
/// ClosedForm is the printed rational function of lambda, lambda_c.
double qfi_force(const ModelParams& p, QfiMethod method);

struct MomentTrajectory {
    std::vector<double> t;  ///< ms
    std::vector<MomentState> states;
    bool diverged = false;
    double lambda = 0.0;
    double lambda_c = 1.0;
};

/// RK4 on the moment equations (grid in ms; integration runs in tau).
/// Divergence (any |entry| > 1e12) stops the run and flags the record.
MomentTrajectory evolve_moments(const MomentState& m0, const ModelParams& p,
                                const TimeGrid& grid);

/// d and V measured from a quantum state (pure or density).
MomentState moments_from_state(const QuantumState& state);

}  // namespace jt
