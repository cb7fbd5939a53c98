#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "jtprobe/hilbert.hpp"
#include "jtprobe/operators.hpp"

namespace jt {

/// Physical parameters. All frequencies and rates are angular, in rad/ms.
/// The CLI layer converts from ordinary frequencies nu = omega/2pi in kHz
/// (1 kHz of nu equals 2pi rad/ms of omega).
struct ModelParams {
    double omega_x = 0.0;        ///< boson frequency, mode x
    double omega_y = 0.0;        ///< boson frequency, mode y
    double delta = 0.0;          ///< spin transition frequency
    double g_x = 0.0;            ///< spin-boson coupling, mode x
    double g_y = 0.0;            ///< spin-boson coupling, mode y
    double phi = 0.0;            ///< drive frequency
    double gamma_x = 0.0;        ///< boson loss rate, mode x
    double gamma_y = 0.0;        ///< boson loss rate, mode y
    double gamma_dephase = 0.0;  ///< spin dephasing rate
    double force = 0.0;          ///< displacement magnitude f along x
    HilbertSpace space;

    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;

    /// Advisory only: the closed forms assume phi >> g, omega, delta, gamma.
    /// Returns human-readable warnings when the margin is below 10x.
    std::vector<std::string> advisory_warnings() const;

    double drive_period() const { return 2.0 * M_PI / phi; }
};

/// Dimensionless quantities entering all closed forms. Requires
/// omega_x == omega_y and gamma_x == gamma_y (the paper sets both equal).
struct DerivedParams {
    double lambda = 0.0;          ///< sqrt(8 g_x g_y / (omega phi))
    double epsilon = 0.0;         ///< delta / phi
    double gamma_tilde = 0.0;     ///< gamma / omega
    double f_tilde = 0.0;         ///< f / omega
    double lambda_c = 1.0;        ///< sqrt(1 + gamma_tilde^2)
    double lambda2_plus_c = 1.0;  ///< lambda^2_{+,c} = (1+gt^2)/(1+eps)
    double lambda2_minus_c = 1.0; ///< lambda^2_{-,c} = (1+gt^2)/(1-eps)
    double nu1 = 1.0;             ///< sqrt(1 - lambda^2); NaN when lambda >= 1
    double nu2 = 1.0;             ///< sqrt(1 + lambda^2)
    double t_drive = 0.0;         ///< 2pi/phi in ms
    bool nu1_real = true;

    /// nu1^2 + nu2^2 = 2 at epsilon = 0.
};

DerivedParams derived(const ModelParams& p);

enum class HamiltonianPart { H0, Drive, Force, Total };

/// H0 = w_x n_x + w_y n_y + (delta/2) sigma_z
/// drive = 2 g_x cos(phi t) sigma_x (a_x^dag + a_x)
///       + 2 g_y sin(phi t) sigma_y (a_y^dag + a_y)
/// force = (f/2)(a_x^dag + a_x)
Operator hamiltonian(const ModelParams& p, double t, HamiltonianPart part);

/// v such that e^{i phi t} v + e^{-i phi t} v^dag reproduces the drive:
/// v = g_x sigma_x (a_x^dag + a_x) - i g_y sigma_y (a_y^dag + a_y).
Operator fourier_v(const ModelParams& p);

/// Jump operators with rates folded in: sqrt(gamma_x) a_x, sqrt(gamma_y) a_y,
/// sqrt(Gamma/2) sigma_z. Zero-rate channels are omitted.
std::vector<Operator> jump_operators(const ModelParams& p);

/// Closed-form effective Hamiltonian.
/// order 1: H0 - (4 g_x g_y / phi) sigma_z (a_x^dag+a_x)(a_y^dag+a_y)
/// order 2: adds -(2 g_b^2 delta / phi^2) sigma_z (a_b^dag+a_b)^2 per mode.
/// Constant energy shifts are dropped.
Operator effective_hamiltonian(const ModelParams& p, int order);

/// Same generator built from commutators: H0 + (1/phi)[v, v^dag] at order 1,
/// minus (1/2phi^2){[[H0,v],v^dag] + [[H0,v^dag],v]} at order 2. The exact
/// second-order identity component -4(g_x^2 w_x + g_y^2 w_y) is removed so
/// both routes share the no-constant convention. Agrees with the closed form
/// on the interior Fock block; the top levels are truncation-corrupted.
Operator effective_hamiltonian_commutator(const ModelParams& p, int order);

/// Normal modes of the quadratic effective Hamiltonian, spin projected
/// to |up>. nu are the dimensionless eigenfrequencies, b the orthonormal
/// eigenvectors (columns), theta the mixing angles (1/2) ln nu.
struct NormalModes {
    std::array<double, 2> nu{};
    Eigen::Matrix2d b;  ///< column alpha is b^(alpha)
    std::array<double, 2> theta{};
};

NormalModes normal_modes(const ModelParams& p, int order);

/// First-moment drift in dimensionless time tau = omega t for the ladder
/// vector h = (a_x, a_x^dag, a_y, a_y^dag): d<h>/dtau = g0 <h> + a.
struct DriftSystem {
    Eigen::Matrix4cd g0;
    Eigen::Vector4cd a;
};

DriftSystem drift_matrix_g0(const ModelParams& p);

}  // namespace jt
