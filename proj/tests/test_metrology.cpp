#include <doctest.h>

#include <cmath>
#include <vector>

#include "jtprobe/metrology.hpp"

using namespace jt;

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

ModelParams fig_params(double lambda, double phi_khz = 1100.0, int cutoff = 4,
                       double delta_khz = 0.0) {
    ModelParams p;
    p.g_x = p.g_y = kTwoPi * 5.0;
    p.phi = kTwoPi * phi_khz;
    p.delta = kTwoPi * delta_khz;
    p.omega_x = p.omega_y = 8.0 * p.g_x * p.g_y / (lambda * lambda * p.phi);
    p.space = HilbertSpace(cutoff, cutoff);
    return p;
}

QuantumState signal_state(const HilbertSpace& sp) {
    Eigen::VectorXcd mode(2);
    mode << 1.0 / std::sqrt(2.0), Complex(0.0, 1.0 / std::sqrt(2.0));
    return QuantumState::product(sp, Eigen::Vector2cd(1.0, 0.0), mode, mode);
}

}  // namespace

TEST_CASE("signal_x basics") {
    ModelParams p = fig_params(0.93);
    DerivedParams d = derived(p);
    CHECK(signal_x(p, 0.0, 1) == doctest::Approx(0.0));
    const double t_quarter = M_PI / (2.0 * p.omega_x * d.nu1);
    CHECK(signal_x(p, t_quarter, 1) == doctest::Approx(2.7206).epsilon(2e-4));

    // peak amplitude 1/nu1 grows with lambda
    double prev = 0.0;
    for (double lam : {0.9, 0.93, 0.95}) {
        ModelParams q = fig_params(lam);
        DerivedParams dq = derived(q);
        const double peak = signal_x(q, M_PI / (2.0 * q.omega_x * dq.nu1), 1);
        CHECK(peak > prev);
        prev = peak;
    }
}

TEST_CASE("signal_x rejects supercritical couplings") {
    CHECK_THROWS_AS(signal_x(fig_params(1.001), 0.1, 1), SupercriticalError);
    ModelParams p = fig_params(0.999, 1100.0, 4, 11.0);  // lambda_plus > 1 at order 2
    CHECK_THROWS_AS(signal_x(p, 0.1, 2), SupercriticalError);
    CHECK_NOTHROW(signal_x(p, 0.1, 1));
}

TEST_CASE("variance_x at t = 0 equals the direct initial-state variance") {
    ModelParams p = fig_params(0.93);
    CHECK(variance_x(p, 0.0) == doctest::Approx(2.0).epsilon(1e-14));

    // direct computation in the truncated space
    HilbertSpace sp(4, 4);
    QuantumState psi = signal_state(sp);
    Eigen::MatrixXcd ax = destroy(4);
    Operator x = embed(Eigen::MatrixXcd::Identity(2, 2), (ax + ax.adjoint()).eval(),
                       Eigen::MatrixXcd::Identity(4, 4), sp);
    const double mean = real_expectation(psi, x);
    const double second = real_expectation(psi, x * x);
    CHECK(second - mean * mean == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("printed variance form equals the normal-mode assembly at epsilon = 0") {
    for (double lam : {0.3, 0.8, 0.93}) {
        ModelParams p = fig_params(lam);
        for (double frac : {0.1, 0.4, 0.9, 1.7}) {
            DerivedParams d = derived(p);
            const double t = frac * M_PI / (p.omega_x * d.nu1);
            CHECK(variance_x(p, t) ==
                  doctest::Approx(variance_x_printed(p, t)).epsilon(1e-12));
        }
    }
}

TEST_CASE("variance recurrence at the commensurate time") {
    // nu2/nu1 = 2 at lambda^2 = 3/5; both sin^2 terms share period pi/(omega nu1)
    ModelParams p = fig_params(std::sqrt(0.6));
    DerivedParams d = derived(p);
    CHECK(d.nu2 / d.nu1 == doctest::Approx(2.0).epsilon(1e-12));
    const double period = M_PI / (p.omega_x * d.nu1);
    for (double t : {0.03, 0.11, 0.27})
        CHECK(variance_x(p, t + period) == doctest::Approx(variance_x(p, t)).epsilon(1e-10));
}

TEST_CASE("variance matches the exact simulation within 5 percent") {
    ModelParams p = fig_params(0.8, 400.0, 16);
    DerivedParams d = derived(p);
    TimeGrid grid;
    grid.t_end = kTwoPi / (p.omega_x * d.nu1);
    grid.dt = p.drive_period() / 64.0;
    grid.sample_every = std::max<long>(1, grid.steps() / 100);
    TrajectoryRecord rec =
        evolve_pure(signal_state(p.space), p, grid, Generator::ExactTotal);
    for (const auto& s : rec.samples) {
        const double dx_exact = std::sqrt(std::max(0.0, s.var_x));
        const double dx_closed = std::sqrt(variance_x(p, s.t));
        CHECK(std::abs(dx_exact - dx_closed) < 0.05 * dx_closed);
    }
}

TEST_CASE("fidelity susceptibility basics") {
    ModelParams p = fig_params(0.9);
    CHECK(fidelity_susceptibility(p, 0.0, SusceptWrt::Omega, SusceptMethod::ClosedForm) ==
          doctest::Approx(0.0));

    // sensitivity peak grows toward the critical coupling
    double prev = 0.0;
    for (double lam : {0.9, 0.93, 0.95}) {
        ModelParams q = fig_params(lam);
        DerivedParams dq = derived(q);
        const double t_star = M_PI / (q.omega_x * dq.nu1);
        double peak = 0.0;
        for (int k = 1; k <= 200; ++k) {
            const double t = 1.1 * t_star * k / 200.0;
            peak = std::max(peak, std::abs(fidelity_susceptibility(
                                      q, t, SusceptWrt::Omega, SusceptMethod::ClosedForm)));
        }
        CHECK(peak > prev);
        prev = peak;
    }
}

TEST_CASE("fidelity susceptibility: closed form vs finite difference") {
    ModelParams p = fig_params(0.9, 1100.0, 28);
    DerivedParams d = derived(p);
    const double t = 0.5 * M_PI / (p.omega_x * d.nu1);
    const double closed =
        fidelity_susceptibility(p, t, SusceptWrt::Omega, SusceptMethod::ClosedForm);
    const double fd =
        fidelity_susceptibility(p, t, SusceptWrt::Omega, SusceptMethod::FiniteDifference);
    CHECK(std::abs(fd - closed) < 1e-4 * std::abs(closed));
}

TEST_CASE("finite difference underflow is reported") {
    ModelParams p = fig_params(0.9);  // epsilon = 0: relative step underflows
    CHECK_THROWS_AS(fidelity_susceptibility(p, 0.1, SusceptWrt::Epsilon,
                                            SusceptMethod::FiniteDifference),
                    NumericalError);
}

TEST_CASE("fit_power_law recovers exact power laws") {
    std::vector<double> x, y;
    for (int i = 1; i <= 8; ++i) {
        x.push_back(0.01 * i);
        y.push_back(3.7 * std::pow(0.01 * i, 1.5));
    }
    ScalingFit fit = fit_power_law(x, y);
    CHECK(fit.exponent == doctest::Approx(1.5).epsilon(1e-10));
    CHECK(fit.prefactor == doctest::Approx(3.7).epsilon(1e-9));
    CHECK(fit.r_squared == doctest::Approx(1.0));
    CHECK(fit.conclusive);
}

TEST_CASE("uncertainty scaling: frequency estimation exponent 3/2") {
    ModelParams base = fig_params(0.9);
    std::vector<double> grid;
    for (int i = 0; i < 10; ++i) grid.push_back(0.9 + 0.09 * i / 9.0);
    ScalingFit fit = uncertainty_scaling(base, ScalingKind::Omega, grid);
    CHECK(fit.conclusive);
    CHECK(std::abs(fit.exponent - 1.5) < 0.1);

    // prefactor within a factor 2 of 2 sqrt(10) omega / pi at mid-grid
    ModelParams mid = fig_params(0.945);
    const double paper_prefactor = 2.0 * std::sqrt(10.0) * mid.omega_x / M_PI;
    CHECK(fit.prefactor > 0.5 * paper_prefactor);
    CHECK(fit.prefactor < 2.0 * paper_prefactor);
}

TEST_CASE("uncertainty scaling: epsilon at delta = 0 reduces to the omega exponent") {
    ModelParams base = fig_params(0.9);
    std::vector<double> grid;
    for (int i = 0; i < 10; ++i) grid.push_back(0.9 + 0.09 * i / 9.0);
    ScalingFit fit = uncertainty_scaling(base, ScalingKind::Epsilon, grid);
    CHECK(fit.conclusive);
    CHECK(std::abs(fit.exponent - 1.5) < 0.1);
}

TEST_CASE("uncertainty scaling: force estimation exponent 1/2") {
    ModelParams base;
    base.omega_x = base.omega_y = kTwoPi;
    base.gamma_x = base.gamma_y = 0.5 * base.omega_x;
    base.phi = kTwoPi * 1100.0;
    base.force = base.omega_x;
    base.g_x = base.g_y = 1.0;
    base.space = HilbertSpace(2, 2);
    const double lc = std::sqrt(1.25);
    std::vector<double> grid;
    for (int i = 0; i < 10; ++i) grid.push_back(lc * (0.9 + 0.095 * i / 9.0));
    ScalingFit fit = uncertainty_scaling(base, ScalingKind::Force, grid);
    CHECK(fit.conclusive);
    CHECK(std::abs(fit.exponent - 0.5) < 0.05);
    // prefactor sqrt(2) lambda_c^{3/2}
    CHECK(fit.prefactor ==
          doctest::Approx(std::sqrt(2.0) * std::pow(lc, 1.5)).epsilon(0.2));
}

TEST_CASE("uncertainty scaling input validation") {
    ModelParams base = fig_params(0.9);
    std::vector<double> tiny = {0.9, 0.95};
    CHECK_THROWS_AS(uncertainty_scaling(base, ScalingKind::Omega, tiny),
                    std::invalid_argument);
}
