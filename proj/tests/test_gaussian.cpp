#include <doctest.h>

#include <cmath>
#include <random>

#include "jtprobe/dynamics.hpp"
#include "jtprobe/gaussian.hpp"

using namespace jt;
using Eigen::Matrix4d;
using Eigen::MatrixXcd;
using Eigen::Vector4d;
using Eigen::VectorXcd;

namespace {

ModelParams gauss_params(double lam_rel, double gamma_tilde, double f_tilde,
                         double epsilon = 0.0, int cutoff = 10) {
    ModelParams p;
    p.omega_x = p.omega_y = 2.0;
    p.phi = 900.0;
    p.delta = epsilon * p.phi;
    p.gamma_x = p.gamma_y = gamma_tilde * p.omega_x;
    p.force = f_tilde * p.omega_x;
    const double lam = lam_rel * std::sqrt(1.0 + gamma_tilde * gamma_tilde);
    p.g_x = p.g_y = std::sqrt(lam * lam * p.omega_x * p.phi / 8.0);
    p.space = HilbertSpace(cutoff, cutoff);
    return p;
}

MatrixXcd identity_n(int n) { return MatrixXcd::Identity(n, n); }

}  // namespace

TEST_CASE("vacuum saturates the uncertainty bound") {
    MomentState v = MomentState::vacuum();
    CHECK(v.uncertainty_margin() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("moment_rhs: vacuum is a fixed point without drive") {
    for (double gt : {0.0, 0.7, 2.5}) {
        ModelParams p = gauss_params(0.0, gt, 0.0);
        MomentDerivative der = moment_rhs(MomentState::vacuum(), p);
        CHECK(der.d_dot.cwiseAbs().maxCoeff() < 1e-13);
        CHECK(der.v_dot.cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("moment_rhs: decoupled forced mode is a damped oscillator") {
    ModelParams p = gauss_params(0.0, 0.4, 1.0);
    MomentState m;
    m.d << 0.3, -0.2, 0.0, 0.0;
    MomentDerivative der = moment_rhs(m, p);
    // x' = p - gamma_tilde x ; p' = -x - gamma_tilde p - f_tilde
    CHECK(der.d_dot(0) == doctest::Approx(-0.2 - 0.4 * 0.3).epsilon(1e-12));
    CHECK(der.d_dot(1) == doctest::Approx(-0.3 + 0.4 * 0.2 - 1.0).epsilon(1e-12));
    CHECK(der.d_dot(2) == doctest::Approx(0.0));
    CHECK(der.d_dot(3) == doctest::Approx(0.0));
}

TEST_CASE("moment_rhs agrees with finite differences of the density evolution") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int round = 0; round < 3; ++round) {
        ModelParams p = gauss_params(0.35 + 0.2 * u(rng), 0.6 + 0.3 * u(rng),
                                     0.8 * u(rng), 3e-4 * (1.0 + u(rng)), 12);
        p.gamma_dephase = 0.2 * std::abs(u(rng));
        const auto& sp = p.space;

        VectorXcd psi = VectorXcd::Zero(sp.dim());
        for (int jx = 0; jx < sp.n_x; ++jx)
            for (int jy = 0; jy < sp.n_y; ++jy)
                psi(sp.index(0, jx, jy)) = std::pow(0.25, jx + jy) * Complex(u(rng), u(rng));
        QuantumState rho0 = QuantumState::pure(sp, psi).to_density();
        MomentState m0 = moments_from_state(rho0);

        const double h_tau = 1e-3;
        const double h = h_tau / p.omega_x;
        auto moments_at = [&](double t_end) {
            TimeGrid g{0.0, t_end, t_end / 4.0, 1000000};
            return moments_from_state(
                evolve_density(rho0, p, g, Generator::Effective2).final_state);
        };
        // central difference around tau = h (evolve_moments starts at 0)
        MomentState m2 = moments_at(2.0 * h);
        MomentDerivative fd;
        fd.d_dot = (m2.d - m0.d) / (2.0 * h_tau);
        fd.v_dot = (m2.v - m0.v) / (2.0 * h_tau);

        // compare with the analytic derivative at the midpoint state
        MomentState mid = moments_at(h);
        MomentDerivative an = moment_rhs(mid, p);
        CHECK((fd.d_dot - an.d_dot).cwiseAbs().maxCoeff() < 1e-6);
        CHECK((fd.v_dot - an.v_dot).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("steady first moments") {
    SUBCASE("zero force, zero displacement") {
        ModelParams p = gauss_params(0.4, 0.8, 0.0);
        CHECK(steady_first_moments(p).cwiseAbs().maxCoeff() < 1e-14);
    }
    SUBCASE("free displaced oscillator") {
        ModelParams p = gauss_params(0.0, 0.0, 1.0);
        Vector4d d = steady_first_moments(p);
        CHECK(d(0) == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(std::abs(d(1)) < 1e-12);
        CHECK(std::abs(d(2)) < 1e-12);
        CHECK(std::abs(d(3)) < 1e-12);
    }
    SUBCASE("lambda = 0.5 exact rationals") {
        ModelParams p = gauss_params(0.5, 0.0, 1.0);
        Vector4d d = steady_first_moments(p);
        CHECK(d(0) == doctest::Approx(-16.0 / 15.0).epsilon(1e-12));
        CHECK(d(2) == doctest::Approx(-4.0 / 15.0).epsilon(1e-12));
    }
    SUBCASE("closed form equals the linear solve, epsilon included") {
        std::mt19937 rng(3);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int round = 0; round < 5; ++round) {
            ModelParams p = gauss_params(0.2 + 0.7 * u(rng), 2.0 * u(rng),
                                         2.0 * u(rng) - 1.0, 1e-3 * u(rng));
            Vector4d a = steady_first_moments(p);
            Vector4d b = steady_first_moments_closed(p);
            CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("steady covariance closed form") {
    SUBCASE("lambda = 0 is the vacuum") {
        ModelParams p = gauss_params(0.0, 0.5, 0.0);
        MomentState m = steady_covariance(p, SteadyMethod::ClosedForm);
        CHECK((m.v - Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("undamped lambda = 0.5 rationals") {
        ModelParams p = gauss_params(0.5, 0.0, 0.0);
        MomentState m = steady_covariance(p, SteadyMethod::ClosedForm);
        CHECK(m.v(0, 0) == doctest::Approx(1.9375 / 1.875).epsilon(1e-12));
        CHECK(m.v(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
        // all gamma-prefactored entries vanish
        CHECK(std::abs(m.v(0, 1)) < 1e-14);
        CHECK(std::abs(m.v(0, 3)) < 1e-14);
        CHECK(std::abs(m.v(1, 2)) < 1e-14);
    }
    SUBCASE("linear solve equals closed form") {
        for (double gt : {0.5, 2.5}) {
            for (double rel : {0.1, 0.4, 0.7, 0.9}) {
                ModelParams p = gauss_params(rel, gt, 0.6);
                MomentState a = steady_covariance(p, SteadyMethod::ClosedForm);
                MomentState b = steady_covariance(p, SteadyMethod::LinearSolve);
                CHECK((a.v - b.v).cwiseAbs().maxCoeff() < 1e-8);
            }
        }
    }
    SUBCASE("undamped linear solve is the regularized limit") {
        ModelParams p = gauss_params(0.5, 0.0, 0.0);
        MomentState a = steady_covariance(p, SteadyMethod::ClosedForm);
        MomentState b = steady_covariance(p, SteadyMethod::LinearSolve);
        CHECK((a.v - b.v).cwiseAbs().maxCoeff() < 1e-5);
    }
    SUBCASE("criticality guard") {
        CHECK_THROWS_AS(steady_covariance(gauss_params(1.01, 0.5, 0.0),
                                          SteadyMethod::LinearSolve),
                        CriticalityError);
        CHECK_THROWS_AS(steady_covariance(gauss_params(0.9995, 0.5, 0.0),
                                          SteadyMethod::ClosedForm),
                        CriticalityError);
    }
    SUBCASE("epsilon != 0 rejected by the closed form, served by the solve") {
        ModelParams p = gauss_params(0.5, 0.5, 0.0, 1e-3);
        CHECK_THROWS_AS(steady_covariance(p, SteadyMethod::ClosedForm),
                        std::invalid_argument);
        MomentState m = steady_covariance(p, SteadyMethod::LinearSolve);
        CHECK(m.v(0, 0) > 1.0);
    }
}

TEST_CASE("steady state uncertainty bound") {
    for (double gt : {0.5, 2.5})
        for (double rel : {0.0, 0.3, 0.6, 0.8, 0.95}) {
            ModelParams p = gauss_params(rel, gt, 1.27);
            MomentState m = steady_covariance(p, SteadyMethod::LinearSolve);
            CHECK(m.uncertainty_margin() > -1e-8);
        }
}

TEST_CASE("steady phonons") {
    SUBCASE("coherent displacement") {
        ModelParams p = gauss_params(0.0, 0.0, 2.0);
        auto [nx, ny] = steady_phonons(p);
        CHECK(nx == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(ny == doctest::Approx(0.0).epsilon(1e-10));
    }
    SUBCASE("no force, no coupling") {
        ModelParams p = gauss_params(0.0, 0.7, 0.0);
        auto [nx, ny] = steady_phonons(p);
        CHECK(nx == doctest::Approx(0.0));
        CHECK(ny == doctest::Approx(0.0));
    }
    SUBCASE("reconstruction identity holds at a generic point") {
        ModelParams p = gauss_params(0.6, 1.2, 1.27);
        auto [nx, ny] = steady_phonons(p);  // internal tripwire compares routes
        SteadyState s = steady_state(p, SteadyMethod::LinearSolve);
        CHECK(s.n_x == doctest::Approx(nx).epsilon(1e-8));
        CHECK(s.n_y == doctest::Approx(ny).epsilon(1e-8));
    }
}

TEST_CASE("QFI for force estimation") {
    SUBCASE("free undamped probe") {
        ModelParams p = gauss_params(0.0, 0.0, 1.0);
        CHECK(qfi_force(p, QfiMethod::ClosedForm) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(qfi_force(p, QfiMethod::GaussianGeneral) ==
              doctest::Approx(1.0).epsilon(1e-6));
    }
    SUBCASE("lambda = 0 with damping gives 1/lambda_c^2") {
        for (double gt : {0.5, 2.5}) {
            ModelParams p = gauss_params(0.0, gt, 1.0);
            CHECK(qfi_force(p, QfiMethod::ClosedForm) ==
                  doctest::Approx(1.0 / (1.0 + gt * gt)).epsilon(1e-12));
        }
    }
    SUBCASE("route equivalence") {
        for (double gt : {0.5, 2.5})
            for (double rel : {0.2, 0.5, 0.8, 0.95}) {
                ModelParams p = gauss_params(rel, gt, 1.0);
                const double a = qfi_force(p, QfiMethod::ClosedForm);
                const double b = qfi_force(p, QfiMethod::GaussianGeneral);
                CHECK(std::abs(a - b) < 1e-6 * std::abs(a));
            }
    }
    SUBCASE("divergence rate near criticality") {
        const double gt = 0.5;
        const double lc = std::sqrt(1.0 + gt * gt);
        for (double rel : {0.95, 0.98, 0.995}) {
            ModelParams p = gauss_params(rel, gt, 1.0);
            const double f = qfi_force(p, QfiMethod::ClosedForm);
            const double predicted = 1.0 / (2.0 * lc * lc * lc * (lc - rel * lc));
            CHECK(std::abs(f * (lc - rel * lc) - 1.0 / (2.0 * lc * lc * lc)) <
                  0.1 / (2.0 * lc * lc * lc));
            (void)predicted;
        }
    }
}

TEST_CASE("evolve_moments") {
    SUBCASE("relaxes to the linear-solve fixed point") {
        ModelParams p = gauss_params(0.55, 0.8, 1.0);
        TimeGrid grid{0.0, 40.0 / p.gamma_x, 0.005 / p.omega_x, 1000000};
        MomentTrajectory traj = evolve_moments(MomentState::vacuum(), p, grid);
        REQUIRE(!traj.diverged);
        MomentState expect = steady_covariance(p, SteadyMethod::LinearSolve);
        CHECK((traj.states.back().d - expect.d).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((traj.states.back().v - expect.v).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("pure damping of an isotropic covariance") {
        ModelParams p = gauss_params(0.0, 0.5, 0.0);
        MomentState m0;
        m0.v = 3.0 * Matrix4d::Identity();
        const double tau_end = 2.0;
        TimeGrid grid{0.0, tau_end / p.omega_x, 0.002 / p.omega_x, 1000000};
        MomentTrajectory traj = evolve_moments(m0, p, grid);
        const double gt = 0.5;
        Matrix4d expect =
            Matrix4d::Identity() * (1.0 + 2.0 * std::exp(-2.0 * gt * tau_end));
        CHECK((traj.states.back().v - expect).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("supercritical coupling flags divergence") {
        ModelParams p = gauss_params(1.02, 0.5, 0.5);
        TimeGrid grid{0.0, 400.0 / p.omega_x, 0.01 / p.omega_x, 1000000};
        MomentTrajectory traj = evolve_moments(MomentState::vacuum(), p, grid);
        CHECK(traj.diverged);
        CHECK(traj.lambda > traj.lambda_c);
    }
}

TEST_CASE("moments_from_state agrees with dense operator expectations") {
    // enveloped state: with negligible top-level population the truncated
    // quadrature products and the ladder assembly coincide
    HilbertSpace sp(8, 7);
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    VectorXcd psi = VectorXcd::Zero(sp.dim());
    for (int s = 0; s < 2; ++s)
        for (int jx = 0; jx < sp.n_x; ++jx)
            for (int jy = 0; jy < sp.n_y; ++jy)
                psi(sp.index(s, jx, jy)) =
                    std::pow(0.25, jx + jy) * Complex(u(rng), u(rng));
    QuantumState pure = QuantumState::pure(sp, psi);

    MatrixXcd ax = destroy(sp.n_x), ay = destroy(sp.n_y);
    MatrixXcd i2 = identity_n(2), ix = identity_n(sp.n_x), iy = identity_n(sp.n_y);
    std::vector<Operator> q = {
        embed(i2, (ax + ax.adjoint()).eval(), iy, sp),
        embed(i2, (Complex(0, 1) * (ax.adjoint() - ax)).eval(), iy, sp),
        embed(i2, ix, (ay + ay.adjoint()).eval(), sp),
        embed(i2, ix, (Complex(0, 1) * (ay.adjoint() - ay)).eval(), sp)};

    for (const QuantumState& st : {pure, pure.to_density()}) {
        MomentState m = moments_from_state(st);
        for (int k = 0; k < 4; ++k) {
            CHECK(m.d(k) == doctest::Approx(real_expectation(st, q[k])).epsilon(1e-8));
            for (int l = 0; l < 4; ++l) {
                Operator sym = 0.5 * (q[k] * q[l] + q[l] * q[k]);
                const double vkl = real_expectation(st, sym) - m.d(k) * m.d(l);
                CHECK(std::abs(m.v(k, l) - vkl) < 1e-6);
            }
        }
    }
}
