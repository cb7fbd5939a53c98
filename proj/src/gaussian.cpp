#include "jtprobe/gaussian.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "jtprobe/dynamics.hpp"

namespace jt {

namespace {

Eigen::Matrix4d symplectic_form() {
    Eigen::Matrix4d omega = Eigen::Matrix4d::Zero();
    omega(0, 1) = 1.0;
    omega(1, 0) = -1.0;
    omega(2, 3) = 1.0;
    omega(3, 2) = -1.0;
    return omega;
}

// q = W h maps ladder moments h = (a_x, a_x^dag, a_y, a_y^dag) to
// quadratures q = (x, p_x, y, p_y).
Eigen::Matrix4cd ladder_to_quadrature() {
    const Complex i(0.0, 1.0);
    Eigen::Matrix4cd w = Eigen::Matrix4cd::Zero();
    w(0, 0) = 1.0; w(0, 1) = 1.0;
    w(1, 0) = -i;  w(1, 1) = i;
    w(2, 2) = 1.0; w(2, 3) = 1.0;
    w(3, 2) = -i;  w(3, 3) = i;
    return w;
}

void require_stable(const DerivedParams& d, const char* where) {
    const double lam2_threshold = d.lambda2_plus_c;
    if (d.lambda * d.lambda >= lam2_threshold)
        throw CriticalityError(std::string(where) +
                                   ": coupling at or beyond the critical point",
                               d.lambda, std::sqrt(lam2_threshold));
}

}  // namespace

double MomentState::uncertainty_margin() const {
    Eigen::Matrix4cd m = v.cast<Complex>() + Complex(0.0, 1.0) * symplectic_form().cast<Complex>();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

Eigen::Matrix4d quad_drift(const ModelParams& p) {
    DriftSystem sys = drift_matrix_g0(p);
    Eigen::Matrix4cd w = ladder_to_quadrature();
    Eigen::Matrix4cd a = w * sys.g0 * w.inverse();
    if (a.imag().cwiseAbs().maxCoeff() > 1e-12)
        throw NumericalError("quad_drift: drift not real in the quadrature basis");
    return a.real();
}

Eigen::Vector4d quad_force(const ModelParams& p) {
    DriftSystem sys = drift_matrix_g0(p);
    Eigen::Vector4cd b = ladder_to_quadrature() * sys.a;
    return b.real();
}

Eigen::Matrix4d quad_diffusion(const ModelParams& p) {
    DerivedParams d = derived(p);
    return 2.0 * d.gamma_tilde * Eigen::Matrix4d::Identity();
}

MomentDerivative moment_rhs(const MomentState& m, const ModelParams& p) {
    const Eigen::Matrix4d a = quad_drift(p);
    MomentDerivative out;
    out.d_dot = a * m.d + quad_force(p);
    out.v_dot = a * m.v + m.v * a.transpose() + quad_diffusion(p);
    return out;
}

Eigen::Vector4d steady_first_moments(const ModelParams& p) {
    DerivedParams d = derived(p);
    require_stable(d, "steady_first_moments");
    DriftSystem sys = drift_matrix_g0(p);
    Eigen::Vector4cd h = sys.g0.partialPivLu().solve(-sys.a);
    Eigen::Vector4cd q = ladder_to_quadrature() * h;
    if (q.imag().cwiseAbs().maxCoeff() > 1e-10)
        throw NumericalError("steady_first_moments: moments not real");
    return q.real();
}

Eigen::Vector4d steady_first_moments_closed(const ModelParams& p) {
    DerivedParams d = derived(p);
    require_stable(d, "steady_first_moments_closed");
    const double l2 = d.lambda * d.lambda;
    const double den =
        (1.0 - d.epsilon * d.epsilon) * (l2 + d.lambda2_minus_c) * (l2 - d.lambda2_plus_c);
    const double x = d.f_tilde * (1.0 + d.gamma_tilde * d.gamma_tilde - d.epsilon * l2) / den;
    const double y = d.f_tilde * l2 / den;
    Eigen::Vector4d out;
    out << x, d.gamma_tilde * x, y, d.gamma_tilde * y;
    return out;
}

MomentState steady_covariance(const ModelParams& p, SteadyMethod method) {
    DerivedParams d = derived(p);
    require_stable(d, "steady_covariance");
    MomentState m;
    m.d = steady_first_moments(p);

    if (method == SteadyMethod::ClosedForm) {
        if (std::abs(d.epsilon) > 1e-12)
            throw std::invalid_argument(
                "steady_covariance: the closed-form listing holds at epsilon = 0; "
                "use the linear solve for epsilon != 0");
        if (d.lambda > 0.999 * d.lambda_c)
            throw CriticalityError(
                "steady_covariance: closed form refused inside the guard band "
                "lambda > 0.999 lambda_c",
                d.lambda, d.lambda_c);
        const double l2 = d.lambda * d.lambda;
        const double l4 = l2 * l2;
        const double lc2 = d.lambda_c * d.lambda_c;
        const double lc4 = lc2 * lc2;
        const double den = 2.0 * (lc4 - l4);
        const double v11 = (2.0 * lc4 - l4) / den;
        const double v22 = (2.0 * lc4 + (lc2 - 3.0) * l4) / den;
        const double v12 = d.gamma_tilde * l4 / den;
        const double v13 = lc2 * l2 / den;
        const double v24 = (l4 * l2 - lc2 * l2) / den;
        const double v14 = d.gamma_tilde * lc2 * l2 / den;
        m.v << v11, v12, v13, v14,
               v12, v22, v14, v24,
               v13, v14, v11, v12,
               v14, v24, v12, v22;
        return m;
    }

    // Lyapunov solve A V + V A^T + D = 0 via the 16x16 Kronecker system.
    // The undamped limit is evaluated with an infinitesimal regularizing
    // loss; the solution is continuous in gamma there.
    ModelParams pr = p;
    if (pr.gamma_x == 0.0 && pr.gamma_y == 0.0) {
        const double reg = 1e-7 * pr.omega_x;
        pr.gamma_x = pr.gamma_y = reg;
    }
    const Eigen::Matrix4d a = quad_drift(pr);
    const Eigen::Matrix4d diff = quad_diffusion(pr);
    const Eigen::Matrix4d eye = Eigen::Matrix4d::Identity();
    Eigen::Matrix<double, 16, 16> kron;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            kron.block<4, 4>(4 * i, 4 * j) = eye(i, j) * a + a(i, j) * eye;
    Eigen::Matrix<double, 16, 1> rhs;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) rhs(4 * i + j) = -diff(i, j);
    Eigen::Matrix<double, 16, 1> sol = kron.partialPivLu().solve(rhs);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m.v(i, j) = sol(4 * i + j);
    m.v = 0.5 * (m.v + m.v.transpose().eval());
    return m;
}

std::pair<double, double> phonons_from_moments(const MomentState& m) {
    const double nx =
        (m.v(0, 0) + m.v(1, 1) + m.d(0) * m.d(0) + m.d(1) * m.d(1) - 2.0) / 4.0;
    const double ny =
        (m.v(2, 2) + m.v(3, 3) + m.d(2) * m.d(2) + m.d(3) * m.d(3) - 2.0) / 4.0;
    return {nx, ny};
}

std::pair<double, double> steady_phonons(const ModelParams& p) {
    DerivedParams d = derived(p);
    require_stable(d, "steady_phonons");
    const double l4 = std::pow(d.lambda, 4);
    const double lc2 = d.lambda_c * d.lambda_c;
    const double lc4 = lc2 * lc2;
    const double gap = lc4 - l4;
    const double ft2 = d.f_tilde * d.f_tilde;
    const double nx = (l4 * lc2 * gap + 2.0 * ft2 * lc2 * lc2 * lc2) / (8.0 * gap * gap);
    const double ny = l4 * lc2 * (gap + 2.0 * ft2) / (8.0 * gap * gap);

    if (std::abs(d.epsilon) < 1e-12 && d.lambda <= 0.999 * d.lambda_c) {
        auto [rx, ry] = phonons_from_moments(steady_covariance(p, SteadyMethod::LinearSolve));
        if (std::abs(rx - nx) > 1e-8 * std::max(1.0, nx) ||
            std::abs(ry - ny) > 1e-8 * std::max(1.0, ny))
            throw NumericalError(
                "steady_phonons: closed form and moment reconstruction disagree");
    }
    return {nx, ny};
}

SteadyState steady_state(const ModelParams& p, SteadyMethod method) {
    SteadyState s;
    s.method = method;
    s.moment = steady_covariance(p, method);
    auto [nx, ny] = phonons_from_moments(s.moment);
    s.n_x = nx;
    s.n_y = ny;
    return s;
}

double qfi_force(const ModelParams& p, QfiMethod method) {
    DerivedParams d = derived(p);
    require_stable(d, "qfi_force");

    if (method == QfiMethod::ClosedForm) {
        const double l2 = d.lambda * d.lambda;
        const double l4 = l2 * l2;
        const double lc2 = d.lambda_c * d.lambda_c;
        const double lc4 = lc2 * lc2;
        const double num = 16.0 * lc2 * lc2 * lc2 + 4.0 * lc4 * l4 - 2.0 * l4 * l4;
        const double den =
            (l4 + 4.0 * (lc2 - l2)) * (l4 + 4.0 * (lc2 + l2)) * (lc4 - l4);
        return num / den;
    }

    // d is linear in f_tilde, so the derivative is the unit-f_tilde solution.
    ModelParams unit = p;
    unit.force = unit.omega_x;  // f_tilde = 1
    const Eigen::Vector4d dd = steady_first_moments(unit);
    const Eigen::Matrix4d v = steady_covariance(p, SteadyMethod::LinearSolve).v;
    Eigen::FullPivLU<Eigen::Matrix4d> lu(v);
    if (!lu.isInvertible())
        throw NumericalError("qfi_force: covariance is not invertible");
    return dd.dot(lu.solve(dd));
}

MomentTrajectory evolve_moments(const MomentState& m0, const ModelParams& p,
                                const TimeGrid& grid) {
    DerivedParams d = derived(p);
    grid.validate(false, p.phi);
    const double omega = p.omega_x;
    const Eigen::Matrix4d a = quad_drift(p);
    const Eigen::Vector4d b = quad_force(p);
    const Eigen::Matrix4d diff = quad_diffusion(p);

    MomentTrajectory traj;
    traj.lambda = d.lambda;
    traj.lambda_c = d.lambda_c;

    MomentState m = m0;
    const double dtau = omega * grid.dt;
    const long n = grid.steps();
    auto rhs = [&](const MomentState& s) {
        MomentDerivative der;
        der.d_dot = a * s.d + b;
        der.v_dot = a * s.v + s.v * a.transpose() + diff;
        return der;
    };
    auto add = [](const MomentState& s, const MomentDerivative& der, double h) {
        MomentState out;
        out.d = s.d + h * der.d_dot;
        out.v = s.v + h * der.v_dot;
        return out;
    };

    traj.t.push_back(grid.t_start);
    traj.states.push_back(m);
    for (long step = 1; step <= n; ++step) {
        MomentDerivative k1 = rhs(m);
        MomentDerivative k2 = rhs(add(m, k1, 0.5 * dtau));
        MomentDerivative k3 = rhs(add(m, k2, 0.5 * dtau));
        MomentDerivative k4 = rhs(add(m, k3, dtau));
        m.d += (dtau / 6.0) * (k1.d_dot + 2.0 * k2.d_dot + 2.0 * k3.d_dot + k4.d_dot);
        m.v += (dtau / 6.0) * (k1.v_dot + 2.0 * k2.v_dot + 2.0 * k3.v_dot + k4.v_dot);
        const double mag =
            std::max(m.d.cwiseAbs().maxCoeff(), m.v.cwiseAbs().maxCoeff());
        if (!std::isfinite(mag) || mag > 1e12) {
            traj.diverged = true;
            break;
        }
        if (step % grid.sample_every == 0 || step == n) {
            traj.t.push_back(grid.t_start + step * grid.dt);
            traj.states.push_back(m);
        }
    }
    return traj;
}

namespace {

struct StateMoments {
    Complex ax, ay, ax2, ay2, axay, axayd;
    double nx = 0.0, ny = 0.0;
};

StateMoments collect(const Eigen::VectorXcd& psi, const HilbertSpace& sp) {
    StateMoments m{};
    for (int s = 0; s < 2; ++s)
        for (int jx = 0; jx < sp.n_x; ++jx)
            for (int jy = 0; jy < sp.n_y; ++jy) {
                const Complex c = std::conj(psi(sp.index(s, jx, jy)));
                const double pop = std::norm(psi(sp.index(s, jx, jy)));
                m.nx += jx * pop;
                m.ny += jy * pop;
                if (jx + 1 < sp.n_x)
                    m.ax += c * std::sqrt(jx + 1.0) * psi(sp.index(s, jx + 1, jy));
                if (jy + 1 < sp.n_y)
                    m.ay += c * std::sqrt(jy + 1.0) * psi(sp.index(s, jx, jy + 1));
                if (jx + 2 < sp.n_x)
                    m.ax2 += c * std::sqrt((jx + 1.0) * (jx + 2.0)) *
                             psi(sp.index(s, jx + 2, jy));
                if (jy + 2 < sp.n_y)
                    m.ay2 += c * std::sqrt((jy + 1.0) * (jy + 2.0)) *
                             psi(sp.index(s, jx, jy + 2));
                if (jx + 1 < sp.n_x && jy + 1 < sp.n_y)
                    m.axay += c * std::sqrt((jx + 1.0) * (jy + 1.0)) *
                              psi(sp.index(s, jx + 1, jy + 1));
                if (jx + 1 < sp.n_x && jy >= 1)
                    m.axayd += c * std::sqrt((jx + 1.0) * jy) *
                               psi(sp.index(s, jx + 1, jy - 1));
            }
    return m;
}

StateMoments collect(const Eigen::MatrixXcd& rho, const HilbertSpace& sp) {
    StateMoments m{};
    for (int s = 0; s < 2; ++s)
        for (int jx = 0; jx < sp.n_x; ++jx)
            for (int jy = 0; jy < sp.n_y; ++jy) {
                const int i = sp.index(s, jx, jy);
                const double pop = rho(i, i).real();
                m.nx += jx * pop;
                m.ny += jy * pop;
                if (jx + 1 < sp.n_x)
                    m.ax += std::sqrt(jx + 1.0) * rho(sp.index(s, jx + 1, jy), i);
                if (jy + 1 < sp.n_y)
                    m.ay += std::sqrt(jy + 1.0) * rho(sp.index(s, jx, jy + 1), i);
                if (jx + 2 < sp.n_x)
                    m.ax2 += std::sqrt((jx + 1.0) * (jx + 2.0)) *
                             rho(sp.index(s, jx + 2, jy), i);
                if (jy + 2 < sp.n_y)
                    m.ay2 += std::sqrt((jy + 1.0) * (jy + 2.0)) *
                             rho(sp.index(s, jx, jy + 2), i);
                if (jx + 1 < sp.n_x && jy + 1 < sp.n_y)
                    m.axay += std::sqrt((jx + 1.0) * (jy + 1.0)) *
                              rho(sp.index(s, jx + 1, jy + 1), i);
                if (jx + 1 < sp.n_x && jy >= 1)
                    m.axayd += std::sqrt((jx + 1.0) * jy) *
                               rho(sp.index(s, jx + 1, jy - 1), i);
            }
    return m;
}

MomentState assemble(const StateMoments& m) {
    MomentState out;
    out.d << 2.0 * m.ax.real(), 2.0 * m.ax.imag(), 2.0 * m.ay.real(), 2.0 * m.ay.imag();
    const double v11 = 2.0 * m.ax2.real() + 2.0 * m.nx + 1.0 - out.d(0) * out.d(0);
    const double v22 = -2.0 * m.ax2.real() + 2.0 * m.nx + 1.0 - out.d(1) * out.d(1);
    const double v12 = 2.0 * m.ax2.imag() - out.d(0) * out.d(1);
    const double v33 = 2.0 * m.ay2.real() + 2.0 * m.ny + 1.0 - out.d(2) * out.d(2);
    const double v44 = -2.0 * m.ay2.real() + 2.0 * m.ny + 1.0 - out.d(3) * out.d(3);
    const double v34 = 2.0 * m.ay2.imag() - out.d(2) * out.d(3);
    const Complex z = m.axay, w = m.axayd;
    const double v13 = 2.0 * z.real() + 2.0 * w.real() - out.d(0) * out.d(2);
    const double v14 = 2.0 * z.imag() - 2.0 * w.imag() - out.d(0) * out.d(3);
    const double v23 = 2.0 * z.imag() + 2.0 * w.imag() - out.d(1) * out.d(2);
    const double v24 = -2.0 * z.real() + 2.0 * w.real() - out.d(1) * out.d(3);
    out.v << v11, v12, v13, v14,
             v12, v22, v23, v24,
             v13, v23, v33, v34,
             v14, v24, v34, v44;
    return out;
}

}  // namespace

MomentState moments_from_state(const QuantumState& state) {
    if (state.kind == StateKind::PureVector)
        return assemble(collect(state.vec, state.space));
    return assemble(collect(state.mat, state.space));
}

}  // namespace jt
