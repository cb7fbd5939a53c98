#include "jtprobe/model.hpp"

#include <cmath>

namespace jt {

namespace {

Eigen::MatrixXcd identity_n(int n) { return Eigen::MatrixXcd::Identity(n, n); }

Eigen::MatrixXcd position_quad(int n) {
    Eigen::MatrixXcd a = destroy(n);
    return a + a.adjoint().eval();
}

}  // namespace

void ModelParams::validate() const {
    if (!(phi > 0.0)) throw std::invalid_argument("ModelParams: phi must be > 0");
    if (!(omega_x > 0.0) || !(omega_y > 0.0))
        throw std::invalid_argument("ModelParams: boson frequencies must be > 0");
    if (gamma_x < 0.0 || gamma_y < 0.0 || gamma_dephase < 0.0)
        throw std::invalid_argument("ModelParams: rates must be >= 0");
    for (double v : {omega_x, omega_y, delta, g_x, g_y, phi, gamma_x, gamma_y,
                     gamma_dephase, force})
        if (!std::isfinite(v)) throw std::invalid_argument("ModelParams: non-finite value");
    if (space.n_x < 2 || space.n_y < 2)
        throw std::invalid_argument("ModelParams: space cutoffs must be >= 2");
}

std::vector<std::string> ModelParams::advisory_warnings() const {
    std::vector<std::string> out;
    double slow = std::max({g_x, g_y, omega_x, omega_y, std::abs(delta), gamma_x, gamma_y});
    if (phi < 10.0 * slow)
        out.push_back("high-frequency regime marginal: phi = " + std::to_string(phi) +
                      " rad/ms is below 10x the largest slow scale " + std::to_string(slow));
    return out;
}

DerivedParams derived(const ModelParams& p) {
    p.validate();
    if (std::abs(p.omega_x - p.omega_y) > 1e-12 * std::max(p.omega_x, p.omega_y))
        throw std::invalid_argument(
            "derived: closed forms require omega_x == omega_y");
    if (std::abs(p.gamma_x - p.gamma_y) > 1e-12 * std::max(1.0, std::max(p.gamma_x, p.gamma_y)))
        throw std::invalid_argument(
            "derived: closed forms require gamma_x == gamma_y");
    const double omega = p.omega_x;
    DerivedParams d;
    d.lambda = std::sqrt(8.0 * p.g_x * p.g_y / (omega * p.phi));
    d.epsilon = p.delta / p.phi;
    d.gamma_tilde = p.gamma_x / omega;
    d.f_tilde = p.force / omega;
    d.lambda_c = std::sqrt(1.0 + d.gamma_tilde * d.gamma_tilde);
    d.lambda2_plus_c = d.lambda_c * d.lambda_c / (1.0 + d.epsilon);
    d.lambda2_minus_c = d.lambda_c * d.lambda_c / (1.0 - d.epsilon);
    d.nu1_real = d.lambda < 1.0;
    d.nu1 = d.nu1_real ? std::sqrt(1.0 - d.lambda * d.lambda)
                       : std::numeric_limits<double>::quiet_NaN();
    d.nu2 = std::sqrt(1.0 + d.lambda * d.lambda);
    d.t_drive = 2.0 * M_PI / p.phi;
    return d;
}

Operator hamiltonian(const ModelParams& p, double t, HamiltonianPart part) {
    p.validate();
    const auto& sp = p.space;
    const Eigen::MatrixXcd i2 = identity_n(2);
    const Eigen::MatrixXcd ix = identity_n(sp.n_x);
    const Eigen::MatrixXcd iy = identity_n(sp.n_y);

    auto h0 = [&] {
        Eigen::MatrixXcd ax = destroy(sp.n_x), ay = destroy(sp.n_y);
        Operator h = embed(i2, p.omega_x * (ax.adjoint() * ax), iy, sp) +
                     embed(i2, ix, p.omega_y * (ay.adjoint() * ay), sp) +
                     embed(0.5 * p.delta * pauli(PauliAxis::Z), ix, iy, sp);
        return h;
    };
    auto drive = [&] {
        Operator h = embed(2.0 * p.g_x * std::cos(p.phi * t) * pauli(PauliAxis::X),
                           position_quad(sp.n_x), iy, sp) +
                     embed(2.0 * p.g_y * std::sin(p.phi * t) * pauli(PauliAxis::Y), ix,
                           position_quad(sp.n_y), sp);
        return h;
    };
    auto force = [&] { return embed(0.5 * p.force * i2, position_quad(sp.n_x), iy, sp); };

    switch (part) {
        case HamiltonianPart::H0: return h0();
        case HamiltonianPart::Drive: return drive();
        case HamiltonianPart::Force: return force();
        case HamiltonianPart::Total: return h0() + drive() + force();
    }
    throw std::invalid_argument("hamiltonian: unknown part");
}

Operator fourier_v(const ModelParams& p) {
    p.validate();
    const auto& sp = p.space;
    const Complex i(0.0, 1.0);
    return embed(p.g_x * pauli(PauliAxis::X), position_quad(sp.n_x), identity_n(sp.n_y),
                 sp) +
           embed(-i * p.g_y * pauli(PauliAxis::Y), identity_n(sp.n_x),
                 position_quad(sp.n_y), sp);
}

std::vector<Operator> jump_operators(const ModelParams& p) {
    p.validate();
    const auto& sp = p.space;
    std::vector<Operator> out;
    if (p.gamma_x > 0.0)
        out.push_back(embed(std::sqrt(p.gamma_x) * identity_n(2), destroy(sp.n_x),
                            identity_n(sp.n_y), sp));
    if (p.gamma_y > 0.0)
        out.push_back(embed(std::sqrt(p.gamma_y) * identity_n(2), identity_n(sp.n_x),
                            destroy(sp.n_y), sp));
    if (p.gamma_dephase > 0.0)
        out.push_back(embed(std::sqrt(0.5 * p.gamma_dephase) * pauli(PauliAxis::Z),
                            identity_n(sp.n_x), identity_n(sp.n_y), sp));
    return out;
}

Operator effective_hamiltonian(const ModelParams& p, int order) {
    if (order != 1 && order != 2)
        throw std::invalid_argument("effective_hamiltonian: order must be 1 or 2");
    const auto& sp = p.space;
    Operator h = hamiltonian(p, 0.0, HamiltonianPart::H0);
    const Eigen::MatrixXcd sz = pauli(PauliAxis::Z);
    const Eigen::MatrixXcd qx = position_quad(sp.n_x);
    const Eigen::MatrixXcd qy = position_quad(sp.n_y);
    h = h + embed(-(4.0 * p.g_x * p.g_y / p.phi) * sz, qx, qy, sp);
    if (order == 2) {
        const double c = 2.0 * p.delta / (p.phi * p.phi);
        h = h + embed(-c * p.g_x * p.g_x * sz, (qx * qx).eval(), identity_n(sp.n_y), sp) +
            embed(-c * p.g_y * p.g_y * sz, identity_n(sp.n_x), (qy * qy).eval(), sp);
    }
    return h;
}

Operator effective_hamiltonian_commutator(const ModelParams& p, int order) {
    if (order != 1 && order != 2)
        throw std::invalid_argument("effective_hamiltonian_commutator: order must be 1 or 2");
    Operator h0 = hamiltonian(p, 0.0, HamiltonianPart::H0);
    Operator v = fourier_v(p);
    Operator vd = v.adjoint();
    Operator h = h0 + (1.0 / p.phi) * commutator(v, vd);
    if (order == 2) {
        Operator dc = commutator(commutator(h0, v), vd) + commutator(commutator(h0, vd), v);
        // The exact operator algebra leaves a constant -4(g_x^2 w_x + g_y^2 w_y)
        // in dc; remove it to match the no-constant convention of the closed form.
        const double c0 = -4.0 * (p.g_x * p.g_x * p.omega_x + p.g_y * p.g_y * p.omega_y);
        dc.matrix -= c0 * Eigen::MatrixXcd::Identity(dc.matrix.rows(), dc.matrix.cols());
        h = h + (-0.5 / (p.phi * p.phi)) * dc;
    }
    return h;
}

NormalModes normal_modes(const ModelParams& p, int order) {
    if (order != 1 && order != 2)
        throw std::invalid_argument("normal_modes: order must be 1 or 2");
    DerivedParams d = derived(p);  // enforces omega_x == omega_y
    const double omega = p.omega_x;

    // Appendix-style B matrix in scaled coordinates; the delta terms are
    // the order-2 correction.
    Eigen::Matrix2d b_mat;
    const double off = -(8.0 * p.g_x * p.g_y / p.phi) * omega;
    const double d2x =
        order == 2 ? 8.0 * p.g_x * p.g_x * p.delta / (omega * p.phi * p.phi) : 0.0;
    const double d2y =
        order == 2 ? 8.0 * p.g_y * p.g_y * p.delta / (omega * p.phi * p.phi) : 0.0;
    b_mat << omega * omega * (1.0 - d2x), off, off, omega * omega * (1.0 - d2y);

    NormalModes nm;
    if (std::abs(b_mat(0, 0) - b_mat(1, 1)) <= 1e-12 * std::abs(b_mat(0, 0))) {
        // Equal diagonals: eigenvectors are (1,1)/sqrt2 and (1,-1)/sqrt2
        // for any coupling, the soft mode along (1,1) when off < 0.
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        nm.b << inv_sqrt2, inv_sqrt2, inv_sqrt2, -inv_sqrt2;
        double e1 = (b_mat(0, 0) + off) / (omega * omega);
        double e2 = (b_mat(0, 0) - off) / (omega * omega);
        if (e1 <= 0.0) {
            double lam_eff = std::sqrt(std::max(0.0, 1.0 - e1));
            throw SupercriticalError("normal_modes: soft mode frequency not real at order " +
                                         std::to_string(order),
                                     lam_eff);
        }
        nm.nu = {std::sqrt(e1), std::sqrt(e2)};
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(b_mat);
        Eigen::Vector2d evals = es.eigenvalues() / (omega * omega);
        if (evals(0) <= 0.0)
            throw SupercriticalError("normal_modes: soft mode frequency not real",
                                     d.lambda);
        nm.nu = {std::sqrt(evals(0)), std::sqrt(evals(1))};
        nm.b = es.eigenvectors();
        for (int c = 0; c < 2; ++c)
            if (nm.b(0, c) < 0.0) nm.b.col(c) *= -1.0;
    }
    nm.theta = {0.5 * std::log(nm.nu[0]), 0.5 * std::log(nm.nu[1])};
    return nm;
}

DriftSystem drift_matrix_g0(const ModelParams& p) {
    DerivedParams d = derived(p);
    const Complex i(0.0, 1.0);
    const double l2 = 0.5 * d.lambda * d.lambda;
    const double eps = d.epsilon;
    const double gt = d.gamma_tilde;
    const Complex diag = i * (1.0 - l2 * eps);

    DriftSystem sys;
    sys.g0 << -diag - gt, i * l2 * eps, i * l2, i * l2,
        -i * l2 * eps, diag - gt, -i * l2, -i * l2,
        i * l2, i * l2, -diag - gt, i * l2 * eps,
        -i * l2, -i * l2, -i * l2 * eps, diag - gt;
    sys.a << -i * 0.5 * d.f_tilde, i * 0.5 * d.f_tilde, 0.0, 0.0;
    return sys;
}

}  // namespace jt
