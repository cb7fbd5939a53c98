#include "jtprobe/dynamics.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>

#include "jtprobe/detail/parallel.hpp"
#include "jtprobe/gaussian.hpp"

namespace jt {

void TimeGrid::validate(bool drive_active, double phi) const {
    if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be > 0");
    if (!(t_end > t_start)) throw std::invalid_argument("TimeGrid: t_end must exceed t_start");
    if (sample_every < 1) throw std::invalid_argument("TimeGrid: sample_every must be >= 1");
    if (drive_active && dt > (2.0 * M_PI / phi) / 32.0 * (1.0 + 1e-12))
        throw std::invalid_argument(
            "TimeGrid: dt must resolve the drive, dt <= (2pi/phi)/32");
}

long TimeGrid::steps() const {
    return std::max<long>(1, std::lround(std::ceil((t_end - t_start) / dt - 1e-9)));
}

namespace {

// Upper bound on the spectral scale of the (effective) Hamiltonian on the
// truncated space; the commutator superoperator reaches twice this.
double hamiltonian_scale(const ModelParams& p) {
    const double nx = p.space.n_x, ny = p.space.n_y;
    double s = p.omega_x * (nx - 1) + p.omega_y * (ny - 1) + 0.5 * std::abs(p.delta) +
               std::abs(p.force) * std::sqrt(nx);
    s += (4.0 * std::abs(p.g_x * p.g_y) / p.phi) * 4.0 * std::sqrt(nx * ny);
    s += (2.0 * std::abs(p.delta) / (p.phi * p.phi)) * 4.0 *
         (p.g_x * p.g_x * nx + p.g_y * p.g_y * ny);
    s += 2.0 * (std::abs(p.g_x) * std::sqrt(nx) + std::abs(p.g_y) * std::sqrt(ny));
    return s;
}

}  // namespace

TimeGrid default_grid(const ModelParams& p, bool drive_active, double t_end,
                      int target_samples) {
    TimeGrid g;
    g.t_start = 0.0;
    g.t_end = t_end;
    if (drive_active) {
        g.dt = p.drive_period() / 64.0;
    } else {
        double omega = std::min(p.omega_x, p.omega_y);
        g.dt = 0.01 / omega;
        double rate = std::max({p.gamma_x, p.gamma_y, p.gamma_dephase});
        if (rate > 0.0) g.dt = std::min(g.dt, 0.1 / rate);
    }
    // RK4 stability: the Liouvillian spectrum extends to ~2 ||H||, and the
    // stability region ends near |z| = 2.8.
    g.dt = std::min(g.dt, 0.7 / hamiltonian_scale(p));
    g.sample_every = std::max<long>(1, g.steps() / std::max(1, target_samples));
    return g;
}

namespace {

using SparseC = Eigen::SparseMatrix<Complex>;

struct SparseGen {
    SparseC h_static;
    SparseC h_cos, h_sin;  // drive quadratures, empty when not driven
    bool has_drive = false;
    double phi = 0.0;
    std::vector<SparseC> jumps;
    std::vector<SparseC> jumps_dag;
    std::vector<SparseC> jump_dagjump;
};

SparseGen build_generator(const ModelParams& p, Generator gen, bool with_jumps) {
    p.validate();
    const auto& sp = p.space;
    const Eigen::MatrixXcd i2 = Eigen::MatrixXcd::Identity(2, 2);
    const Eigen::MatrixXcd ix = Eigen::MatrixXcd::Identity(sp.n_x, sp.n_x);
    const Eigen::MatrixXcd iy = Eigen::MatrixXcd::Identity(sp.n_y, sp.n_y);
    const Eigen::MatrixXcd ax = destroy(sp.n_x);
    const Eigen::MatrixXcd ay = destroy(sp.n_y);
    const Eigen::MatrixXcd qx = ax + ax.adjoint().eval();
    const Eigen::MatrixXcd qy = ay + ay.adjoint().eval();

    SparseGen out;
    out.phi = p.phi;
    SparseC h0 = embed_sparse(i2, (p.omega_x * (ax.adjoint() * ax)).eval(), iy, sp);
    h0 += embed_sparse(i2, ix, (p.omega_y * (ay.adjoint() * ay)).eval(), sp);
    if (p.delta != 0.0) h0 += embed_sparse(0.5 * p.delta * pauli(PauliAxis::Z), ix, iy, sp);
    if (p.force != 0.0) h0 += embed_sparse(0.5 * p.force * i2, qx, iy, sp);

    if (gen == Generator::ExactTotal) {
        out.has_drive = true;
        out.h_static = h0;
        out.h_cos = embed_sparse(2.0 * p.g_x * pauli(PauliAxis::X), qx, iy, sp);
        out.h_sin = embed_sparse(2.0 * p.g_y * pauli(PauliAxis::Y), ix, qy, sp);
    } else {
        out.h_static = h0;
        out.h_static +=
            embed_sparse((-4.0 * p.g_x * p.g_y / p.phi) * pauli(PauliAxis::Z), qx, qy, sp);
        if (gen == Generator::Effective2 && p.delta != 0.0) {
            const double c = 2.0 * p.delta / (p.phi * p.phi);
            out.h_static += embed_sparse(-c * p.g_x * p.g_x * pauli(PauliAxis::Z),
                                         (qx * qx).eval(), iy, sp);
            out.h_static += embed_sparse(-c * p.g_y * p.g_y * pauli(PauliAxis::Z), ix,
                                         (qy * qy).eval(), sp);
        }
    }
    out.h_static.makeCompressed();

    if (with_jumps) {
        auto add_jump = [&](const Eigen::MatrixXcd& s2, const Eigen::MatrixXcd& fx,
                            const Eigen::MatrixXcd& fy) {
            SparseC l = embed_sparse(s2, fx, fy, sp);
            SparseC ld = l.adjoint();
            out.jump_dagjump.push_back((ld * l).pruned());
            out.jumps.push_back(std::move(l));
            out.jumps_dag.push_back(std::move(ld));
        };
        if (p.gamma_x > 0.0) add_jump(std::sqrt(p.gamma_x) * i2, ax, iy);
        if (p.gamma_y > 0.0) add_jump(std::sqrt(p.gamma_y) * i2, ix, ay);
        if (p.gamma_dephase > 0.0)
            add_jump(std::sqrt(0.5 * p.gamma_dephase) * pauli(PauliAxis::Z), ix, iy);
    }
    return out;
}

// ---- fast observable contractions (O(dim) loops over the tensor index) ----

struct LadderMoments {
    Complex a{0.0, 0.0};
    Complex a2{0.0, 0.0};
    double n = 0.0;
    double leak = 0.0;
};

LadderMoments ladder_x(const Eigen::VectorXcd& psi, const HilbertSpace& sp) {
    LadderMoments m;
    for (int s = 0; s < 2; ++s)
        for (int jx = 0; jx < sp.n_x; ++jx) {
            const int base = sp.index(s, jx, 0);
            for (int jy = 0; jy < sp.n_y; ++jy) {
                const Complex c = std::conj(psi(base + jy));
                const double pop = std::norm(psi(base + jy));
                m.n += jx * pop;
                if (jx == sp.n_x - 1) m.leak += pop;
                if (jx + 1 < sp.n_x)
                    m.a += c * std::sqrt(jx + 1.0) * psi(sp.index(s, jx + 1, 0) + jy);
                if (jx + 2 < sp.n_x)
                    m.a2 += c * std::sqrt((jx + 1.0) * (jx + 2.0)) *
                            psi(sp.index(s, jx + 2, 0) + jy);
            }
        }
    return m;
}

LadderMoments ladder_y(const Eigen::VectorXcd& psi, const HilbertSpace& sp) {
    LadderMoments m;
    for (int s = 0; s < 2; ++s)
        for (int jx = 0; jx < sp.n_x; ++jx) {
            const int base = sp.index(s, jx, 0);
            for (int jy = 0; jy < sp.n_y; ++jy) {
                const Complex c = std::conj(psi(base + jy));
                const double pop = std::norm(psi(base + jy));
                m.n += jy * pop;
                if (jy == sp.n_y - 1) m.leak += pop;
                if (jy + 1 < sp.n_y) m.a += c * std::sqrt(jy + 1.0) * psi(base + jy + 1);
                if (jy + 2 < sp.n_y)
                    m.a2 += c * std::sqrt((jy + 1.0) * (jy + 2.0)) * psi(base + jy + 2);
            }
        }
    return m;
}

LadderMoments ladder_x(const Eigen::MatrixXcd& rho, const HilbertSpace& sp) {
    LadderMoments m;
    for (int s = 0; s < 2; ++s)
        for (int jx = 0; jx < sp.n_x; ++jx)
            for (int jy = 0; jy < sp.n_y; ++jy) {
                const int i = sp.index(s, jx, jy);
                const double pop = rho(i, i).real();
                m.n += jx * pop;
                if (jx == sp.n_x - 1) m.leak += pop;
                if (jx + 1 < sp.n_x)
                    m.a += std::sqrt(jx + 1.0) * rho(sp.index(s, jx + 1, jy), i);
                if (jx + 2 < sp.n_x)
                    m.a2 += std::sqrt((jx + 1.0) * (jx + 2.0)) * rho(sp.index(s, jx + 2, jy), i);
            }
    return m;
}

LadderMoments ladder_y(const Eigen::MatrixXcd& rho, const HilbertSpace& sp) {
    LadderMoments m;
    for (int s = 0; s < 2; ++s)
        for (int jx = 0; jx < sp.n_x; ++jx)
            for (int jy = 0; jy < sp.n_y; ++jy) {
                const int i = sp.index(s, jx, jy);
                const double pop = rho(i, i).real();
                m.n += jy * pop;
                if (jy == sp.n_y - 1) m.leak += pop;
                if (jy + 1 < sp.n_y)
                    m.a += std::sqrt(jy + 1.0) * rho(sp.index(s, jx, jy + 1), i);
                if (jy + 2 < sp.n_y)
                    m.a2 += std::sqrt((jy + 1.0) * (jy + 2.0)) * rho(sp.index(s, jx, jy + 2), i);
            }
    return m;
}

double sz_value(const Eigen::VectorXcd& psi, const HilbertSpace& sp) {
    double sz = 0.0;
    const int nb = sp.boson_dim();
    for (int i = 0; i < nb; ++i) sz += std::norm(psi(i));
    for (int i = nb; i < 2 * nb; ++i) sz -= std::norm(psi(i));
    return sz;
}

double sz_value(const Eigen::MatrixXcd& rho, const HilbertSpace& sp) {
    double sz = 0.0;
    const int nb = sp.boson_dim();
    for (int i = 0; i < nb; ++i) sz += rho(i, i).real();
    for (int i = nb; i < 2 * nb; ++i) sz -= rho(i, i).real();
    return sz;
}

template <class StateData>
TrajectorySample make_sample(double t, const StateData& y, const HilbertSpace& sp,
                             double norm_drift) {
    TrajectorySample s;
    s.t = t;
    const LadderMoments mx = ladder_x(y, sp);
    const LadderMoments my = ladder_y(y, sp);
    s.x = 2.0 * mx.a.real();
    s.p_x = 2.0 * mx.a.imag();
    s.y = 2.0 * my.a.real();
    s.p_y = 2.0 * my.a.imag();
    s.var_x = 2.0 * mx.a2.real() + 2.0 * mx.n + 1.0 - s.x * s.x;
    s.var_y = 2.0 * my.a2.real() + 2.0 * my.n + 1.0 - s.y * s.y;
    s.n_x = mx.n;
    s.n_y = my.n;
    s.sz = sz_value(y, sp);
    s.leak_x = mx.leak;
    s.leak_y = my.leak;
    s.norm_drift = norm_drift;
    return s;
}

void check_finite(const TrajectorySample& s) {
    for (double v : {s.x, s.p_x, s.y, s.p_y, s.var_x, s.var_y, s.n_x, s.n_y, s.sz})
        if (!std::isfinite(v))
            throw IntegrationFailure("evolution produced non-finite observables at t = " +
                                     std::to_string(s.t));
}

// Hand-rolled RHS for the driven Schroedinger equation. The Hamiltonian
// couples only neighbouring Fock levels, so the action is a handful of
// contiguous segment updates; this is the hot loop of every
// drive-resolved run.
struct FastPureRhs {
    HilbertSpace sp;
    double phi = 0.0;
    double two_gx = 0.0, two_gy = 0.0, half_force = 0.0;
    Eigen::VectorXcd diag;
    Eigen::VectorXcd sqrt_y;  // sqrt(j), j = 0..n_y-1

    static FastPureRhs build(const ModelParams& p) {
        FastPureRhs r;
        r.sp = p.space;
        r.phi = p.phi;
        r.two_gx = 2.0 * p.g_x;
        r.two_gy = 2.0 * p.g_y;
        r.half_force = 0.5 * p.force;
        r.diag.resize(r.sp.dim());
        for (int s = 0; s < 2; ++s)
            for (int jx = 0; jx < r.sp.n_x; ++jx)
                for (int jy = 0; jy < r.sp.n_y; ++jy)
                    r.diag(r.sp.index(s, jx, jy)) =
                        p.omega_x * jx + p.omega_y * jy +
                        0.5 * p.delta * (s == 0 ? 1.0 : -1.0);
        r.sqrt_y.resize(r.sp.n_y);
        for (int j = 0; j < r.sp.n_y; ++j) r.sqrt_y(j) = std::sqrt(double(j));
        return r;
    }

    void operator()(double t, const Eigen::VectorXcd& in, Eigen::VectorXcd& out) const {
        const int ny = sp.n_y;
        out.array() = diag.array() * in.array();
        const double c = two_gx * std::cos(phi * t);
        for (int s = 0; s < 2; ++s)
            for (int jx = 1; jx < sp.n_x; ++jx) {
                const double w = std::sqrt(double(jx));
                const int hi = sp.index(s, jx, 0), lo_flip = sp.index(1 - s, jx - 1, 0);
                const int lo = sp.index(s, jx - 1, 0), hi_flip = sp.index(1 - s, jx, 0);
                if (c != 0.0) {
                    out.segment(hi, ny) += (w * c) * in.segment(lo_flip, ny);
                    out.segment(lo, ny) += (w * c) * in.segment(hi_flip, ny);
                }
                if (half_force != 0.0) {
                    out.segment(hi, ny) += (w * half_force) * in.segment(lo, ny);
                    out.segment(lo, ny) += (w * half_force) * in.segment(hi, ny);
                }
            }
        if (two_gy != 0.0) {
            const double sn = two_gy * std::sin(phi * t);
            for (int s = 0; s < 2; ++s) {
                const Complex coeff = s == 0 ? Complex(0.0, -sn) : Complex(0.0, sn);
                if (coeff == Complex(0.0, 0.0)) continue;
                for (int jx = 0; jx < sp.n_x; ++jx) {
                    const int me = sp.index(s, jx, 0), other = sp.index(1 - s, jx, 0);
                    out.segment(me + 1, ny - 1).array() +=
                        coeff * sqrt_y.segment(1, ny - 1).array() *
                        in.segment(other, ny - 1).array();
                    out.segment(me, ny - 1).array() +=
                        coeff * sqrt_y.segment(1, ny - 1).array() *
                        in.segment(other + 1, ny - 1).array();
                }
            }
        }
        out *= Complex(0.0, -1.0);
    }
};

template <class State, class Rhs>
void rk4_step(State& y, double t, double dt, Rhs&& rhs, State& k1, State& k2, State& k3,
              State& k4, State& tmp) {
    rhs(t, y, k1);
    tmp = y + (0.5 * dt) * k1;
    rhs(t + 0.5 * dt, tmp, k2);
    tmp = y + (0.5 * dt) * k2;
    rhs(t + 0.5 * dt, tmp, k3);
    tmp = y + dt * k3;
    rhs(t + dt, tmp, k4);
    y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void record_finalize(TrajectoryRecord& rec) {
    for (const auto& s : rec.samples) {
        rec.max_leak_x = std::max(rec.max_leak_x, s.leak_x);
        rec.max_leak_y = std::max(rec.max_leak_y, s.leak_y);
        rec.max_norm_drift = std::max(rec.max_norm_drift, s.norm_drift);
    }
    rec.converged = rec.max_leak_x < 1e-6 && rec.max_leak_y < 1e-6 &&
                    rec.max_norm_drift < 1e-6;
}

}  // namespace

TrajectoryRecord evolve_pure(const QuantumState& psi0, const ModelParams& p,
                             const TimeGrid& grid, Generator gen,
                             const std::vector<NamedOperator>& extras) {
    if (psi0.kind != StateKind::PureVector)
        throw std::invalid_argument("evolve_pure: initial state must be a pure vector");
    if (!(psi0.space == p.space)) throw ShapeError("evolve_pure: space mismatch");
    if (p.gamma_x > 0.0 || p.gamma_y > 0.0 || p.gamma_dephase > 0.0)
        throw std::invalid_argument("evolve_pure: dissipation rates must be zero");
    const bool drive = gen == Generator::ExactTotal;
    grid.validate(drive, p.phi);

    std::function<void(double, const Eigen::VectorXcd&, Eigen::VectorXcd&)> rhs;
    SparseGen sg;
    FastPureRhs fast;
    if (drive) {
        fast = FastPureRhs::build(p);
        rhs = [&fast](double t, const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
            fast(t, in, out);
        };
    } else {
        sg = build_generator(p, gen, false);
        const Complex mi(0.0, -1.0);
        rhs = [&sg, mi](double t, const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
            (void)t;
            out.noalias() = sg.h_static * in;
            out *= mi;
        };
    }

    Eigen::VectorXcd y = psi0.vec;
    Eigen::VectorXcd k1(y.size()), k2(y.size()), k3(y.size()), k4(y.size()), tmp(y.size());

    TrajectoryRecord rec;
    for (const auto& e : extras) rec.extra_names.push_back(e.name);
    double drift = 0.0;
    const long n = grid.steps();
    auto sample = [&](long step, double t) {
        TrajectorySample s = make_sample(t, y, p.space, drift);
        for (const auto& e : extras)
            s.extra.push_back(
                real_expectation(QuantumState::pure(p.space, y), e.op, 1e-6));
        check_finite(s);
        rec.samples.push_back(std::move(s));
        (void)step;
    };

    sample(0, grid.t_start);
    for (long step = 1; step <= n; ++step) {
        double t = grid.t_start + (step - 1) * grid.dt;
        rk4_step(y, t, grid.dt, rhs, k1, k2, k3, k4, tmp);
        double norm = y.norm();
        if (!std::isfinite(norm) || norm == 0.0)
            throw IntegrationFailure("evolve_pure: state norm lost at t = " +
                                     std::to_string(t + grid.dt));
        drift += std::abs(1.0 - norm);
        if (std::abs(1.0 - norm) > 1e-12) ++rec.renormalizations;
        y /= norm;
        if (step % grid.sample_every == 0 || step == n)
            sample(step, grid.t_start + step * grid.dt);
    }
    rec.final_state = QuantumState::pure(p.space, y);
    record_finalize(rec);
    return rec;
}

TrajectoryRecord evolve_density(const QuantumState& rho0, const ModelParams& p,
                                const TimeGrid& grid, Generator gen,
                                const std::vector<NamedOperator>& extras) {
    QuantumState state0 = rho0.kind == StateKind::DensityMatrix ? rho0 : rho0.to_density();
    if (!(state0.space == p.space)) throw ShapeError("evolve_density: space mismatch");
    const bool drive = gen == Generator::ExactTotal;
    grid.validate(drive, p.phi);
    SparseGen sg = build_generator(p, gen, true);

    const int d = p.space.dim();
    Eigen::MatrixXcd w1(d, d), w2(d, d);
    const Complex mi(0.0, -1.0);
    // Every RK4 stage input is Hermitian, so -i[H, rho] = M + M^dag with
    // M = -i H rho; this halves the Hamiltonian products.
    auto rhs = [&](double t, const Eigen::MatrixXcd& in, Eigen::MatrixXcd& out) {
        w1.noalias() = sg.h_static * in;
        if (sg.has_drive) {
            const double c = std::cos(sg.phi * t), s = std::sin(sg.phi * t);
            w1.noalias() += c * (sg.h_cos * in);
            w1.noalias() += s * (sg.h_sin * in);
        }
        w1 *= mi;
        out = w1 + w1.adjoint();
        for (size_t j = 0; j < sg.jumps.size(); ++j) {
            w1.noalias() = sg.jumps[j] * in;
            w2.noalias() = w1 * sg.jumps_dag[j];
            out += 2.0 * w2;
            out.noalias() -= sg.jump_dagjump[j] * in;
            out.noalias() -= in * sg.jump_dagjump[j];
        }
    };

    Eigen::MatrixXcd y = state0.mat;
    Eigen::MatrixXcd k1(d, d), k2(d, d), k3(d, d), k4(d, d), tmp(d, d);

    TrajectoryRecord rec;
    for (const auto& e : extras) rec.extra_names.push_back(e.name);
    double drift = 0.0;
    const long n = grid.steps();
    const long total_samples = n / grid.sample_every + 2;
    const long eig_stride = std::max<long>(1, total_samples / 5);
    long sample_count = 0;

    auto sample = [&](double t) {
        y = 0.5 * (y + y.adjoint().eval());  // keep Hermitian against roundoff
        TrajectorySample s = make_sample(t, y, p.space, drift);
        for (const auto& e : extras) {
            if (!(e.op.space == p.space)) throw ShapeError("evolve_density: extra observable space");
            s.extra.push_back((e.op.matrix * y).trace().real());
        }
        check_finite(s);
        if (sample_count % eig_stride == 0) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(y, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() < -1e-6) rec.negativity_flagged = true;
        }
        ++sample_count;
        rec.samples.push_back(std::move(s));
    };

    sample(grid.t_start);
    for (long step = 1; step <= n; ++step) {
        double t = grid.t_start + (step - 1) * grid.dt;
        rk4_step(y, t, grid.dt, rhs, k1, k2, k3, k4, tmp);
        double tr = y.trace().real();
        if (!std::isfinite(tr) || tr <= 0.0)
            throw IntegrationFailure("evolve_density: trace lost at t = " +
                                     std::to_string(t + grid.dt));
        drift += std::abs(1.0 - tr);
        if (drift > 1e-4)
            throw IntegrationFailure(
                "evolve_density: accumulated trace drift exceeds 1e-4 (dt too coarse?)");
        if (std::abs(1.0 - tr) > 1e-14) ++rec.renormalizations;
        y /= tr;
        if (step % grid.sample_every == 0 || step == n)
            sample(grid.t_start + step * grid.dt);
    }
    rec.final_state = QuantumState::density(p.space, y);
    record_finalize(rec);
    return rec;
}

QuantumState micromotion_kick(const QuantumState& rho, const ModelParams& p, double t,
                              KickDirection direction) {
    if (rho.kind != StateKind::DensityMatrix)
        throw std::invalid_argument("micromotion_kick: density matrix required");
    if (!(rho.space == p.space)) throw ShapeError("micromotion_kick: space mismatch");
    Operator v = fourier_v(p);
    const Complex i(0.0, 1.0);
    const Complex phase = std::exp(i * p.phi * t);
    const Eigen::MatrixXcd& r = rho.mat;
    // G(t) rho = (1/phi) { [v^dag, rho] e^{-i phi t} - [v, rho] e^{+i phi t} };
    // the sign pairing is fixed by requiring a Hermiticity-preserving kick
    // generated by a Hermitian operator.
    Eigen::MatrixXcd comm_vd = v.matrix.adjoint() * r - r * v.matrix.adjoint();
    Eigen::MatrixXcd comm_v = v.matrix * r - r * v.matrix;
    Eigen::MatrixXcd g = (std::conj(phase) * comm_vd - phase * comm_v) / p.phi;
    Eigen::MatrixXcd out =
        direction == KickDirection::Forward ? (r + g).eval() : (r - g).eval();
    return QuantumState::density(rho.space, std::move(out));
}

ScanResult dephasing_scan(const ModelParams& base, const std::vector<double>& phi_list,
                          const std::vector<double>& gamma_dephase_list,
                          int steps_per_period) {
    DerivedParams d0 = derived(base);
    if (!d0.nu1_real)
        throw SupercriticalError("dephasing_scan: lambda must be < 1", d0.lambda);
    const double lambda = d0.lambda;

    struct Point {
        double x_tstar = 0.0;
        bool converged = true;
    };
    const int np = static_cast<int>(phi_list.size());
    const int ng = static_cast<int>(gamma_dephase_list.size());
    std::vector<Point> points(np * ng);

    detail::parallel_for(np * ng, [&](int idx) {
        const int ip = idx / ng, ig = idx % ng;
        ModelParams p = base;
        p.phi = phi_list[ip];
        // hold lambda fixed: omega follows phi with the couplings unchanged
        p.omega_x = p.omega_y = 8.0 * p.g_x * p.g_y / (lambda * lambda * p.phi);
        p.gamma_dephase = gamma_dephase_list[ig];
        DerivedParams d = derived(p);
        const double t_star = M_PI / (2.0 * p.omega_x * d.nu1);
        TimeGrid grid;
        grid.t_start = 0.0;
        grid.t_end = t_star;
        grid.dt = p.drive_period() / steps_per_period;
        grid.sample_every = std::max<long>(1, grid.steps());

        Eigen::VectorXcd mode(2);
        mode << 1.0 / std::sqrt(2.0), Complex(0.0, 1.0 / std::sqrt(2.0));
        Eigen::Vector2cd up(1.0, 0.0);
        QuantumState psi0 = QuantumState::product(p.space, up, mode, mode);

        TrajectoryRecord rec;
        if (p.gamma_x == 0.0 && p.gamma_y == 0.0 && p.gamma_dephase == 0.0)
            rec = evolve_pure(psi0, p, grid, Generator::ExactTotal);
        else
            rec = evolve_density(psi0.to_density(), p, grid, Generator::ExactTotal);
        points[idx].x_tstar = rec.samples.back().x;
        points[idx].converged = rec.converged;
    });

    ScanResult result;
    result.add_meta("experiment", "dephasing-scan");
    result.add_meta("lambda", lambda);
    result.add_meta("g_x_rad_per_ms", base.g_x);
    result.add_meta("g_y_rad_per_ms", base.g_y);
    result.add_meta("n_x", base.space.n_x);
    result.add_meta("n_y", base.space.n_y);
    result.add_meta("steps_per_period", steps_per_period);
    result.columns.push_back("gamma_dephase_khz");
    for (double phi : phi_list) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "x_tstar_phi%.0fkhz", phi / (2.0 * M_PI));
        result.columns.push_back(buf);
    }
    for (int ig = 0; ig < ng; ++ig) {
        std::vector<double> row;
        row.push_back(gamma_dephase_list[ig] / (2.0 * M_PI));
        for (int ip = 0; ip < np; ++ip) {
            const Point& pt = points[ip * ng + ig];
            row.push_back(pt.x_tstar);
            result.converged = result.converged && pt.converged;
        }
        result.add_row(std::move(row));
    }
    return result;
}

}  // namespace jt
