#include "jtprobe/metrology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jtprobe/detail/parallel.hpp"
#include "jtprobe/gaussian.hpp"

namespace jt {

namespace {

struct ModeFreqs {
    double nu1, nu2;
    double lambda, lambda_plus, epsilon, omega;
};

// epsilon-corrected eigenfrequencies; order 1 drops the epsilon terms.
ModeFreqs mode_freqs(const ModelParams& p, int order) {
    DerivedParams d = derived(p);
    ModeFreqs f{};
    f.lambda = d.lambda;
    f.epsilon = order == 2 ? d.epsilon : 0.0;
    f.omega = p.omega_x;
    const double l2p = d.lambda * d.lambda * (1.0 + f.epsilon);
    const double l2m = d.lambda * d.lambda * (1.0 - f.epsilon);
    f.lambda_plus = std::sqrt(l2p);
    if (l2p >= 1.0)
        throw SupercriticalError("coupling beyond the closed-form critical point",
                                 f.lambda_plus);
    f.nu1 = std::sqrt(1.0 - l2p);
    f.nu2 = std::sqrt(1.0 + l2m);
    return f;
}

Eigen::VectorXcd signal_mode_state() {
    Eigen::VectorXcd v(2);
    v << 1.0 / std::sqrt(2.0), Complex(0.0, 1.0 / std::sqrt(2.0));
    return v;
}

}  // namespace

double signal_x(const ModelParams& p, double t, int order) {
    if (order != 1 && order != 2)
        throw std::invalid_argument("signal_x: order must be 1 or 2");
    ModeFreqs f = mode_freqs(p, order);
    return std::sin(f.omega * f.nu1 * t) / f.nu1;
}

double variance_x(const ModelParams& p, double t) {
    // Normal-mode second moments for the (|0>+i|1>)/sqrt2 initial state:
    // <Q1^2> starts at 1/omega with <P1^2(0)> = 3 omega/2, mode 2 with
    // omega/2; assembling x = sqrt(omega) (Q1 + Q2) / ... gives
    ModeFreqs f = mode_freqs(p, 2);
    const double s1 = std::sin(f.omega * f.nu1 * t);
    const double s2 = std::sin(f.omega * f.nu2 * t);
    return 2.0 + (0.5 - f.nu1 * f.nu1) * s1 * s1 / (f.nu1 * f.nu1) +
           (0.5 - f.nu2 * f.nu2) * s2 * s2 / (f.nu2 * f.nu2);
}

double variance_x_printed(const ModelParams& p, double t) {
    ModeFreqs f = mode_freqs(p, 2);
    const double n1sq = f.nu1 * f.nu1, n2sq = f.nu2 * f.nu2;
    const double c1 = std::cos(2.0 * f.omega * f.nu1 * t);
    const double c2 = std::cos(2.0 * f.omega * f.nu2 * t);
    const double diff = n1sq - n2sq;
    return (6.0 - diff * diff + (n1sq - 2.0 * std::pow(1.0 - n1sq, 2)) * c1 +
            (n2sq - 2.0 * std::pow(1.0 - n2sq, 2)) * c2) /
           (4.0 * n1sq * n2sq);
}

namespace {

double signal_derivative_closed(const ModelParams& p, double t, SusceptWrt wrt,
                                const SusceptOptions& opts) {
    ModeFreqs f = mode_freqs(p, 2);
    const double phase = f.omega * f.nu1 * t;
    const double s = std::sin(phase), c = std::cos(phase);
    if (wrt == SusceptWrt::Omega) {
        // lambda^2 = 8 g_x g_y / (omega phi) varies with omega unless the
        // caller pins lambda.
        double dnu1_domega = 0.0;
        if (!opts.lambda_fixed)
            dnu1_domega =
                (1.0 + f.epsilon) * f.lambda * f.lambda / (2.0 * f.omega * f.nu1);
        const double dphase_domega = (f.nu1 + f.omega * dnu1_domega) * t;
        return c * dphase_domega / f.nu1 - s * dnu1_domega / (f.nu1 * f.nu1);
    }
    const double dnu1_deps = -f.lambda * f.lambda / (2.0 * f.nu1);
    return c * f.omega * t * dnu1_deps / f.nu1 - s * dnu1_deps / (f.nu1 * f.nu1);
}

double signal_from_simulation(const ModelParams& p, double t, Generator gen,
                              double* variance_out) {
    TimeGrid grid = default_grid(p, gen == Generator::ExactTotal, t, 200);
    grid.dt = grid.t_end / std::ceil(grid.t_end / grid.dt);  // land exactly on t
    Eigen::Vector2cd up(1.0, 0.0);
    QuantumState psi0 =
        QuantumState::product(p.space, up, signal_mode_state(), signal_mode_state());
    TrajectoryRecord rec = evolve_pure(psi0, p, grid, gen);
    if (variance_out) *variance_out = rec.samples.back().var_x;
    return rec.samples.back().x;
}

}  // namespace

double fidelity_susceptibility(const ModelParams& p, double t, SusceptWrt wrt,
                               SusceptMethod method, const SusceptOptions& opts) {
    if (method == SusceptMethod::ClosedForm) {
        const double dsig = signal_derivative_closed(p, t, wrt, opts);
        return dsig / std::sqrt(variance_x(p, t));
    }

    DerivedParams d = derived(p);
    double variance = 0.0;
    double deriv = 0.0;
    if (wrt == SusceptWrt::Omega) {
        const double h = opts.rel_step * p.omega_x;
        if (!(h > 0.0))
            throw NumericalError("fidelity_susceptibility: finite-difference step underflow");
        ModelParams lo = p, hi = p;
        lo.omega_x = lo.omega_y = p.omega_x - h;
        hi.omega_x = hi.omega_y = p.omega_x + h;
        if (opts.lambda_fixed) {
            // keep lambda: rescale the couplings with omega
            const double scale_lo = std::sqrt(lo.omega_x / p.omega_x);
            const double scale_hi = std::sqrt(hi.omega_x / p.omega_x);
            lo.g_x *= scale_lo; lo.g_y *= scale_lo;
            hi.g_x *= scale_hi; hi.g_y *= scale_hi;
        }
        const double xlo = signal_from_simulation(lo, t, opts.fd_generator, nullptr);
        const double xhi = signal_from_simulation(hi, t, opts.fd_generator, nullptr);
        signal_from_simulation(p, t, opts.fd_generator, &variance);
        deriv = (xhi - xlo) / (2.0 * h);
    } else {
        const double heps = opts.rel_step * std::abs(d.epsilon);
        if (!(heps > 0.0))
            throw NumericalError("fidelity_susceptibility: finite-difference step underflow");
        ModelParams lo = p, hi = p;
        lo.delta = (d.epsilon - heps) * p.phi;
        hi.delta = (d.epsilon + heps) * p.phi;
        Generator gen = opts.fd_generator == Generator::Effective1 ? Generator::Effective2
                                                                   : opts.fd_generator;
        const double xlo = signal_from_simulation(lo, t, gen, nullptr);
        const double xhi = signal_from_simulation(hi, t, gen, nullptr);
        signal_from_simulation(p, t, gen, &variance);
        deriv = (xhi - xlo) / (2.0 * heps);
    }
    return deriv / std::sqrt(variance);
}

ScalingFit fit_power_law(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_power_law: need matching arrays, >= 2 points");
    const int n = static_cast<int>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double mean_y = sy / n;
    for (int i = 0; i < n; ++i) {
        const double ly = std::log(y[i]);
        const double fit = intercept + slope * std::log(x[i]);
        ss_res += (ly - fit) * (ly - fit);
        ss_tot += (ly - mean_y) * (ly - mean_y);
    }
    ScalingFit out;
    out.exponent = slope;
    out.prefactor = std::exp(intercept);
    out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    out.conclusive = out.r_squared >= 0.99;
    return out;
}

ScalingFit uncertainty_scaling(const ModelParams& base, ScalingKind kind,
                               std::span<const double> lambda_grid,
                               std::vector<std::pair<double, double>>* points) {
    if (lambda_grid.size() < 6)
        throw std::invalid_argument("uncertainty_scaling: need >= 6 lambda points");
    const int n = static_cast<int>(lambda_grid.size());
    std::vector<double> dist(n), delta(n);

    detail::parallel_for(n, [&](int i) {
        const double lam = lambda_grid[i];
        ModelParams p = base;

        if (kind == ScalingKind::Force) {
            // vary g at fixed omega, gamma: lambda_c is a property of the
            // probe and must not move across the scan
            p.g_x = p.g_y = std::sqrt(lam * lam * p.omega_x * p.phi / 8.0);
            DerivedParams d = derived(p);
            if (lam >= 0.999 * d.lambda_c)
                throw CriticalityError("uncertainty_scaling: grid enters the guard band",
                                       lam, d.lambda_c);
            dist[i] = d.lambda_c - lam;
            delta[i] = 1.0 / std::sqrt(qfi_force(p, QfiMethod::ClosedForm));
            return;
        }
        p.omega_x = p.omega_y = 8.0 * p.g_x * p.g_y / (lam * lam * p.phi);

        const SusceptWrt wrt =
            kind == ScalingKind::Omega ? SusceptWrt::Omega : SusceptWrt::Epsilon;
        ModeFreqs f = mode_freqs(p, 2);
        dist[i] = kind == ScalingKind::Omega ? 1.0 - lam : 1.0 - f.lambda_plus;
        const double t_star = M_PI / (p.omega_x * f.nu1);
        // the optimal readout minimizes the variance near t*
        double best = std::numeric_limits<double>::infinity();
        const int nt = 241;
        for (int k = 0; k < nt; ++k) {
            const double t = (0.8 + 0.4 * k / (nt - 1)) * t_star;
            const double fx =
                fidelity_susceptibility(p, t, wrt, SusceptMethod::ClosedForm);
            if (std::abs(fx) > 0.0) best = std::min(best, 1.0 / std::abs(fx));
        }
        delta[i] = best;
    });

    ScalingFit fit = fit_power_law(dist, delta);
    fit.window_lo = *std::min_element(lambda_grid.begin(), lambda_grid.end());
    fit.window_hi = *std::max_element(lambda_grid.begin(), lambda_grid.end());
    if (points) {
        points->clear();
        for (int i = 0; i < n; ++i) points->emplace_back(dist[i], delta[i]);
    }
    return fit;
}

}  // namespace jt
