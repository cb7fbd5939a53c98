#include <doctest.h>

#include <cmath>
#include <vector>

#include "jtprobe/detail/parallel.hpp"
#include "jtprobe/dynamics.hpp"
#include "jtprobe/gaussian.hpp"

using namespace jt;

// Long-time moments of the density-matrix evolution under the effective
// Liouvillian against the Gaussian steady state on the full parameter grid.
// Cutoff-limited agreement at the percent level.
TEST_CASE("density evolution relaxes onto the Gaussian steady state") {
    struct Combo {
        double lam_rel, gamma_tilde, f_tilde, epsilon;
    };
    std::vector<Combo> combos;
    for (double lr : {0.0, 0.3, 0.6, 0.8})
        for (double gt : {0.5, 2.5})
            for (double ft : {0.0, 1.27})
                for (double eps : {0.0, 0.000625}) combos.push_back({lr, gt, ft, eps});

    std::vector<std::string> failures(combos.size());
    detail::parallel_for(static_cast<int>(combos.size()), [&](int idx) {
        const Combo& c = combos[idx];
        ModelParams p;
        p.omega_x = p.omega_y = 2.0;
        p.phi = 900.0;
        p.delta = c.epsilon * p.phi;
        p.gamma_x = p.gamma_y = c.gamma_tilde * p.omega_x;
        p.force = c.f_tilde * p.omega_x;
        const double lam = c.lam_rel * std::sqrt(1.0 + c.gamma_tilde * c.gamma_tilde);
        p.g_x = p.g_y = std::sqrt(lam * lam * p.omega_x * p.phi / 8.0);
        // strongly squeezed near-critical points carry heavier Fock tails
        const int cutoff = (c.gamma_tilde > 1.0 && c.lam_rel >= 0.75) ? 16 : 12;
        p.space = HilbertSpace(cutoff, cutoff);

        const double rate_tau =
            c.gamma_tilde - (lam > 1.0 ? std::sqrt(lam * lam - 1.0) : 0.0);
        TimeGrid grid = default_grid(p, false, 14.0 / (p.omega_x * rate_tau), 1);
        grid.sample_every = std::max<long>(1, grid.steps());
        TrajectoryRecord rec = evolve_density(QuantumState::vacuum(p.space), p, grid,
                                              Generator::Effective2);
        MomentState sim = moments_from_state(rec.final_state);
        MomentState ss = steady_covariance(p, SteadyMethod::LinearSolve);

        char buf[256];
        const double dev_d = (sim.d - ss.d).cwiseAbs().maxCoeff();
        const double dev_v = (sim.v - ss.v).cwiseAbs().maxCoeff();
        const double scale_d = std::max(1.0, ss.d.cwiseAbs().maxCoeff());
        const double scale_v = std::max(1.0, ss.v.cwiseAbs().maxCoeff());
        if (dev_d > 0.01 * scale_d || dev_v > 0.01 * scale_v) {
            std::snprintf(buf, sizeof(buf),
                          "lam/lc=%.2f gt=%.2f ft=%.3f eps=%.6f: dev_d=%.3g dev_v=%.3g",
                          c.lam_rel, c.gamma_tilde, c.f_tilde, c.epsilon, dev_d, dev_v);
            failures[idx] = buf;
        }
        if (rec.negativity_flagged)
            failures[idx] += " [negativity flagged]";
    });

    for (const auto& f : failures) {
        INFO(f);
        CHECK(f.empty());
    }
}
