#include "jtprobe/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "jtprobe/detail/parallel.hpp"
#include "jtprobe/dynamics.hpp"
#include "jtprobe/gaussian.hpp"
#include "jtprobe/metrology.hpp"
#include "jtprobe/model.hpp"

namespace jt {

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr double kTwoPi = 2.0 * M_PI;

double khz(double nu_khz) { return kTwoPi * nu_khz; }

struct Resolved {
    std::vector<std::pair<std::string, std::string>> ordered;

    const std::string& str(const std::string& key) const {
        for (const auto& [k, v] : ordered)
            if (k == key) return v;
        throw std::invalid_argument("internal: unresolved key " + key);
    }
    double num(const std::string& key) const {
        const std::string& s = str(key);
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument("config: key '" + key + "' is not a number: " + s);
        return v;
    }
    int integer(const std::string& key) const {
        double v = num(key);
        if (v != std::floor(v))
            throw std::invalid_argument("config: key '" + key + "' must be an integer");
        return static_cast<int>(v);
    }
    std::vector<double> list(const std::string& key) const {
        std::vector<double> out;
        std::stringstream ss(str(key));
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) out.push_back(std::stod(item));
        if (out.empty())
            throw std::invalid_argument("config: key '" + key + "' holds an empty list");
        return out;
    }
};

using KeyDefs = std::vector<std::pair<const char*, const char*>>;

Resolved resolve(const RunConfig& cfg, const KeyDefs& defs) {
    Resolved r;
    for (const auto& [k, v] : defs) r.ordered.emplace_back(k, v);
    for (const auto& [k, v] : cfg.overrides) {
        auto it = std::find_if(r.ordered.begin(), r.ordered.end(),
                               [&](const auto& kv) { return kv.first == k; });
        if (it == r.ordered.end())
            throw std::invalid_argument("config: unknown key '" + k + "' for experiment " +
                                        cfg.experiment);
        it->second = v;
    }
    return r;
}

void stamp(ScanResult& result, const std::string& experiment, const Resolved& r) {
    result.add_meta("jt_probe_version", kVersion);
    result.add_meta("experiment", experiment);
    for (const auto& [k, v] : r.ordered) result.add_meta(k, v);
}

std::string lambda_tag(double lam) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "lam%03d", int(std::lround(lam * 100.0)));
    return buf;
}

Eigen::VectorXcd signal_mode() {
    Eigen::VectorXcd v(2);
    v << 1.0 / std::sqrt(2.0), Complex(0.0, 1.0 / std::sqrt(2.0));
    return v;
}

QuantumState signal_state(const HilbertSpace& sp) {
    return QuantumState::product(sp, Eigen::Vector2cd(1.0, 0.0), signal_mode(),
                                 signal_mode());
}

// lambda fixes omega once g and phi are set: omega = 8 g^2 / (lambda^2 phi)
double omega_from_lambda(double lam, double g_x, double g_y, double phi) {
    return 8.0 * g_x * g_y / (lam * lam * phi);
}

double coupling_from_lambda(double lam, double omega, double phi) {
    return std::sqrt(lam * lam * omega * phi / 8.0);
}

// ---------------------------------------------------------------- fig1 --

const KeyDefs kFig1aKeys = {
    {"g_khz", "5.0"},          {"phi_khz", "1100"},
    {"delta_khz", "0"},        {"lambda_list", "0.9,0.93,0.95"},
    {"n_x", "40"},             {"n_y", "40"},
    {"steps_per_period", "64"}, {"samples", "800"},
};

ScanResult run_fig1a(const RunConfig& cfg) {
    Resolved r = resolve(cfg, kFig1aKeys);
    const std::vector<double> lambdas = r.list("lambda_list");
    const double g = khz(r.num("g_khz"));
    const double phi = khz(r.num("phi_khz"));
    const double delta = khz(r.num("delta_khz"));
    const HilbertSpace space(r.integer("n_x"), r.integer("n_y"));

    std::vector<ModelParams> params;
    double t_end = 0.0;
    for (double lam : lambdas) {
        ModelParams p;
        p.g_x = p.g_y = g;
        p.phi = phi;
        p.delta = delta;
        p.omega_x = p.omega_y = omega_from_lambda(lam, g, g, phi);
        p.space = space;
        DerivedParams d = derived(p);
        if (!d.nu1_real)
            throw SupercriticalError("fig1a: lambda must be < 1", d.lambda);
        t_end = std::max(t_end, kTwoPi / (p.omega_x * d.nu1));
        params.push_back(p);
    }

    TimeGrid grid;
    grid.t_end = t_end;
    grid.dt = (kTwoPi / phi) / r.integer("steps_per_period");
    grid.sample_every = std::max<long>(1, grid.steps() / r.integer("samples"));

    std::vector<TrajectoryRecord> recs(params.size());
    detail::parallel_for(static_cast<int>(params.size()), [&](int i) {
        recs[i] = evolve_pure(signal_state(space), params[i], grid, Generator::ExactTotal);
    });

    ScanResult result;
    stamp(result, cfg.experiment, r);
    result.columns.push_back("t_ms");
    for (size_t i = 0; i < lambdas.size(); ++i) {
        const std::string tag = lambda_tag(lambdas[i]);
        result.columns.push_back("x_exact_" + tag);
        result.columns.push_back("x_analytic_" + tag);
        result.add_meta("omega_khz_" + tag, params[i].omega_x / kTwoPi);
        result.add_meta("max_leak_" + tag,
                        std::max(recs[i].max_leak_x, recs[i].max_leak_y));
        result.converged = result.converged && recs[i].converged;
    }
    for (size_t k = 0; k < recs[0].samples.size(); ++k) {
        std::vector<double> row;
        row.push_back(recs[0].samples[k].t);
        for (size_t i = 0; i < lambdas.size(); ++i) {
            row.push_back(recs[i].samples[k].x);
            row.push_back(signal_x(params[i], recs[i].samples[k].t, 2));
        }
        result.add_row(std::move(row));
    }
    return result;
}

const KeyDefs kFig1bKeys = {
    {"g_khz", "5.0"},  {"phi_khz", "1100"},        {"delta_khz", "0"},
    {"lambda", "0.93"}, {"n_x", "40"},              {"n_y", "40"},
    {"steps_per_period", "64"}, {"samples", "800"},
};

ScanResult run_fig1b(const RunConfig& cfg) {
    Resolved r = resolve(cfg, kFig1bKeys);
    const double lam = r.num("lambda");
    const double g = khz(r.num("g_khz"));
    ModelParams p;
    p.g_x = p.g_y = g;
    p.phi = khz(r.num("phi_khz"));
    p.delta = khz(r.num("delta_khz"));
    p.omega_x = p.omega_y = omega_from_lambda(lam, g, g, p.phi);
    p.space = HilbertSpace(r.integer("n_x"), r.integer("n_y"));
    DerivedParams d = derived(p);
    if (!d.nu1_real) throw SupercriticalError("fig1b: lambda must be < 1", d.lambda);

    TimeGrid grid;
    grid.t_end = kTwoPi / (p.omega_x * d.nu1);
    grid.dt = p.drive_period() / r.integer("steps_per_period");
    grid.sample_every = std::max<long>(1, grid.steps() / r.integer("samples"));
    TrajectoryRecord rec = evolve_pure(signal_state(p.space), p, grid, Generator::ExactTotal);

    ScanResult result;
    stamp(result, cfg.experiment, r);
    result.add_meta("omega_khz_resolved", p.omega_x / kTwoPi);
    result.converged = rec.converged;
    result.columns = {"t_ms", "dx_exact", "dx_analytic"};
    for (const auto& s : rec.samples)
        result.add_row({s.t, std::sqrt(std::max(0.0, s.var_x)),
                        std::sqrt(variance_x(p, s.t))});
    return result;
}

// ---------------------------------------------------------------- fig2 --

const KeyDefs kFig2Keys = {
    {"g_khz", "5.0"},
    {"phi_khz", "1100"},
    {"delta_khz", "0"},
    {"lambda_list", "0.9,0.93,0.95"},
    {"t_points", "400"},
};

ScanResult run_fig2(const RunConfig& cfg) {
    Resolved r = resolve(cfg, kFig2Keys);
    const std::vector<double> lambdas = r.list("lambda_list");
    const double g = khz(r.num("g_khz"));
    const double phi = khz(r.num("phi_khz"));
    const double delta = khz(r.num("delta_khz"));
    const int nt = r.integer("t_points");

    std::vector<ModelParams> params;
    double t_max = 0.0;
    for (double lam : lambdas) {
        ModelParams p;
        p.g_x = p.g_y = g;
        p.phi = phi;
        p.delta = delta;
        p.omega_x = p.omega_y = omega_from_lambda(lam, g, g, phi);
        p.space = HilbertSpace(2, 2);
        DerivedParams d = derived(p);
        if (!d.nu1_real) throw SupercriticalError("fig2: lambda must be < 1", d.lambda);
        t_max = std::max(t_max, 1.05 * M_PI / (p.omega_x * d.nu1));
        params.push_back(p);
    }

    ScanResult result;
    stamp(result, cfg.experiment, r);
    result.columns.push_back("t_ms");
    for (double lam : lambdas) result.columns.push_back("fx_" + lambda_tag(lam));
    for (int k = 1; k <= nt; ++k) {
        const double t = t_max * k / nt;
        std::vector<double> row{t};
        for (const auto& p : params)
            row.push_back(
                fidelity_susceptibility(p, t, SusceptWrt::Omega, SusceptMethod::ClosedForm));
        result.add_row(std::move(row));
    }
    return result;
}

// ---------------------------------------------------------------- fig3 --

const KeyDefs kFig3Keys = {
    {"omega_khz", "0.2"},  {"delta_khz", "0.5"},
    {"phi_khz", "800"},    {"gamma_khz", "0.5"},
    {"f_tilde", "1.27"},   {"dephasing_khz", "2.5"},
    {"lam_rel_list", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8"},
    {"n_x", "12"},         {"n_y", "12"},
    {"settle_factor", "12"},
};

struct Fig3Point {
    double g_khz, lambda, lam_rel;
    double v11_sim, v22_sim, nx_sim, ny_sim;
    double v11_closed, v22_closed, nx_closed, ny_closed;
    bool converged;
};

std::vector<Fig3Point> fig3_scan(const Resolved& r) {
    const double omega = khz(r.num("omega_khz"));
    const double gamma = khz(r.num("gamma_khz"));
    const double gt = gamma / omega;
    const double lambda_c = std::sqrt(1.0 + gt * gt);
    const std::vector<double> rels = r.list("lam_rel_list");
    const HilbertSpace space(r.integer("n_x"), r.integer("n_y"));
    const double settle = r.num("settle_factor");

    std::vector<Fig3Point> points(rels.size());
    detail::parallel_for(static_cast<int>(rels.size()), [&](int i) {
        const double lam = rels[i] * lambda_c;
        ModelParams p;
        p.omega_x = p.omega_y = omega;
        p.delta = khz(r.num("delta_khz"));
        p.phi = khz(r.num("phi_khz"));
        p.gamma_x = p.gamma_y = gamma;
        p.gamma_dephase = khz(r.num("dephasing_khz"));
        p.force = r.num("f_tilde") * omega;
        p.g_x = p.g_y = coupling_from_lambda(lam, omega, p.phi);
        p.space = space;

        const double rate_tau = gt - (lam > 1.0 ? std::sqrt(lam * lam - 1.0) : 0.0);
        TimeGrid grid = default_grid(p, false, settle / (omega * rate_tau), 1);
        grid.sample_every = std::max<long>(1, grid.steps());
        TrajectoryRecord rec =
            evolve_density(QuantumState::vacuum(space), p, grid, Generator::Effective2);

        MomentState sim = moments_from_state(rec.final_state);
        ModelParams p0 = p;
        p0.delta = 0.0;  // printed covariance forms are the epsilon = 0 limit
        MomentState closed = steady_covariance(p0, SteadyMethod::ClosedForm);
        auto [nxc, nyc] = steady_phonons(p);

        Fig3Point& pt = points[i];
        pt.g_khz = p.g_x / kTwoPi;
        pt.lambda = lam;
        pt.lam_rel = rels[i];
        pt.v11_sim = sim.v(0, 0);
        pt.v22_sim = sim.v(1, 1);
        pt.nx_sim = rec.samples.back().n_x;
        pt.ny_sim = rec.samples.back().n_y;
        pt.v11_closed = closed.v(0, 0);
        pt.v22_closed = closed.v(1, 1);
        pt.nx_closed = nxc;
        pt.ny_closed = nyc;
        pt.converged = rec.converged && !rec.negativity_flagged;
    });
    return points;
}

ScanResult run_fig3(const RunConfig& cfg, bool covariance_view) {
    Resolved r = resolve(cfg, kFig3Keys);
    std::vector<Fig3Point> pts = fig3_scan(r);
    ScanResult result;
    stamp(result, cfg.experiment, r);
    if (covariance_view)
        result.columns = {"g_khz", "lambda", "lam_rel", "v11_sim", "v22_sim",
                          "v11_closed", "v22_closed"};
    else
        result.columns = {"g_khz", "lambda", "lam_rel", "nx_sim", "ny_sim",
                          "nx_closed", "ny_closed"};
    for (const auto& pt : pts) {
        if (covariance_view)
            result.add_row({pt.g_khz, pt.lambda, pt.lam_rel, pt.v11_sim, pt.v22_sim,
                            pt.v11_closed, pt.v22_closed});
        else
            result.add_row({pt.g_khz, pt.lambda, pt.lam_rel, pt.nx_sim, pt.ny_sim,
                            pt.nx_closed, pt.ny_closed});
        result.converged = result.converged && pt.converged;
    }
    return result;
}

// ---------------------------------------------------------------- fig4 --

const KeyDefs kFig4aKeys = {
    {"omega_khz", "0.5"},  {"phi_khz", "1400"},     {"delta_khz", "0"},
    {"dephasing_khz", "2.0"}, {"lambda", "0.6"},    {"n_x", "10"},
    {"n_y", "10"},         {"steps_per_period", "48"}, {"samples", "400"},
};

ScanResult run_fig4a(const RunConfig& cfg) {
    Resolved r = resolve(cfg, kFig4aKeys);
    const double omega = khz(r.num("omega_khz"));
    const double lam = r.num("lambda");
    ModelParams p;
    p.omega_x = p.omega_y = omega;
    p.phi = khz(r.num("phi_khz"));
    p.delta = khz(r.num("delta_khz"));
    p.g_x = p.g_y = coupling_from_lambda(lam, omega, p.phi);
    p.space = HilbertSpace(r.integer("n_x"), r.integer("n_y"));
    DerivedParams d = derived(p);

    TimeGrid grid;
    grid.t_end = kTwoPi / (omega * d.nu1);
    grid.dt = p.drive_period() / r.integer("steps_per_period");
    grid.sample_every = std::max<long>(1, grid.steps() / r.integer("samples"));

    ModelParams p_deph = p;
    p_deph.gamma_dephase = khz(r.num("dephasing_khz"));

    TrajectoryRecord rec_deph, rec_coh;
    detail::parallel_for(2, [&](int i) {
        if (i == 0)
            rec_deph = evolve_density(signal_state(p.space).to_density(), p_deph, grid,
                                      Generator::ExactTotal);
        else
            rec_coh = evolve_pure(signal_state(p.space), p, grid, Generator::ExactTotal);
    });

    ScanResult result;
    stamp(result, cfg.experiment, r);
    result.add_meta("g_khz_resolved", p.g_x / kTwoPi);
    result.converged = rec_deph.converged && rec_coh.converged;
    result.columns = {"t_ms", "x_dephased", "x_coherent", "nx_dephased", "nx_coherent"};
    const size_t n = std::min(rec_deph.samples.size(), rec_coh.samples.size());
    for (size_t k = 0; k < n; ++k)
        result.add_row({rec_deph.samples[k].t, rec_deph.samples[k].x, rec_coh.samples[k].x,
                        rec_deph.samples[k].n_x, rec_coh.samples[k].n_x});
    return result;
}

const KeyDefs kFig4bKeys = {
    {"omega_anchor_khz", "0.5"},
    {"phi_anchor_khz", "1400"},
    {"lambda", "0.6"},
    {"phi_list_khz", "1400,1600,2000"},
    {"gamma_list_khz", "0,1.25,2.5"},
    {"n_x", "10"},
    {"n_y", "10"},
    {"steps_per_period", "48"},
};

ScanResult run_fig4b(const RunConfig& cfg) {
    Resolved r = resolve(cfg, kFig4bKeys);
    const double lam = r.num("lambda");
    const double omega0 = khz(r.num("omega_anchor_khz"));
    const double phi0 = khz(r.num("phi_anchor_khz"));

    ModelParams base;
    base.omega_x = base.omega_y = omega0;
    base.phi = phi0;
    base.g_x = base.g_y = coupling_from_lambda(lam, omega0, phi0);
    base.space = HilbertSpace(r.integer("n_x"), r.integer("n_y"));

    std::vector<double> phis;
    for (double v : r.list("phi_list_khz")) phis.push_back(khz(v));
    std::vector<double> gammas;
    for (double v : r.list("gamma_list_khz")) gammas.push_back(khz(v));

    ScanResult result = dephasing_scan(base, phis, gammas, r.integer("steps_per_period"));
    ScanResult out;
    stamp(out, cfg.experiment, r);
    out.add_meta("g_khz_resolved", base.g_x / kTwoPi);
    out.columns = result.columns;
    out.rows = result.rows;
    out.converged = result.converged;
    return out;
}

// ------------------------------------------------------------- scaling --

const KeyDefs kScalingOmegaKeys = {
    {"g_khz", "5.0"},   {"phi_khz", "1100"}, {"delta_khz", "0"},
    {"lambda_min", "0.9"}, {"lambda_max", "0.99"}, {"points", "10"},
};

const KeyDefs kScalingForceKeys = {
    {"omega_khz", "1.0"},  {"gamma_khz", "0.5"}, {"phi_khz", "1100"},
    {"f_tilde", "1.0"},    {"lam_rel_min", "0.9"}, {"lam_rel_max", "0.995"},
    {"points", "10"},
};

ScanResult run_scaling(const RunConfig& cfg, ScalingKind kind) {
    const bool force = kind == ScalingKind::Force;
    Resolved r = resolve(cfg, force ? kScalingForceKeys : kScalingOmegaKeys);

    ModelParams base;
    base.phi = khz(r.num("phi_khz"));
    base.space = HilbertSpace(2, 2);
    std::vector<double> grid;
    const int n = r.integer("points");
    if (force) {
        base.omega_x = base.omega_y = khz(r.num("omega_khz"));
        base.gamma_x = base.gamma_y = khz(r.num("gamma_khz"));
        base.force = r.num("f_tilde") * base.omega_x;
        base.g_x = base.g_y = 1.0;  // replaced per grid point
        const double gt = base.gamma_x / base.omega_x;
        const double lc = std::sqrt(1.0 + gt * gt);
        const double lo = r.num("lam_rel_min"), hi = r.num("lam_rel_max");
        for (int i = 0; i < n; ++i)
            grid.push_back(lc * (lo + (hi - lo) * i / (n - 1)));
    } else {
        base.g_x = base.g_y = khz(r.num("g_khz"));
        base.delta = khz(r.num("delta_khz"));
        base.omega_x = base.omega_y = 1.0;  // replaced per grid point
        const double lo = r.num("lambda_min"), hi = r.num("lambda_max");
        for (int i = 0; i < n; ++i) grid.push_back(lo + (hi - lo) * i / (n - 1));
    }

    std::vector<std::pair<double, double>> pts;
    ScalingFit fit = uncertainty_scaling(base, kind, grid, &pts);

    ScanResult result;
    stamp(result, cfg.experiment, r);
    result.add_meta("exponent", fit.exponent);
    result.add_meta("prefactor", fit.prefactor);
    result.add_meta("r_squared", fit.r_squared);
    result.add_meta("conclusive", fit.conclusive ? "1" : "0");
    result.converged = fit.conclusive;
    result.columns = {"lambda", "distance", "delta"};
    for (size_t i = 0; i < grid.size(); ++i)
        result.add_row({grid[i], pts[i].first, pts[i].second});
    return result;
}

// -------------------------------------------------------------- steady --

const KeyDefs kSteadyKeys = {
    {"omega_khz", "1.0"}, {"gamma_khz", "0.5"}, {"delta_khz", "0"},
    {"phi_khz", "1100"},  {"f_tilde", "1.0"},   {"lambda", "0.5"},
    {"method", "linear-solve"},
};

ScanResult run_steady(const RunConfig& cfg) {
    Resolved r = resolve(cfg, kSteadyKeys);
    ModelParams p;
    p.omega_x = p.omega_y = khz(r.num("omega_khz"));
    p.gamma_x = p.gamma_y = khz(r.num("gamma_khz"));
    p.delta = khz(r.num("delta_khz"));
    p.phi = khz(r.num("phi_khz"));
    p.force = r.num("f_tilde") * p.omega_x;
    p.g_x = p.g_y = coupling_from_lambda(r.num("lambda"), p.omega_x, p.phi);
    p.space = HilbertSpace(2, 2);

    const std::string& method_name = r.str("method");
    SteadyMethod method;
    if (method_name == "linear-solve")
        method = SteadyMethod::LinearSolve;
    else if (method_name == "closed-form")
        method = SteadyMethod::ClosedForm;
    else
        throw std::invalid_argument("steady: method must be linear-solve or closed-form");

    DerivedParams d = derived(p);
    SteadyState s = steady_state(p, method);
    const double qfi_general = qfi_force(p, QfiMethod::GaussianGeneral);
    const double qfi_closed = qfi_force(p, QfiMethod::ClosedForm);

    ScanResult result;
    stamp(result, cfg.experiment, r);
    result.columns = {"lambda", "lambda_c", "d_x",  "d_px", "d_y",  "d_py",
                      "v11",    "v12",      "v13",  "v14",  "v22",  "v23",
                      "v24",    "v33",      "v34",  "v44",  "n_x",  "n_y",
                      "qfi_closed", "qfi_general"};
    const auto& m = s.moment;
    result.add_row({d.lambda, d.lambda_c, m.d(0), m.d(1), m.d(2), m.d(3),
                    m.v(0, 0), m.v(0, 1), m.v(0, 2), m.v(0, 3), m.v(1, 1), m.v(1, 2),
                    m.v(1, 3), m.v(2, 2), m.v(2, 3), m.v(3, 3), s.n_x, s.n_y,
                    qfi_closed, qfi_general});
    return result;
}

// -------------------------------------------------------------- custom --

const KeyDefs kCustomKeys = {
    {"omega_khz", "1.0"},  {"delta_khz", "0"},   {"g_khz", "0"},
    {"phi_khz", "1100"},   {"gamma_khz", "0"},   {"dephasing_khz", "0"},
    {"f_tilde", "0"},      {"t_end_ms", "1.0"},  {"n_x", "8"},
    {"n_y", "8"},          {"generator", "exact"}, {"state", "pure"},
    {"initial", "vacuum"}, {"steps_per_period", "64"}, {"dt_us", "0"},
    {"samples", "500"},
};

struct CustomSetup {
    ModelParams params;
    TimeGrid grid;
    Generator gen = Generator::ExactTotal;
    bool density = false;
    QuantumState initial;
};

CustomSetup custom_setup(const Resolved& r) {
    CustomSetup c;
    ModelParams& p = c.params;
    p.omega_x = p.omega_y = khz(r.num("omega_khz"));
    p.delta = khz(r.num("delta_khz"));
    p.g_x = p.g_y = khz(r.num("g_khz"));
    p.phi = khz(r.num("phi_khz"));
    p.gamma_x = p.gamma_y = khz(r.num("gamma_khz"));
    p.gamma_dephase = khz(r.num("dephasing_khz"));
    p.force = r.num("f_tilde") * p.omega_x;
    p.space = HilbertSpace(r.integer("n_x"), r.integer("n_y"));

    const std::string& gen_name = r.str("generator");
    if (gen_name == "exact")
        c.gen = Generator::ExactTotal;
    else if (gen_name == "effective1")
        c.gen = Generator::Effective1;
    else if (gen_name == "effective2")
        c.gen = Generator::Effective2;
    else
        throw std::invalid_argument("custom: generator must be exact|effective1|effective2");

    const std::string& state_name = r.str("state");
    if (state_name == "pure")
        c.density = false;
    else if (state_name == "density")
        c.density = true;
    else
        throw std::invalid_argument("custom: state must be pure|density");
    if (!c.density && (p.gamma_x > 0 || p.gamma_y > 0 || p.gamma_dephase > 0))
        c.density = true;  // dissipation forces a density run

    const bool drive = c.gen == Generator::ExactTotal;
    c.grid = default_grid(p, drive, r.num("t_end_ms"), r.integer("samples"));
    if (drive) c.grid.dt = p.drive_period() / r.integer("steps_per_period");
    if (r.num("dt_us") > 0.0) c.grid.dt = r.num("dt_us") * 1e-3;
    c.grid.dt = c.grid.t_end / std::ceil(c.grid.t_end / c.grid.dt);  // land on t_end
    c.grid.sample_every = std::max<long>(1, c.grid.steps() / r.integer("samples"));

    const std::string& init_name = r.str("initial");
    if (init_name == "vacuum")
        c.initial = QuantumState::vacuum(p.space);
    else if (init_name == "signal")
        c.initial = signal_state(p.space);
    else
        throw std::invalid_argument("custom: initial must be vacuum|signal");
    if (c.density) c.initial = c.initial.to_density();
    return c;
}

ScanResult trajectory_table(const RunConfig& cfg, const Resolved& r,
                            const TrajectoryRecord& rec) {
    ScanResult result;
    stamp(result, cfg.experiment, r);
    result.converged = rec.converged;
    result.columns = {"t_ms", "x",   "p_x", "y",      "p_y",    "var_x",     "var_y",
                      "n_x",  "n_y", "sz",  "leak_x", "leak_y", "norm_drift"};
    for (const auto& s : rec.samples)
        result.add_row({s.t, s.x, s.p_x, s.y, s.p_y, s.var_x, s.var_y, s.n_x, s.n_y, s.sz,
                        s.leak_x, s.leak_y, s.norm_drift});
    return result;
}

ScanResult run_custom(const RunConfig& cfg) {
    Resolved r = resolve(cfg, kCustomKeys);
    CustomSetup c = custom_setup(r);
    TrajectoryRecord rec = c.density ? evolve_density(c.initial, c.params, c.grid, c.gen)
                                     : evolve_pure(c.initial, c.params, c.grid, c.gen);
    return trajectory_table(cfg, r, rec);
}

// -------------------------------------------------------- registration --

struct ExperimentDef {
    const char* name;
    const char* description;
    const KeyDefs* keys;
    std::function<ScanResult(const RunConfig&)> runner;
};

const std::vector<ExperimentDef>& experiment_table() {
    static const std::vector<ExperimentDef> table = {
        {"fig1a", "position quadrature <x(t)>, exact drive vs closed form",
         &kFig1aKeys, run_fig1a},
        {"fig1b", "position variance Delta x(t), exact drive vs closed form",
         &kFig1bKeys, run_fig1b},
        {"fig2", "fidelity susceptibility F_x(t) for several couplings", &kFig2Keys,
         run_fig2},
        {"fig3a", "steady covariance V11, V22 vs coupling, simulation vs closed form",
         &kFig3Keys, [](const RunConfig& c) { return run_fig3(c, true); }},
        {"fig3b", "steady phonon numbers vs coupling, simulation vs closed form",
         &kFig3Keys, [](const RunConfig& c) { return run_fig3(c, false); }},
        {"fig4a", "x(t) and n_x(t) with spin dephasing vs coherent reference",
         &kFig4aKeys, run_fig4a},
        {"fig4b", "x(t*) vs dephasing rate for several drive frequencies", &kFig4bKeys,
         run_fig4b},
        {"scaling-omega", "frequency estimation uncertainty vs (1-lambda) power-law fit",
         &kScalingOmegaKeys,
         [](const RunConfig& c) { return run_scaling(c, ScalingKind::Omega); }},
        {"scaling-epsilon", "spin-frequency estimation uncertainty power-law fit",
         &kScalingOmegaKeys,
         [](const RunConfig& c) { return run_scaling(c, ScalingKind::Epsilon); }},
        {"scaling-force", "force estimation uncertainty vs (lambda_c-lambda) fit",
         &kScalingForceKeys,
         [](const RunConfig& c) { return run_scaling(c, ScalingKind::Force); }},
        {"steady", "steady-state moments, phonons and QFI at one parameter point",
         &kSteadyKeys, run_steady},
        {"custom", "single trajectory with explicit parameters", &kCustomKeys,
         run_custom},
    };
    return table;
}

const ExperimentDef& find_experiment(const std::string& name) {
    for (const auto& def : experiment_table())
        if (name == def.name) return def;
    throw std::invalid_argument("unknown experiment '" + name + "'");
}

}  // namespace

void RunConfig::set(const std::string& assignment) {
    auto pos = assignment.find('=');
    if (pos == std::string::npos || pos == 0)
        throw std::invalid_argument("expected key=value, got '" + assignment + "'");
    std::string key = assignment.substr(0, pos);
    std::string value = assignment.substr(pos + 1);
    auto strip = [](std::string& s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(s.begin());
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    };
    strip(key);
    strip(value);
    if (key.empty() || value.empty())
        throw std::invalid_argument("expected key=value, got '" + assignment + "'");
    overrides[key] = value;
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file " + path);
    std::string line;
    while (std::getline(f, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        bool blank = true;
        for (char ch : line)
            if (!std::isspace(static_cast<unsigned char>(ch))) blank = false;
        if (blank) continue;
        set(line);
    }
}

std::vector<ExperimentInfo> list_experiments() {
    std::vector<ExperimentInfo> out;
    for (const auto& def : experiment_table()) out.push_back({def.name, def.description});
    return out;
}

std::map<std::string, std::string> default_parameters(const std::string& experiment) {
    const ExperimentDef& def = find_experiment(experiment);
    std::map<std::string, std::string> out;
    for (const auto& [k, v] : *def.keys) out[k] = v;
    return out;
}

ScanResult run_experiment(const RunConfig& config) {
    const ExperimentDef& def = find_experiment(config.experiment);
    ScanResult result = def.runner(config);
    if (!config.out_path.empty()) write_csv(result, config.out_path);
    return result;
}

ScanResult convergence_report(const RunConfig& config) {
    // Reuses the custom-trajectory machinery: the experiment parameters are
    // resolved, then the run is repeated over a cutoff sweep and dt halvings.
    if (config.experiment != "custom")
        throw std::invalid_argument(
            "convergence_report: only the 'custom' experiment is supported; express the "
            "run of interest through its parameters");
    RunConfig base = config;
    std::map<std::string, std::string> extra = base.overrides;
    std::string cutoff_list = "8,11,14";
    if (auto it = extra.find("cutoff_list"); it != extra.end()) {
        cutoff_list = it->second;
        base.overrides.erase("cutoff_list");
    }

    Resolved r0 = resolve(base, kCustomKeys);
    std::vector<double> cutoffs;
    {
        std::stringstream ss(cutoff_list);
        std::string item;
        while (std::getline(ss, item, ',')) cutoffs.push_back(std::stod(item));
    }
    if (cutoffs.size() < 2)
        throw std::invalid_argument("convergence_report: need at least two cutoffs");

    auto run_at = [&](int n, double dt_scale) {
        RunConfig c = base;
        c.overrides["n_x"] = std::to_string(n);
        c.overrides["n_y"] = std::to_string(n);
        Resolved r = resolve(c, kCustomKeys);
        CustomSetup setup = custom_setup(r);
        setup.grid.dt *= dt_scale;
        setup.grid.dt = setup.grid.t_end / std::ceil(setup.grid.t_end / setup.grid.dt);
        setup.grid.sample_every = std::max<long>(1, setup.grid.steps());
        return setup.density
                   ? evolve_density(setup.initial, setup.params, setup.grid, setup.gen)
                   : evolve_pure(setup.initial, setup.params, setup.grid, setup.gen);
    };
    auto observables = [](const TrajectoryRecord& rec) {
        const TrajectorySample& s = rec.samples.back();
        return std::vector<double>{s.x, s.p_x, s.y, s.p_y, s.var_x,
                                   s.var_y, s.n_x, s.n_y, s.sz};
    };
    auto max_dev = [](const std::vector<double>& a, const std::vector<double>& b) {
        double m = 0.0;
        for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
        return m;
    };

    ScanResult result;
    result.add_meta("jt_probe_version", kVersion);
    result.add_meta("experiment", "converge:" + config.experiment);
    for (const auto& [k, v] : r0.ordered) result.add_meta(k, v);
    result.add_meta("cutoff_list", cutoff_list);
    result.columns = {"n", "dt_scale", "x", "var_x", "n_x",
                      "leak_x", "leak_y", "norm_drift", "dev_from_prev"};

    std::vector<double> prev;
    int first_converged = -1;
    for (double nc : cutoffs) {
        const int n = static_cast<int>(nc);
        TrajectoryRecord rec = run_at(n, 1.0);
        std::vector<double> obs = observables(rec);
        const double dev = prev.empty() ? 0.0 : max_dev(prev, obs);
        result.add_row({double(n), 1.0, obs[0], obs[4], obs[6], rec.max_leak_x,
                        rec.max_leak_y, rec.max_norm_drift, dev});
        if (first_converged < 0 && rec.converged) first_converged = n;
        prev = obs;
    }
    result.add_meta("first_converged_cutoff", double(first_converged));

    // RK4 order check at the largest cutoff: halving dt twice should shrink
    // the defect by ~16 per halving.
    const int n_big = static_cast<int>(cutoffs.back());
    TrajectoryRecord r1 = run_at(n_big, 1.0);
    TrajectoryRecord r2 = run_at(n_big, 0.5);
    TrajectoryRecord r4 = run_at(n_big, 0.25);
    const double dev_coarse = max_dev(observables(r1), observables(r2));
    const double dev_fine = max_dev(observables(r2), observables(r4));
    result.add_row({double(n_big), 0.5, observables(r2)[0], observables(r2)[4],
                    observables(r2)[6], r2.max_leak_x, r2.max_leak_y, r2.max_norm_drift,
                    dev_coarse});
    result.add_row({double(n_big), 0.25, observables(r4)[0], observables(r4)[4],
                    observables(r4)[6], r4.max_leak_x, r4.max_leak_y, r4.max_norm_drift,
                    dev_fine});
    const bool saturated = dev_fine < 1e-13;
    const double ratio = saturated ? 0.0 : dev_coarse / dev_fine;
    result.add_meta("rk4_dev_coarse", dev_coarse);
    result.add_meta("rk4_dev_fine", dev_fine);
    result.add_meta("rk4_ratio", ratio);
    result.add_meta("rk4_ok", (saturated || (ratio >= 8.0 && ratio <= 32.0)) ? "1" : "0");

    if (!config.out_path.empty()) write_csv(result, config.out_path);
    return result;
}

}  // namespace jt
