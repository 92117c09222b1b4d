#include "riskmfg/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "riskmfg/io.hpp"

namespace riskmfg {

namespace {

constexpr double kMassGrowth = 1e-6;

int step_count(double T, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
    const double r = T / dt;
    const double n = std::round(r);
    if (n < 1.0 || std::abs(r - n) > 1e-9 * std::max(1.0, r)) throw ConfigError("dt does not divide T");
    return static_cast<int>(n);
}

double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double trapz(const double* p, std::size_t n, double h) {
    double s = 0.5 * (p[0] + p[n - 1]);
    for (std::size_t j = 1; j + 1 < n; ++j) s += p[j];
    return s * h;
}

Isa resolve(const FpOptions& opt) {
    const Isa isa = opt.isa.value_or(best_isa());
    if (!isa_available(isa)) throw ConfigError("instruction set " + to_string(isa) + " not available");
    return isa;
}

std::vector<double> time_nodes(double T, int steps) {
    std::vector<double> t(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i) t[i] = i == steps ? T : T * i / steps;
    return t;
}

bool keep_snapshot(int i, int steps, int snapshots) {
    if (i == 0 || i == steps) return true;
    if (snapshots <= 0) return false;
    const int stride = std::max(1, steps / snapshots);
    return i % stride == 0;
}

void require_stable(const StabilityReport& r, double dt, const char* what) {
    if (r.ok) return;
    std::ostringstream os;
    os << what << ": dt=" << dt << " violates the explicit-scheme bound; " << r.message;
    throw NumericalError(os.str());
}

std::vector<double> initial_1d(const SpatialGrid1D& g, bool point, double mean, double std) {
    std::vector<double> p(g.nodes, 0.0);
    if (point || std == 0.0) {
        const double pos = (mean - g.lower) / g.dx;
        const auto j = static_cast<long>(std::lround(pos));
        if (j >= 1 && j <= static_cast<long>(g.nodes) - 2) p[static_cast<std::size_t>(j)] = 1.0 / g.dx;
        return p;
    }
    for (std::size_t j = 1; j + 1 < g.nodes; ++j) p[j] = phi((g.x(j) - mean) / std) / std;
    return p;
}

struct Tracker {
    double initial_mass = 0.0;
    double min_value = 0.0;
    const char* what;

    void check(double mass, double t) {
        if (!std::isfinite(mass)) {
            std::ostringstream os;
            os << what << ": non-finite density at t=" << t << " (explicit scheme unstable; refine dt)";
            throw NumericalError(os.str());
        }
        if (mass > initial_mass * (1.0 + kMassGrowth) + 1e-300) {
            std::ostringstream os;
            os << what << ": survival mass grew from " << initial_mass << " to " << mass << " at t=" << t
               << " (explicit scheme unstable; refine dt or dx)";
            throw NumericalError(os.str());
        }
    }
};

double min_of(const std::vector<double>& p) { return *std::min_element(p.begin(), p.end()); }

nlohmann::json grid_json(const SpatialGrid1D& g) {
    return {{"lower", g.lower}, {"upper", g.upper}, {"dx", g.dx}, {"nodes", g.nodes}};
}

struct Run1D {
    const SpatialGrid1D& grid;
    double T;
    int steps;
    const FpOptions& opt;
    DensityEvolution& e;
    Tracker tr;
    Isa isa;

    template <class StencilAt>
    void run(std::vector<double> p, StencilAt stencil_at) {
        DenormalGuard ftz;
        const double dt = T / steps;
        e.t = time_nodes(T, steps);
        e.dt = dt;
        e.grid = grid;
        e.scheme = opt.scheme;
        double m0 = e.integrate(p);
        if (opt.renormalize_initial && m0 > 0.0) {
            for (auto& v : p) v /= m0;
            m0 = e.integrate(p);
        }
        tr.initial_mass = m0;
        tr.min_value = min_of(p);
        e.mass.assign(e.t.size(), 0.0);
        e.mass[0] = m0;
        e.snapshot_t.push_back(0.0);
        e.snapshots.push_back(p);
        std::vector<double> q(p.size());
        for (int i = 0; i < steps; ++i) {
            const Stencil1D s = stencil_at(i, dt);
            step1d(p.data(), q.data(), p.size(), s, isa);
            p.swap(q);
            const auto [m, lo] = e.measure(p, isa);
            tr.check(m, e.t[i + 1]);
            tr.min_value = std::min(tr.min_value, lo);
            e.mass[i + 1] = m;
            if (keep_snapshot(i + 1, steps, opt.snapshots)) {
                e.snapshot_t.push_back(e.t[i + 1]);
                e.snapshots.push_back(p);
            }
        }
        e.min_value = tr.min_value;
        e.metadata["grid"] = grid_json(grid);
        e.metadata["dt"] = dt;
        e.metadata["steps"] = steps;
        e.metadata["scheme"] = to_string(opt.scheme);
        e.metadata["isa"] = to_string(isa);
    }
};

double max_abs_over(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double max_over(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

/// max over t nodes and x in [lo, hi] of |slope x + shift| for affine coefficients.
template <class F>
double affine_max(const ClosedLoopModel& m, double lo, double hi, F coeff) {
    double v = 0.0;
    for (std::size_t i = 0; i < m.nodes(); ++i) {
        const auto [s, c] = coeff(i);
        v = std::max({v, std::abs(s * lo + c), std::abs(s * hi + c)});
    }
    return v;
}

/// Centered advection under forward Euler also needs v^2 dt <= 2 D on each axis.
double ftcs_limit(double D, double v) {
    return D > 0.0 && v > 0.0 ? 2.0 * D / (v * v) : std::numeric_limits<double>::infinity();
}

}  // namespace

SpatialGrid1D SpatialGrid1D::make(double lower, double upper, double dx) {
    if (!(dx > 0.0) || !std::isfinite(dx)) throw ConfigError("cell size must be positive");
    if (!(upper > lower)) throw ConfigError("upper bound must exceed the lower bound");
    const double r = (upper - lower) / dx;
    const double k = std::round(r);
    if (std::abs(r - k) > 1e-6) throw ConfigError("domain length is not a multiple of the cell size");
    if (k + 1.0 < 8.0) throw ConfigError("grid needs at least 8 nodes");
    SpatialGrid1D g;
    g.lower = lower;
    g.dx = dx;
    g.nodes = static_cast<std::size_t>(k) + 1;
    g.upper = lower + k * dx;
    return g;
}

SpatialGrid1D SpatialGrid1D::covering(double lower, double upper, double dx) {
    if (!(dx > 0.0)) throw ConfigError("cell size must be positive");
    const double k = std::max(7.0, std::ceil((upper - lower) / dx - 1e-9));
    return make(lower, lower + k * dx, dx);
}

StabilityReport stability_check(double dx, int dims, double dt, double D_max, double v_max) {
    StabilityReport r;
    if (!(dx > 0.0) || !(dt > 0.0) || dims < 1) throw ConfigError("stability check needs positive dx, dt and dims");
    const double inf = std::numeric_limits<double>::infinity();
    const double parabolic = D_max > 0.0 ? dx * dx / (2.0 * D_max * dims) : inf;
    const double advective = v_max > 0.0 ? dx / v_max : inf;
    r.max_dt = std::min(parabolic, advective);
    r.ok = dt <= r.max_dt;
    std::ostringstream os;
    if (r.ok)
        os << "stable";
    else
        os << (parabolic <= advective ? "diffusive" : "advective") << " limit; largest admissible dt is " << r.max_dt;
    r.message = os.str();
    return r;
}

double DensityEvolution::integrate(const std::vector<double>& p) const { return measure(p, best_isa()).sum; }

SumMin DensityEvolution::measure(const std::vector<double>& p, Isa isa) const {
    if (dims == 1) {
        const auto r = sum_min(p.data(), p.size(), isa);
        return {(r.sum - 0.5 * (p.front() + p.back())) * grid.dx, r.min};
    }
    const std::size_t nx = grid.nodes, nb = xbar->nodes;
    std::vector<double> row(nx);
    double mn = p[0];
    for (std::size_t i = 0; i < nx; ++i) {
        const double* r = p.data() + i * nb;
        const auto s = sum_min(r, nb, isa);
        row[i] = (s.sum - 0.5 * (r[0] + r[nb - 1])) * xbar->dx;
        mn = std::min(mn, s.min);
    }
    return {trapz(row.data(), nx, grid.dx), mn};
}

void DensityEvolution::to_csv(const std::string& path) const {
    if (dims == 1) {
        CsvWriter w(path, {"t", "x", "p"});
        for (std::size_t k = 0; k < snapshots.size(); ++k)
            for (std::size_t j = 0; j < grid.nodes; ++j) w.row({snapshot_t[k], grid.x(j), snapshots[k][j]});
        return;
    }
    CsvWriter w(path, {"t", "x", "xbar", "p"});
    for (std::size_t k = 0; k < snapshots.size(); ++k)
        for (std::size_t i = 0; i < grid.nodes; ++i)
            for (std::size_t m = 0; m < xbar->nodes; ++m)
                w.row({snapshot_t[k], grid.x(i), xbar->x(m), snapshots[k][i * xbar->nodes + m]});
}

double default_upper_bound(double mean, double std, double D, double max_intercept, double max_slope, double T) {
    const double spread = 6.0 * std::sqrt(std * std + 2.0 * D * T);
    const double reach = std::abs(mean) + spread;
    return mean + spread + (max_intercept + std::max(0.0, max_slope) * reach) * T;
}

namespace {

double market_bound(const ClosedLoopModel& m, const InitialCondition& ic) {
    const double s = ic.kind == InitialCondition::Kind::point ? 0.0 : ic.market_std;
    const double D = 0.5 * m.sigma_common * m.sigma_common;
    return default_upper_bound(std::abs(ic.market_mean), s, D, max_abs_over(m.m_bar), max_over(m.A_bar), m.T());
}

double bank_bound(const ClosedLoopModel& m, const InitialCondition& ic) {
    const double s = ic.kind == InitialCondition::Kind::point ? 0.0 : ic.std;
    const double D = 0.5 * m.params.sigma * m.params.sigma;
    return default_upper_bound(ic.mean, s, D, max_abs_over(m.intercept), max_over(m.slope), m.T());
}

}  // namespace

SpatialGrid1D systemic_grid(const ClosedLoopModel& m, const InitialCondition& ic, const GridConfig& g) {
    const double theta = m.params.theta;
    const double D = 0.5 * m.sigma_common * m.sigma_common;
    double up = g.x_upper.value_or(0.0);
    if (!g.x_upper) {
        const double s = ic.kind == InitialCondition::Kind::point ? 0.0 : ic.market_std;
        up = default_upper_bound(ic.market_mean, s, D, max_abs_over(m.m_bar), max_over(m.A_bar), m.T());
        up = std::max(up, theta + 8.0 * g.dx);
    }
    // Subdivide the cell until the cell Peclet number v dx / 2D is at most 1.
    const double v = affine_max(m, theta, up, [&](std::size_t i) { return std::pair{m.A_bar[i], m.m_bar[i]}; });
    double dx = g.dx;
    if (D > 0.0 && v > 0.0) dx = g.dx / std::max(1.0, std::ceil(g.dx * v / (2.0 * D) - 1e-9));
    if (g.x_upper) return SpatialGrid1D::make(theta, up, dx);
    return SpatialGrid1D::covering(theta, up, dx);
}

SpatialGrid2D individual_grid(const ClosedLoopModel& m, const InitialCondition& ic, const GridConfig& g) {
    const double theta = m.params.theta;
    SpatialGrid2D out;
    const double mb = market_bound(m, ic);
    if (g.x_upper)
        out.x = SpatialGrid1D::make(theta, *g.x_upper, g.dx);
    else
        out.x = SpatialGrid1D::covering(theta, std::max({bank_bound(m, ic), mb, theta + 8.0 * g.dx}), g.dx);
    if (g.xbar_bound) {
        out.xbar = SpatialGrid1D::make(-*g.xbar_bound, *g.xbar_bound, g.dxbar);
    } else {
        const double B = std::ceil(mb / g.dxbar - 1e-9) * g.dxbar;
        out.xbar = SpatialGrid1D::make(-B, B, g.dxbar);
    }
    return out;
}

SpatialGrid1D conditional_grid(const ClosedLoopModel& m, const InitialCondition& ic, const GridConfig& g) {
    const double theta = m.params.theta;
    if (g.x_upper) return SpatialGrid1D::make(theta, *g.x_upper, g.dx);
    // The market is pinned by the noise path; the bank spreads with the full volatility.
    return SpatialGrid1D::covering(theta, std::max({bank_bound(m, ic), theta + 8.0 * g.dx}), g.dx);
}

double max_stable_dt_systemic(const ClosedLoopModel& m, const SpatialGrid1D& g, Scheme s) {
    const double D = 0.5 * m.sigma_common * m.sigma_common;
    const double off = s == Scheme::paper ? 1.0 : 0.0;
    const double v = affine_max(m, g.lower, g.upper, [&](std::size_t i) {
        return std::pair{m.A_bar[i], m.m_bar[i] + off * m.A_bar[i]};
    });
    return std::min(stability_check(g.dx, 1, 1.0, D, v).max_dt, ftcs_limit(D, v));
}

double max_stable_dt_individual(const ClosedLoopModel& m, const SpatialGrid2D& g, Scheme s) {
    const double D11 = 0.5 * m.params.sigma * m.params.sigma, D22 = 0.5 * m.sigma_common * m.sigma_common;
    const double off = s == Scheme::paper ? 1.0 : 0.0;
    double v1 = 0.0, v2 = 0.0;
    for (std::size_t i = 0; i < m.nodes(); ++i) {
        for (double x : {g.x.lower, g.x.upper})
            for (double xb : {g.xbar.lower, g.xbar.upper}) {
                v1 = std::max(v1, std::abs(m.slope[i] * x + m.cross[i] * xb + m.intercept[i] + off * m.slope[i]));
                v2 = std::max(v2, std::abs(m.A_bar[i] * xb + m.m_bar[i] + off * m.A_bar[i]));
            }
    }
    const double base = stability_check(std::min(g.x.dx, g.xbar.dx), 2, 1.0, std::max(D11, D22), std::max(v1, v2)).max_dt;
    return std::min({base, ftcs_limit(D11, v1), ftcs_limit(D22, v2)});
}

DensityEvolution solve_systemic_fp(const ClosedLoopModel& model, const SpatialGrid1D& grid, double dt,
                                   const InitialCondition& ic, const FpOptions& opt) {
    const double T = model.T();
    const int steps = step_count(T, dt);
    const double h = T / steps;
    if (opt.check_stability) {
        const double lim = max_stable_dt_systemic(model, grid, opt.scheme);
        require_stable(StabilityReport{h <= lim, lim, "largest admissible dt is " + format_double(lim)}, h,
                       "systemic solver");
    }
    DensityEvolution e;
    e.method = "fp-systemic";
    const double D = 0.5 * model.sigma_common * model.sigma_common;
    const bool paper = opt.scheme == Scheme::paper;
    Run1D run{grid, T, steps, opt, e, Tracker{0.0, 0.0, "systemic solver"}, resolve(opt)};
    run.run(initial_1d(grid, ic.kind == InitialCondition::Kind::point, ic.market_mean, ic.market_std),
            [&](int i, double dt_) {
                const auto c = model.at(e.t[i]);
                if (paper) return Stencil1D{grid.lower, grid.dx, dt_, 0.0, c.A_bar, c.A_bar + c.m_bar, D};
                return Stencil1D{grid.lower, grid.dx, dt_, c.A_bar, c.A_bar, c.m_bar, D};
            });
    return e;
}

namespace {

struct ConditionalPlan {
    std::vector<Stencil1D> stencils;
    std::vector<double> xbar;
    double D = 0.0;
    double v_max = 0.0;
};

ConditionalPlan plan_conditional(const ClosedLoopModel& model, const SpatialGrid1D& grid, int steps,
                                 const CommonNoisePath& noise, double xbar0, Scheme scheme) {
    const double T = model.T();
    const double h = T / steps;
    if (noise.steps() < static_cast<std::size_t>(steps))
        throw ConfigError("noise path has " + std::to_string(noise.steps()) + " increments, shorter than the " +
                          std::to_string(steps) + "-step time grid");
    if (noise.steps() != static_cast<std::size_t>(steps) || std::abs(noise.dt() - h) > 1e-12 * std::max(1.0, T))
        throw ConfigError("noise path is not aligned with the time grid");
    const bool paper = scheme == Scheme::paper;
    const double c = model.params.sigma * model.params.sigma * model.params.rho * model.params.rho;
    ConditionalPlan plan;
    plan.D = 0.5 * model.sigma_idio * model.sigma_idio;
    plan.xbar.resize(static_cast<std::size_t>(steps) + 1);
    plan.stencils.resize(static_cast<std::size_t>(steps));
    plan.xbar[0] = xbar0;
    const auto t = time_nodes(T, steps);
    for (int i = 0; i < steps; ++i) {
        const auto n = model.at(t[i]);
        const double dw = noise.increments[i];
        const double xb = plan.xbar[i];
        auto& st = plan.stencils[i];
        if (paper)
            st = {grid.lower, grid.dx, h, 0.0, n.slope, n.slope + n.cross * xb + n.intercept + c * dw, plan.D};
        else
            st = {grid.lower, grid.dx, h, n.slope, n.slope, n.cross * xb + n.intercept + c * dw / h, plan.D};
        plan.v_max = std::max({plan.v_max, std::abs(st.slope * grid.lower + st.shift),
                               std::abs(st.slope * grid.upper + st.shift)});
        plan.xbar[i + 1] = xb + (n.A_bar * xb + n.m_bar) * h + model.sigma_common * dw;
    }
    return plan;
}

}  // namespace

StabilityReport conditional_stability(const ClosedLoopModel& model, const SpatialGrid1D& grid,
                                      const CommonNoisePath& noise, double xbar0, Scheme scheme) {
    const int steps = static_cast<int>(noise.steps());
    const auto plan = plan_conditional(model, grid, steps, noise, xbar0, scheme);
    return stability_check(grid.dx, 1, model.T() / steps, plan.D, plan.v_max);
}

DensityEvolution solve_conditional_fp(const ClosedLoopModel& model, const SpatialGrid1D& grid, double dt,
                                      const InitialCondition& ic, const CommonNoisePath& noise, double xbar0,
                                      const FpOptions& opt) {
    const double T = model.T();
    const int steps = step_count(T, dt);
    const double h = T / steps;
    auto plan = plan_conditional(model, grid, steps, noise, xbar0, opt.scheme);
    if (opt.check_stability) require_stable(stability_check(grid.dx, 1, h, plan.D, plan.v_max), h, "conditional solver");

    DensityEvolution e;
    e.method = "fp-conditional";
    e.market_path = plan.xbar;
    Run1D run{grid, T, steps, opt, e, Tracker{0.0, 0.0, "conditional solver"}, resolve(opt)};
    run.run(initial_1d(grid, ic.kind == InitialCondition::Kind::point, ic.mean, ic.std),
            [&](int i, double) { return plan.stencils[i]; });
    e.metadata["xbar0"] = xbar0;
    e.metadata["noise"] = noise.provenance;
    return e;
}

DensityEvolution solve_individual_fp(const ClosedLoopModel& model, const SpatialGrid2D& grid, double dt,
                                     const InitialCondition& ic, const FpOptions& opt) {
    const double T = model.T();
    const int steps = step_count(T, dt);
    const double h = T / steps;
    const Scheme sch = opt.scheme;
    if (opt.check_stability) {
        const double lim = max_stable_dt_individual(model, grid, sch);
        require_stable(StabilityReport{h <= lim, lim, "largest admissible dt is " + format_double(lim)}, h,
                       "individual solver");
    }
    const bool paper = sch == Scheme::paper;
    const Isa isa = resolve(opt);
    const std::size_t nx = grid.x.nodes, nb = grid.xbar.nodes;

    DensityEvolution e;
    e.dims = 2;
    e.method = "fp-individual";
    e.grid = grid.x;
    e.xbar = grid.xbar;
    e.dt = h;
    e.scheme = sch;
    e.t = time_nodes(T, steps);

    std::vector<double> p(nx * nb, 0.0);
    {
        const bool point = ic.kind == InitialCondition::Kind::point;
        const auto px = initial_1d(grid.x, point, ic.mean, ic.std);
        const auto pb = initial_1d(grid.xbar, point, ic.market_mean, ic.market_std);
        for (std::size_t i = 0; i < nx; ++i)
            for (std::size_t m = 0; m < nb; ++m) p[i * nb + m] = px[i] * pb[m];
    }
    double m0 = e.integrate(p);
    if (opt.renormalize_initial && m0 > 0.0) {
        for (auto& v : p) v /= m0;
        m0 = e.integrate(p);
    }
    Tracker tr{m0, min_of(p), "individual solver"};
    e.mass.assign(e.t.size(), 0.0);
    e.mass[0] = m0;
    e.snapshot_t.push_back(0.0);
    e.snapshots.push_back(p);

    const double D11 = 0.5 * model.params.sigma * model.params.sigma;
    const double D22 = 0.5 * model.sigma_common * model.sigma_common;
    DenormalGuard ftz;
    std::vector<double> q(p.size());
    for (int i = 0; i < steps; ++i) {
        const auto c = model.at(e.t[i]);
        Stencil2D s{grid.x.lower, grid.x.dx, grid.xbar.lower, grid.xbar.dx, h,
                    c.slope + c.A_bar, c.slope, c.cross, c.intercept, c.A_bar, c.m_bar,
                    D11, D22, D22};
        if (paper) {
            s.decay = 0.0;
            s.c1 = c.intercept + c.slope;
            s.c2 = c.m_bar + c.A_bar;
        }
        step2d(p.data(), q.data(), nx, nb, s, isa);
        p.swap(q);
        const auto [m, lo] = e.measure(p, isa);
        tr.check(m, e.t[i + 1]);
        tr.min_value = std::min(tr.min_value, lo);
        e.mass[i + 1] = m;
        if (keep_snapshot(i + 1, steps, opt.snapshots)) {
            e.snapshot_t.push_back(e.t[i + 1]);
            e.snapshots.push_back(p);
        }
    }
    e.min_value = tr.min_value;
    e.metadata["grid"] = {{"x", grid_json(grid.x)}, {"xbar", grid_json(grid.xbar)}};
    e.metadata["dt"] = h;
    e.metadata["steps"] = steps;
    e.metadata["scheme"] = to_string(sch);
    e.metadata["isa"] = to_string(isa);
    return e;
}

DefaultReport default_probability(const DensityEvolution& e, std::optional<std::size_t> node) {
    const std::size_t k = node.value_or(e.mass.size() - 1);
    if (k >= e.mass.size()) throw ConfigError("time node out of range");
    DefaultReport r;
    r.method = e.method;
    r.probability = std::clamp(1.0 - e.mass[k], 0.0, 1.0);
    r.metadata = e.metadata;
    r.metadata["t"] = e.t[k];
    r.metadata["mass_at_T"] = e.mass.back();
    return r;
}

DefaultReport default_probability_at(const DensityEvolution& e, double s) {
    const double h = e.t.size() > 1 ? e.t[1] - e.t[0] : 1.0;
    const auto k = static_cast<std::size_t>(std::clamp(std::lround(s / h), 0L, static_cast<long>(e.t.size() - 1)));
    return default_probability(e, k);
}

}  // namespace riskmfg
