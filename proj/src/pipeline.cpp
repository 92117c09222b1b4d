#include "riskmfg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "riskmfg/io.hpp"
#include "riskmfg/parallel.hpp"
#include "riskmfg/riccati.hpp"

namespace riskmfg {

namespace {

int stable_steps(double T, double max_dt, int multiple = 1) {
    if (!std::isfinite(max_dt)) return multiple;
    auto n = static_cast<long>(std::ceil(T / max_dt * (1.0 + 1e-12)));
    n = std::max<long>(n, 1);
    n = (n + multiple - 1) / multiple * multiple;
    if (n > 100000000L) throw NumericalError("stable time step too small for a practical run");
    return static_cast<int>(n);
}

double fp_dt(const ScenarioConfig& c, double max_dt) {
    if (c.grid.dt) return *c.grid.dt;
    const double T = interbank_of(c).T;
    return T / stable_steps(T, max_dt);
}

}  // namespace

InterbankParams interbank_of(const ScenarioConfig& c) {
    if (!c.general) return c.params;
    if (c.general->K != 1 || c.general->n != 1 || c.general->m != 1 || c.general->r != 1)
        throw ConfigError("default-probability pipelines need a scalar single-type model");
    return general_to_interbank(*c.general);
}

ClosedLoopModel closed_loop_of(const ScenarioConfig& c) {
    const auto p = interbank_of(c);
    return build_closed_loop(solve_interbank(p, c.grid.steps), p);
}

FpOptions fp_options_of(const ScenarioConfig& c, int snapshots) {
    FpOptions o;
    o.scheme = c.scheme;
    o.renormalize_initial = c.renormalize_initial;
    o.snapshots = snapshots;
    return o;
}

FpRun systemic_default(const ScenarioConfig& c, int snapshots) {
    const auto m = closed_loop_of(c);
    const auto g = systemic_grid(m, c.initial, c.grid);
    const double dt = fp_dt(c, max_stable_dt_systemic(m, g, c.scheme));
    FpRun r{solve_systemic_fp(m, g, dt, c.initial, fp_options_of(c, snapshots)), {}};
    r.report = default_probability(r.evolution);
    return r;
}

FpRun individual_default(const ScenarioConfig& c, int snapshots) {
    const auto m = closed_loop_of(c);
    const auto g = individual_grid(m, c.initial, c.grid);
    const double dt = fp_dt(c, max_stable_dt_individual(m, g, c.scheme));
    FpRun r{solve_individual_fp(m, g, dt, c.initial, fp_options_of(c, snapshots)), {}};
    r.report = default_probability(r.evolution);
    return r;
}

McRun mc_default(const ScenarioConfig& c) {
    const auto m = closed_loop_of(c);
    SimulationConfig s;
    s.paths = c.mc.paths;
    s.dt = c.mc.dt;
    s.seed = c.seed;
    s.mode = NoiseMode::independent;
    s.initial = c.initial;
    s.stride = 0;
    const auto e = simulate_paths(m, s);
    const double theta = m.params.theta;
    return {mc_default_probability(e, theta, Target::market), mc_default_probability(e, theta, Target::bank)};
}

// ---- sweeps

void set_param(InterbankParams& p, const std::string& name, double v) {
    if (name == "rho")
        p.rho = v;
    else if (name == "inv_gamma") {
        if (!(v > 0.0)) throw ConfigError("inv_gamma must be > 0");
        p.gamma = 1.0 / v;
    } else if (name == "b")
        p.b = Liquidity{v};
    else if (name == "xi")
        p.xi = v;
    else if (name == "q")
        p.q = v;
    else if (name == "a")
        p.a = v;
    else if (name == "sigma")
        p.sigma = v;
    else
        throw ConfigError("unknown sweep parameter '" + name + "' (rho|inv_gamma|b|xi|q|a|sigma)");
}

void SweepSpec::check() const {
    static const char* keys[] = {"rho", "inv_gamma", "b", "xi", "q", "a", "sigma"};
    if (std::find(std::begin(keys), std::end(keys), param) == std::end(keys))
        throw ConfigError("unknown sweep parameter '" + param + "' (rho|inv_gamma|b|xi|q|a|sigma)");
    if (!(from < to)) throw ConfigError("sweep needs from < to");
    if (points < 2) throw ConfigError("sweep needs points >= 2");
    if (!systemic && !individual) throw ConfigError("sweep needs at least one target");
}

nlohmann::json SweepSpec::to_json() const {
    nlohmann::json t = nlohmann::json::array();
    if (systemic) t.push_back("systemic");
    if (individual) t.push_back("individual");
    return {{"param", param}, {"from", from}, {"to", to}, {"points", points}, {"targets", t}};
}

ReportTable run_sweep(const SweepSpec& spec) {
    spec.check();
    ReportTable table;
    table.param = spec.param;
    table.rows.resize(static_cast<std::size_t>(spec.points));
    parallel_for(table.rows.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t k = lo; k < hi; ++k) {
            auto& row = table.rows[k];
            row.value = k + 1 == table.rows.size()
                            ? spec.to
                            : spec.from + (spec.to - spec.from) * static_cast<double>(k) / (spec.points - 1);
            ScenarioConfig c = spec.base;
            try {
                if (c.general) throw ConfigError("sweeps run on interbank parameters");
                set_param(c.params, spec.param, row.value);
                validate(c.params);
                if (spec.systemic) {
                    const auto r = systemic_default(c);
                    row.systemic = r.report.probability;
                    row.meta["systemic"] = r.report.to_json();
                }
                if (spec.individual) {
                    const auto r = individual_default(c);
                    row.individual = r.report.probability;
                    row.meta["individual"] = r.report.to_json();
                }
            } catch (const ConfigError& e) {
                row.status = std::string("config error: ") + e.what();
            } catch (const NumericalError& e) {
                row.status = std::string("numerical error: ") + e.what();
            }
        }
    });
    return table;
}

void ReportTable::to_csv(const std::string& path) const {
    CsvWriter w(path, {"param", "value", "systemic", "individual", "status", "method"});
    auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    auto quote = [](std::string s) {
        std::replace(s.begin(), s.end(), '"', '\'');
        return "\"" + s + "\"";
    };
    for (const auto& r : rows) {
        std::string method;
        if (r.systemic) method += "fp-systemic";
        if (r.individual) method += method.empty() ? "fp-individual" : "+fp-individual";
        w.row({param, format_double(r.value), cell(r.systemic), cell(r.individual), quote(r.status), method});
    }
}

// ---- conditional

ConditionalSeries run_conditional(const ScenarioConfig& c, const std::optional<CommonNoisePath>& noise,
                                  DensityEvolution* evolution) {
    const auto m = closed_loop_of(c);
    const auto g = conditional_grid(m, c.initial, c.grid);
    const double T = m.T();
    const double x0 = c.initial.market_start;
    CommonNoisePath w;
    if (noise) {
        w = *noise;
        if (c.grid.dt && std::lround(T / *c.grid.dt) != static_cast<long>(w.steps()))
            throw ConfigError("noise path is not aligned with grid.dt");
    } else if (c.grid.dt) {
        w = CommonNoisePath::generate(T, static_cast<int>(std::lround(T / *c.grid.dt)), c.seed);
    } else {
        // The deterministic bound first, then refine until the drawn path is stable as well.
        const double D = 0.5 * m.sigma_idio * m.sigma_idio;
        int n = stable_steps(T, stability_check(g.dx, 1, 1.0, D, 0.0).max_dt, 5);
        for (;;) {
            w = CommonNoisePath::generate(T, n, c.seed);
            if (conditional_stability(m, g, w, x0, c.scheme).ok) break;
            n = stable_steps(T, 0.8 * T / n, 5);
        }
    }
    const double dt = T / static_cast<double>(w.steps());
    auto e = solve_conditional_fp(m, g, dt, c.initial, w, x0, fp_options_of(c, c.grid.snapshots));
    ConditionalSeries s;
    for (int k = 0; k <= 5; ++k) {
        const double t = k == 5 ? T : T * k / 5.0;
        const auto r = default_probability_at(e, t);
        s.t.push_back(t);
        s.probability.push_back(r.probability);
        const auto node = static_cast<std::size_t>(std::lround(t / dt));
        s.xbar.push_back(e.market_path[node]);
    }
    if (evolution) *evolution = std::move(e);
    return s;
}

void write_csv(const std::string& path, const ConditionalSeries& s) {
    CsvWriter w(path, {"t", "probability", "xbar"});
    for (std::size_t i = 0; i < s.t.size(); ++i) w.row({s.t[i], s.probability[i], s.xbar[i]});
}

// ---- validation gate

InterbankParams zero_control_scenario(double vol, double theta, double T) {
    InterbankParams p;
    p.a = 0.0;
    p.q = 0.0;
    p.q_hat = 0.0;
    p.xi = 0.0;
    p.sigma = vol;
    p.rho = 1.0;
    p.gamma = 1.0;
    p.b = Liquidity{0.0};
    p.theta = theta;
    p.T = T;
    return p;
}

std::vector<CheckResult> run_validate(const ValidateOptions& opt) {
    std::vector<CheckResult> out;
    auto guarded = [&](const std::string& name, double tol, auto body) {
        CheckResult r;
        r.name = name;
        r.tolerance = tol;
        try {
            body(r);
        } catch (const std::exception& e) {
            r.ok = false;
            r.value = NAN;
            r.detail = e.what();
        }
        out.push_back(r);
    };

    guarded("riccati_closed_form", 1e-6, [](CheckResult& r) {
        const auto c = solve_interbank(simplified_scenario(), 10000);
        double err = 0.0, ups = 0.0;
        for (std::size_t i = 0; i < c.nodes(); ++i) {
            err = std::max(err, std::abs(c.Pi[i] - closed_form_pi_simplified(c.t[i])));
            ups = std::max(ups, std::abs(c.Upsilon[i]));
        }
        r.value = err;
        r.ok = err <= r.tolerance && ups <= 1e-9;
        r.detail = "dt=1e-4; sup|Upsilon|=" + format_double(ups);
    });

    guarded("general_vs_scalar", 1e-8, [](CheckResult& r) {
        const auto p = baseline_scenario();
        const int steps = 25000;
        const auto s = solve_interbank(p, steps);
        const auto g = solve_general(interbank_to_general(p), steps);
        double err = 0.0;
        for (std::size_t i = 0; i < s.nodes(); ++i) {
            const auto& k = g.nodes[i][0];
            err = std::max({err, std::abs(s.Pi[i] - k.Pi(0, 0)), std::abs(s.Lambda[i] - k.Lambda(0, 0)),
                            std::abs(s.Upsilon[i] - k.Upsilon(0)), std::abs(s.Delta[i] - k.Delta(0, 0)),
                            std::abs(s.Gamma[i] - k.Gamma(0)), std::abs(s.Psi[i] - k.Psi)});
        }
        r.value = err;
        r.ok = err <= r.tolerance;
        r.detail = "baseline, dt=1e-5, six coefficients";
    });

    guarded("risk_neutral_zero", 1e-10, [](CheckResult& r) {
        auto p = baseline_scenario();
        p.q = p.xi * p.xi;
        p.q_hat = 0.0;
        p.risk_neutral = true;
        const auto c = solve_interbank(p, 2500);
        double m = 0.0;
        for (std::size_t i = 0; i < c.nodes(); ++i)
            m = std::max({m, std::abs(c.Pi[i]), std::abs(c.Lambda[i]), std::abs(c.Upsilon[i])});
        r.value = m;
        r.ok = m <= r.tolerance;
        r.detail = "q=xi^2, q_hat=0, 1/gamma=0";
    });

    // Driftless market, point start 0, vol 1, theta -0.7, T 1.
    const auto refl = zero_control_scenario(1.0, -0.7, 1.0);
    const auto refl_model = build_closed_loop(solve_interbank(refl, 1000), refl);
    InitialCondition point;
    point.kind = InitialCondition::Kind::point;
    point.mean = point.market_mean = 0.0;
    point.std = point.market_std = 0.0;
    const double exact = brownian_first_passage_closed_form(0.0, 1.0, -0.7, 1.0);
    GridConfig rg;
    const auto refl_grid = systemic_grid(refl_model, point, rg);
    const double refl_max_dt = max_stable_dt_systemic(refl_model, refl_grid, Scheme::corrected);
    const double refl_dt = opt.dt.value_or(1.0 / stable_steps(1.0, refl_max_dt));

    guarded("stability", 0.0, [&](CheckResult& r) {
        const auto s = stability_check(refl_grid.dx, 1, refl_dt, 0.5, 0.0);
        r.value = refl_dt;
        r.tolerance = s.max_dt;
        r.ok = s.ok;
        r.detail = s.message;
    });

    guarded("reflection_fp", 0.01, [&](CheckResult& r) {
        const auto e = solve_systemic_fp(refl_model, refl_grid, refl_dt, point);
        const double p = default_probability(e).probability;
        r.value = std::abs(p - exact);
        r.ok = r.value <= r.tolerance;
        r.detail = "fp=" + format_double(p) + " exact=" + format_double(exact);
    });

    guarded("reflection_mc", 0.0, [&](CheckResult& r) {
        SimulationConfig s;
        s.paths = opt.paths;
        s.dt = opt.mc_dt;
        s.seed = opt.seed;
        s.initial = point;
        s.stride = 0;
        s.simulate_bank = false;
        const auto rep = mc_default_probability(simulate_paths(refl_model, s), -0.7, Target::market);
        r.value = std::abs(rep.probability - exact);
        r.tolerance = 3.0 * rep.ci;
        r.ok = r.value <= r.tolerance;
        r.detail = "mc=" + format_double(rep.probability) + " paths=" + std::to_string(opt.paths) +
                   " dt=" + format_double(opt.mc_dt);
    });

    guarded("mass_conservation", 1e-3, [&](CheckResult& r) {
        const auto p = zero_control_scenario(1.0, 0.0, 0.25);
        const auto m = build_closed_loop(solve_interbank(p, 250), p);
        InitialCondition ic;
        const double half = 10.0 * std::sqrt(1.0 + 2.0 * 0.5 * 0.25);
        auto g = SpatialGrid1D::covering(-half, half, 0.01);
        const double dt = opt.dt.value_or(0.25 / stable_steps(0.25, max_stable_dt_systemic(m, g, Scheme::corrected)));
        auto pp = p;
        pp.theta = g.lower;
        auto mm = build_closed_loop(solve_interbank(pp, 250), pp);
        const auto e = solve_systemic_fp(mm, g, dt, ic);
        r.value = e.mass.front() - e.mass.back();
        r.ok = std::abs(r.value) <= r.tolerance;
        r.detail = "domain +-10 std, T=0.25, initial mass " + format_double(e.mass.front());
    });
    return out;
}

void write_csv(const std::string& path, const std::vector<CheckResult>& checks) {
    CsvWriter w(path, {"check", "ok", "value", "tolerance", "detail"});
    for (const auto& c : checks)
        w.row({c.name, c.ok ? "1" : "0", format_double(c.value), format_double(c.tolerance), "\"" + c.detail + "\""});
}

}  // namespace riskmfg
