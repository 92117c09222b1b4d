#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "riskmfg/fokker_planck.hpp"
#include "riskmfg/io.hpp"
#include "riskmfg/pipeline.hpp"
#include "riskmfg/riccati.hpp"
#include "riskmfg/simulate.hpp"

using namespace riskmfg;
using nlohmann::json;

namespace {

struct Common {
    std::string config, out, scheme, noise;
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> paths;
    std::optional<double> dt;
    bool renormalize = false;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "scenario JSON (a sidecar is accepted too)");
    sub->add_option("--out", c.out, "output CSV; a <out>.json sidecar records the resolved config");
    sub->add_option("--seed", c.seed, "master seed");
    sub->add_option("--paths", c.paths, "Monte Carlo paths");
    sub->add_option("--dt", c.dt, "time step");
    sub->add_option("--scheme", c.scheme, "corrected|paper")->check(CLI::IsMember({"corrected", "paper"}));
    sub->add_flag("--renormalize-initial", c.renormalize, "renormalize the truncated initial law");
    sub->add_option("--noise", c.noise, "common-noise CSV (t, increment)");
}

ScenarioConfig resolve(const Common& c, json* raw) {
    ScenarioConfig cfg;
    if (!c.config.empty()) {
        cfg = load_config(c.config);
        std::ifstream in(c.config);
        *raw = json::parse(in, nullptr, false);
    }
    if (c.seed) cfg.seed = *c.seed;
    if (c.paths) {
        if (*c.paths < 1) throw ConfigError("--paths must be >= 1");
        cfg.mc.paths = *c.paths;
    }
    if (!c.scheme.empty()) cfg.scheme = scheme_from_string(c.scheme);
    if (c.renormalize) cfg.renormalize_initial = true;
    if (c.dt && !(*c.dt > 0.0)) throw ConfigError("--dt must be > 0");
    return cfg;
}

void sidecar(const std::string& out, const std::string& command, const ScenarioConfig& cfg, json extra = {}) {
    if (out.empty()) return;
    json j = {{"command", command}, {"config", to_json(cfg)}};
    if (extra.is_object())
        for (auto& [k, v] : extra.items()) j[k] = v;
    write_json(out + ".json", j);
}

int steps_for(double T, double dt) {
    const double n = T / dt;
    const long k = std::lround(n);
    if (k < 2 || std::abs(n - static_cast<double>(k)) > 1e-9 * n) throw ConfigError("dt must divide T into >= 2 steps");
    return static_cast<int>(k);
}

void write_report_csv(const std::string& path, const std::vector<std::pair<std::string, DefaultReport>>& reports) {
    CsvWriter w(path, {"target", "method", "probability", "ci", "t", "mass_at_T", "dt"});
    for (const auto& [target, r] : reports) {
        auto num = [&](const char* k) {
            return r.metadata.contains(k) ? format_double(r.metadata[k].get<double>()) : std::string();
        };
        w.row({target, r.method, format_double(r.probability), format_double(r.ci), num("t"), num("mass_at_T"),
               num("dt")});
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Risk-sensitive mean-field interbank model: coefficients, simulation, default probabilities"};
    app.require_subcommand(1);

    Common c;
    auto* coeffs = app.add_subcommand("coeffs", "solve the coefficient ODEs, CSV t,Pi,Lambda,Upsilon,Delta,Gamma,Psi");
    add_common(coeffs, c);
    bool closed_loop = false;
    coeffs->add_flag("--closed-loop", closed_loop, "write the closed-loop drift table instead");

    auto* simulate = app.add_subcommand("simulate", "simulate closed-loop paths, CSV path,t,x,xbar,u");
    add_common(simulate, c);
    std::string mode = "independent";
    int stride = 1;
    simulate->add_option("--mode", mode, "independent|shared common noise")->check(CLI::IsMember({"independent", "shared"}));
    simulate->add_option("--stride", stride, "record every n steps (0: endpoints)")->check(CLI::NonNegativeNumber);

    auto* dflt = app.add_subcommand("default", "default probability from the Fokker-Planck solvers");
    add_common(dflt, c);
    std::string target = "systemic", density;
    dflt->add_option("--target", target, "systemic|individual|conditional")
        ->check(CLI::IsMember({"systemic", "individual", "conditional"}));
    dflt->add_option("--density", density, "also write density snapshots to this CSV");

    auto* sweep = app.add_subcommand("sweep", "sensitivity sweep, CSV param,value,systemic,individual,status,method");
    add_common(sweep, c);
    std::string param, targets = "both";
    std::optional<double> from, to;
    std::optional<int> points;
    sweep->add_option("--param", param, "rho|inv_gamma|b|xi|q|a|sigma");
    sweep->add_option("--from", from);
    sweep->add_option("--to", to);
    sweep->add_option("--points", points);
    sweep->add_option("--targets", targets, "systemic|individual|both")
        ->check(CLI::IsMember({"systemic", "individual", "both"}));

    auto* cond = app.add_subcommand("conditional", "conditional default series at six evenly spaced times");
    add_common(cond, c);
    cond->add_option("--density", density, "also write density snapshots to this CSV");
    std::optional<double> shift;
    cond->add_option("--shift", shift, "add this to every noise increment");

    auto* validate = app.add_subcommand("validate", "oracle checks; nonzero exit on any failure");
    add_common(validate, c);
    std::optional<double> mc_dt;
    validate->add_option("--mc-dt", mc_dt, "Monte Carlo step for the reflection check");

    auto* mc = app.add_subcommand("mc", "Monte Carlo default probabilities (market and bank)");
    add_common(mc, c);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        json raw;
        ScenarioConfig cfg = resolve(c, &raw);
        const auto T = [&] { return interbank_of(cfg).T; };

        if (coeffs->parsed()) {
            if (c.dt) cfg.grid.steps = steps_for(T(), *c.dt);
            if (closed_loop)
                write_csv(c.out.empty() ? "/dev/stdout" : c.out, closed_loop_of(cfg));
            else if (cfg.general) {
                const auto g = solve_general(*cfg.general, cfg.grid.steps);
                if (cfg.general->n != 1 || cfg.general->K != 1)
                    throw ConfigError("coeffs CSV export covers scalar single-type models");
                CoefficientPath p;
                p.t = g.t;
                for (const auto& node : g.nodes) {
                    const auto& k = node[0];
                    p.Pi.push_back(k.Pi(0, 0));
                    p.Lambda.push_back(k.Lambda(0, 0));
                    p.Upsilon.push_back(k.Upsilon(0));
                    p.Delta.push_back(k.Delta(0, 0));
                    p.Gamma.push_back(k.Gamma(0));
                    p.Psi.push_back(k.Psi);
                }
                write_csv(c.out.empty() ? "/dev/stdout" : c.out, p);
            } else {
                write_csv(c.out.empty() ? "/dev/stdout" : c.out, solve_interbank(cfg.params, cfg.grid.steps));
            }
            sidecar(c.out, "coeffs", cfg, {{"closed_loop", closed_loop}});
        } else if (simulate->parsed()) {
            if (c.dt) cfg.mc.dt = *c.dt;
            SimulationConfig s;
            s.paths = c.paths ? *c.paths : 100;
            s.dt = cfg.mc.dt;
            s.seed = cfg.seed;
            s.mode = mode == "shared" ? NoiseMode::shared : NoiseMode::independent;
            s.initial = cfg.initial;
            s.stride = stride;
            if (!c.noise.empty()) {
                s.mode = NoiseMode::shared;
                s.noise = CommonNoisePath::from_csv(c.noise, T());
            }
            const auto e = simulate_paths(closed_loop_of(cfg), s);
            if (c.out.empty()) throw ConfigError("simulate needs --out");
            e.to_csv(c.out);
            sidecar(c.out, "simulate", cfg,
                    {{"paths", s.paths}, {"mode", mode}, {"stride", stride}, {"noise", c.noise}});
        } else if (dflt->parsed()) {
            if (c.dt) cfg.grid.dt = *c.dt;
            DensityEvolution ev;
            DefaultReport rep;
            if (target == "systemic") {
                auto r = systemic_default(cfg, cfg.grid.snapshots);
                ev = std::move(r.evolution);
                rep = r.report;
            } else if (target == "individual") {
                auto r = individual_default(cfg, cfg.grid.snapshots);
                ev = std::move(r.evolution);
                rep = r.report;
            } else {
                std::optional<CommonNoisePath> noise;
                if (!c.noise.empty()) noise = CommonNoisePath::from_csv(c.noise, T());
                run_conditional(cfg, noise, &ev);
                rep = default_probability(ev);
            }
            std::cout << rep.to_json().dump() << "\n";
            if (!c.out.empty()) write_report_csv(c.out, {{target, rep}});
            if (!density.empty()) ev.to_csv(density);
            sidecar(c.out, "default", cfg, {{"target", target}, {"noise", c.noise}, {"report", rep.to_json()}});
        } else if (sweep->parsed()) {
            if (c.dt) cfg.grid.dt = *c.dt;
            SweepSpec spec;
            if (raw.contains("sweep")) {
                const auto& s = raw["sweep"];
                spec.param = s.value("param", "");
                spec.from = s.value("from", 0.0);
                spec.to = s.value("to", 0.0);
                spec.points = s.value("points", 5);
                if (s.contains("targets")) {
                    spec.systemic = spec.individual = false;
                    for (const auto& t : s["targets"]) (t == "systemic" ? spec.systemic : spec.individual) = true;
                }
            }
            if (!param.empty()) spec.param = param;
            if (from) spec.from = *from;
            if (to) spec.to = *to;
            if (points) spec.points = *points;
            if (sweep->count("--targets")) {
                spec.systemic = targets != "individual";
                spec.individual = targets != "systemic";
            }
            spec.base = cfg;
            const auto table = run_sweep(spec);
            table.to_csv(c.out.empty() ? "/dev/stdout" : c.out);
            sidecar(c.out, "sweep", cfg, {{"sweep", spec.to_json()}});
        } else if (cond->parsed()) {
            if (c.dt) cfg.grid.dt = *c.dt;
            std::optional<CommonNoisePath> noise;
            if (!c.noise.empty()) noise = CommonNoisePath::from_csv(c.noise, T());
            if (shift) {
                if (!noise) throw ConfigError("--shift needs --noise");
                noise = noise->shifted(*shift);
            }
            DensityEvolution ev;
            const auto s = run_conditional(cfg, noise, &ev);
            write_csv(c.out.empty() ? "/dev/stdout" : c.out, s);
            if (!density.empty()) ev.to_csv(density);
            json extra = {{"noise", c.noise}};
            if (shift) extra["shift"] = *shift;
            sidecar(c.out, "conditional", cfg, extra);
        } else if (validate->parsed()) {
            ValidateOptions o;
            o.dt = c.dt;
            if (c.paths) o.paths = *c.paths;
            if (mc_dt) o.mc_dt = *mc_dt;
            if (c.seed) o.seed = *c.seed;
            const auto checks = run_validate(o);
            bool ok = true;
            for (const auto& r : checks) {
                ok = ok && r.ok;
                std::printf("%s %-20s value=%s tol=%s  %s\n", r.ok ? "PASS" : "FAIL", r.name.c_str(),
                            format_double(r.value).c_str(), format_double(r.tolerance).c_str(), r.detail.c_str());
            }
            if (!c.out.empty()) write_csv(c.out, checks);
            json extra = {{"paths", o.paths}, {"mc_dt", o.mc_dt}, {"seed", o.seed}};
            extra["dt"] = o.dt ? json(*o.dt) : json(nullptr);
            sidecar(c.out, "validate", cfg, extra);
            std::printf("%s\n", ok ? "validate: all checks passed" : "validate: FAILED");
            return ok ? 0 : 1;
        } else if (mc->parsed()) {
            if (c.dt) cfg.mc.dt = *c.dt;
            const auto r = mc_default(cfg);
            std::cout << json{{"market", r.market.to_json()}, {"bank", r.bank.to_json()}}.dump() << "\n";
            if (!c.out.empty()) write_report_csv(c.out, {{"systemic", r.market}, {"individual", r.bank}});
            sidecar(c.out, "mc", cfg);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
