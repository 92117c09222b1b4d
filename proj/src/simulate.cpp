#include "riskmfg/simulate.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "riskmfg/io.hpp"
#include "riskmfg/parallel.hpp"
#include "riskmfg/rng.hpp"

namespace riskmfg {

namespace {

int steps_for(double T, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
    const double r = T / dt;
    const double n = std::round(r);
    if (n < 1.0 || std::abs(r - n) > 1e-9 * std::max(1.0, r)) throw ConfigError("dt does not divide T");
    return static_cast<int>(n);
}

std::vector<double> uniform_grid(double T, int steps) {
    std::vector<double> t(static_cast<std::size_t>(steps) + 1);
    for (int i = 0; i <= steps; ++i) t[i] = i == steps ? T : T * i / steps;
    return t;
}

}  // namespace

CommonNoisePath CommonNoisePath::generate(double T, int steps, std::uint64_t seed) {
    if (steps < 1) throw ConfigError("noise path needs at least one step");
    CommonNoisePath w;
    w.t = uniform_grid(T, steps);
    w.increments.resize(static_cast<std::size_t>(steps));
    Xoshiro256pp rng(seed, 0, kCommonStream);
    std::normal_distribution<double> z;
    const double sq = std::sqrt(T / steps);
    for (auto& d : w.increments) d = sq * z(rng);
    w.provenance = "seed:" + std::to_string(seed);
    return w;
}

CommonNoisePath CommonNoisePath::zeros(double T, int steps) {
    CommonNoisePath w;
    w.t = uniform_grid(T, steps);
    w.increments.assign(static_cast<std::size_t>(steps), 0.0);
    w.provenance = "zeros";
    return w;
}

CommonNoisePath CommonNoisePath::from_csv(const std::string& path, double T) {
    const auto cols = read_numeric_csv(path, 2);
    const std::size_t n = cols[0].size();
    if (n == 0) throw ConfigError(path + ": no increments");
    CommonNoisePath w;
    w.t = cols[0];
    w.t.push_back(T);
    w.increments = cols[1];
    const double h = T / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        if (std::abs(w.t[i] - h * static_cast<double>(i)) > 1e-9 * std::max(1.0, T))
            throw ConfigError(path + ": times are not a uniform grid over [0, T)");
    w.provenance = "file:" + path;
    return w;
}

void CommonNoisePath::to_csv(const std::string& path) const {
    CsvWriter w(path, {"t", "increment"});
    for (std::size_t i = 0; i < increments.size(); ++i) w.row({t[i], increments[i]});
}

CommonNoisePath CommonNoisePath::shifted(double delta) const {
    CommonNoisePath w = *this;
    for (auto& d : w.increments) d += delta;
    w.provenance += "+shift(" + format_double(delta) + ")";
    return w;
}

CommonNoisePath CommonNoisePath::refined(int factor) const {
    if (factor < 1) throw ConfigError("refinement factor must be >= 1");
    const double T = t.back();
    const int n = static_cast<int>(steps()) * factor;
    CommonNoisePath w;
    w.t = uniform_grid(T, n);
    w.increments.reserve(static_cast<std::size_t>(n));
    for (double d : increments)
        for (int k = 0; k < factor; ++k) w.increments.push_back(d / factor);
    w.provenance = provenance + "/refined(" + std::to_string(factor) + ")";
    return w;
}

void PathEnsemble::to_csv(const std::string& path) const {
    CsvWriter w(path, {"path", "t", "x", "xbar", "u"});
    const bool bank = !x.empty();
    for (std::size_t i = 0; i < paths; ++i)
        for (std::size_t r = 0; r < t.size(); ++r) {
            const std::size_t k = at(i, r);
            w.row({static_cast<double>(i), t[r], bank ? x[k] : NAN, xbar[k], bank ? u[k] : NAN});
        }
}

PathEnsemble simulate_paths(const ClosedLoopModel& model, const SimulationConfig& cfg) {
    if (cfg.paths < 1) throw ConfigError("paths must be >= 1");
    if (cfg.stride < 0) throw ConfigError("stride must be >= 0");
    const double T = model.T();
    const int steps = steps_for(T, cfg.dt);
    const double dt = T / steps;
    const double sq = std::sqrt(dt);
    const auto& p = model.params;

    std::vector<int> rec_step;
    for (int i = 0; i <= steps; ++i)
        if (i == 0 || i == steps || (cfg.stride > 0 && i % cfg.stride == 0)) rec_step.push_back(i);
    const std::size_t R = rec_step.size();

    PathEnsemble e;
    e.paths = static_cast<std::size_t>(cfg.paths);
    e.dt = dt;
    e.stride = cfg.stride;
    e.mode = cfg.mode;
    for (int i : rec_step) e.t.push_back(i == steps ? T : T * i / steps);
    const std::size_t N = e.paths * R;
    const bool bank = cfg.simulate_bank;
    e.xbar.resize(N);
    e.min_xbar.resize(N);
    if (bank) {
        e.x.resize(N);
        e.u.resize(N);
        e.min_x.resize(N);
    }
    e.seeds.resize(e.paths);

    if (cfg.mode == NoiseMode::shared) {
        e.noise = cfg.noise ? *cfg.noise : CommonNoisePath::generate(T, steps, cfg.seed);
        if (static_cast<int>(e.noise->steps()) != steps) throw ConfigError("noise path does not match the time grid");
    }

    std::vector<ClosedLoopModel::Node> node(static_cast<std::size_t>(steps) + 1);
    std::vector<double> b(node.size());
    for (int i = 0; i <= steps; ++i) {
        const double s = i == steps ? T : T * i / steps;
        node[i] = model.at(s);
        b[i] = p.b(s);
    }
    const double si = model.sigma_idio, sc = model.sigma_common;
    const double g = cfg.gain_scale;
    const auto& ic = cfg.initial;

    parallel_for(e.paths, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t path = lo; path < hi; ++path) {
            Xoshiro256pp bank_rng(cfg.seed, path, kBankStream);
            Xoshiro256pp mkt_rng(cfg.seed, path, kMarketStream);
            std::normal_distribution<double> zb, zm;
            e.seeds[path] = path;
            double x = ic.mean, xb = ic.market_mean;
            if (ic.kind == InitialCondition::Kind::gaussian) {
                x = ic.mean + ic.std * zb(bank_rng);
                if (cfg.mode == NoiseMode::independent) xb = ic.market_mean + ic.market_std * zm(mkt_rng);
            }
            if (cfg.mode == NoiseMode::shared) xb = ic.market_start;
            double mx = x, mxb = xb;
            std::size_t r = 0;
            for (int i = 0;; ++i) {
                const auto& c = node[i];
                const double u = -g * ((c.Pi + p.xi) * x + (c.Lambda - p.xi) * xb + c.Upsilon);
                if (rec_step[r] == i) {
                    const std::size_t k = e.at(path, r);
                    e.xbar[k] = xb;
                    e.min_xbar[k] = mxb;
                    if (bank) {
                        e.x[k] = x;
                        e.u[k] = u;
                        e.min_x[k] = mx;
                    }
                    ++r;
                }
                if (i == steps) break;
                const double dw0 = cfg.mode == NoiseMode::shared ? e.noise->increments[i] : sq * zm(mkt_rng);
                const double xb_next = xb + (c.A_bar * xb + c.m_bar) * dt + sc * dw0;
                if (bank) {
                    const double dwi = si > 0.0 ? sq * zb(bank_rng) : 0.0;
                    x = x + (p.a * (xb - x) + u + b[i]) * dt + si * dwi + sc * dw0;
                    mx = std::min(mx, x);
                }
                xb = xb_next;
                mxb = std::min(mxb, xb);
                if (!std::isfinite(x) || !std::isfinite(xb))
                    throw NumericalError("non-finite state in path simulation (coefficient blow-up upstream?)");
            }
        }
    });
    return e;
}

nlohmann::json DefaultReport::to_json() const {
    nlohmann::json j = metadata;
    j["probability"] = probability;
    j["method"] = method;
    if (method == "mc") j["ci"] = ci;
    return j;
}

DefaultReport mc_default_probability(const PathEnsemble& e, double theta, Target target,
                                     std::optional<std::size_t> record) {
    if (e.paths == 0) throw ConfigError("empty ensemble");
    const std::size_t r = record.value_or(e.records() - 1);
    if (r >= e.records()) throw ConfigError("record index out of range");
    const auto& mins = target == Target::market ? e.min_xbar : e.min_x;
    if (mins.empty()) throw ConfigError("ensemble has no bank paths");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < e.paths; ++i) hits += mins[e.at(i, r)] <= theta ? 1 : 0;
    const double n = static_cast<double>(e.paths);
    DefaultReport rep;
    rep.method = "mc";
    rep.probability = static_cast<double>(hits) / n;
    rep.ci = 1.959963984540054 * std::sqrt(rep.probability * (1.0 - rep.probability) / n);
    rep.metadata = {{"paths", e.paths},
                    {"dt", e.dt},
                    {"t", e.t[r]},
                    {"target", target == Target::market ? "market" : "bank"},
                    {"noise", e.mode == NoiseMode::shared ? "shared" : "independent"}};
    return rep;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double brownian_first_passage_closed_form(double x0, double vol, double theta, double T) {
    if (x0 <= theta) throw std::domain_error("start at or below the threshold: default is certain");
    if (!(vol > 0.0)) throw std::domain_error("vol must be positive");
    if (T <= 0.0) return 0.0;
    return 2.0 * normal_cdf((theta - x0) / (vol * std::sqrt(T)));
}

double FinitePopulationResult::sup_gap() const {
    double m = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) m = std::max(m, std::abs(average[i] - mean_field[i]));
    return m;
}

FinitePopulationResult simulate_finite_population(int N, const InterbankParams& p, const CoefficientPath& coeffs,
                                                  std::uint64_t seed, const InitialCondition& ic) {
    if (N < 1) throw ConfigError("N must be >= 1");
    const std::size_t steps = coeffs.nodes() - 1;
    const double dt = coeffs.dt();
    const double sq = std::sqrt(dt);
    const double si = p.sigma_idiosyncratic(), sc = p.sigma_common();

    std::vector<Xoshiro256pp> rng;
    rng.reserve(static_cast<std::size_t>(N));
    std::vector<double> x(static_cast<std::size_t>(N));
    std::normal_distribution<double> z0;
    std::vector<std::normal_distribution<double>> z(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        rng.emplace_back(seed, static_cast<std::uint64_t>(i), kBankStream);
        x[i] = ic.kind == InitialCondition::Kind::gaussian ? ic.mean + ic.std * z[i](rng[i]) : ic.mean;
    }
    Xoshiro256pp common(seed, 0, kCommonStream);

    FinitePopulationResult out;
    out.t = coeffs.t;
    out.average.resize(steps + 1);
    out.mean_field.resize(steps + 1);
    double xb = ic.mean;
    auto average = [&] {
        double s = 0.0;
        for (double v : x) s += v;
        return s / N;
    };
    double avg = average();
    for (std::size_t k = 0;; ++k) {
        out.average[k] = avg;
        out.mean_field[k] = xb;
        if (k == steps) break;
        const double P = coeffs.Pi[k], L = coeffs.Lambda[k], U = coeffs.Upsilon[k];
        const double b = p.b(coeffs.t[k]);
        const double dw0 = sq * z0(common);
        for (int i = 0; i < N; ++i) {
            const double u = -((P + p.xi) * x[i] + (L - p.xi) * avg + U);
            const double dwi = si > 0.0 ? sq * z[i](rng[i]) : 0.0;
            x[i] += (p.a * (avg - x[i]) + u + b) * dt + si * dwi + sc * dw0;
        }
        xb += (-(P + L) * xb + b - U) * dt + sc * dw0;
        avg = average();
        if (!std::isfinite(avg) || !std::isfinite(xb)) throw NumericalError("non-finite state in population run");
    }
    return out;
}

}  // namespace riskmfg
