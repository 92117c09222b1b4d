#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskmfg/control.hpp"
#include "riskmfg/model.hpp"

namespace riskmfg {

/// Common-noise increments Δw0 on a uniform grid over [0, T].
struct CommonNoisePath {
    std::vector<double> t;           // steps + 1 nodes
    std::vector<double> increments;  // one per step
    std::string provenance;

    std::size_t steps() const { return increments.size(); }
    double dt() const { return t[1] - t[0]; }

    static CommonNoisePath generate(double T, int steps, std::uint64_t seed);
    static CommonNoisePath zeros(double T, int steps);
    /// Two columns (t, increment); t is the left end of each step.
    static CommonNoisePath from_csv(const std::string& path, double T);
    void to_csv(const std::string& path) const;
    /// Same path with every increment shifted by delta.
    CommonNoisePath shifted(double delta) const;
    /// Each increment split evenly over `factor` substeps (linear interpolation of w0).
    CommonNoisePath refined(int factor) const;
};

enum class NoiseMode { shared, independent };

struct SimulationConfig {
    std::int64_t paths = 1000;
    double dt = 1e-3;
    std::uint64_t seed = 0;
    NoiseMode mode = NoiseMode::independent;
    InitialCondition initial;
    /// Record every `stride` steps (the final node is always recorded). 0 means endpoints only.
    int stride = 1;
    /// Shared mode: one market path started at initial.market_start, driven by this path
    /// (or by one drawn from the seed).
    std::optional<CommonNoisePath> noise;
    /// Scales the bank's feedback gains (Pi+xi, Lambda-xi, Upsilon); the market keeps the equilibrium law.
    double gain_scale = 1.0;
    /// Market-only runs skip the bank paths.
    bool simulate_bank = true;
};

/// Row-major (path, record) trajectories.
struct PathEnsemble {
    std::size_t paths = 0;
    double dt = 0.0;
    int stride = 1;
    NoiseMode mode = NoiseMode::independent;
    std::vector<double> t;  // record times
    std::vector<double> x, xbar, u;
    std::vector<double> min_x, min_xbar;  // running minima at each record, tracked at every step
    std::vector<std::uint64_t> seeds;     // idiosyncratic stream key per path
    std::optional<CommonNoisePath> noise; // shared mode

    std::size_t records() const { return t.size(); }
    std::size_t at(std::size_t path, std::size_t rec) const { return path * t.size() + rec; }
    void to_csv(const std::string& path) const;
};

PathEnsemble simulate_paths(const ClosedLoopModel& model, const SimulationConfig& cfg);

enum class Target { market, bank };

struct DefaultReport {
    double probability = 0.0;
    std::string method;  // mc | fp-systemic | fp-individual | fp-conditional | closed-form
    double ci = 0.0;     // 95% half-width, mc only
    nlohmann::json metadata = nlohmann::json::object();

    nlohmann::json to_json() const;
};

/// Fraction of paths whose running minimum of the target is <= theta by record `record` (default: last).
DefaultReport mc_default_probability(const PathEnsemble& e, double theta, Target target,
                                     std::optional<std::size_t> record = std::nullopt);

/// 2 Phi((theta - x0) / (vol sqrt(T))). Throws std::domain_error when x0 <= theta.
double brownian_first_passage_closed_form(double x0, double vol, double theta, double T);

double normal_cdf(double z);

struct FinitePopulationResult {
    std::vector<double> t;
    std::vector<double> average;     // empirical average of the N banks
    std::vector<double> mean_field;  // infinite-population market under the same Δw0
    double sup_gap() const;
};

/// N coupled banks using their own average in place of x̄; steps = coefficient grid steps.
FinitePopulationResult simulate_finite_population(int N, const InterbankParams& p, const CoefficientPath& coeffs,
                                                  std::uint64_t seed, const InitialCondition& initial = {});

}  // namespace riskmfg
