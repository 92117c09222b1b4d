#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskmfg/control.hpp"
#include "riskmfg/model.hpp"
#include "riskmfg/simulate.hpp"
#include "riskmfg/stencil.hpp"

namespace riskmfg {

struct SpatialGrid1D {
    double lower = 0.0;
    double upper = 1.0;
    double dx = 0.1;
    std::size_t nodes = 11;

    /// Validates (upper - lower) = k dx for an integer k and nodes >= 8.
    static SpatialGrid1D make(double lower, double upper, double dx);
    /// Smallest grid from `lower` in steps of dx that reaches at least `upper`.
    static SpatialGrid1D covering(double lower, double upper, double dx);
    double x(std::size_t j) const { return lower + static_cast<double>(j) * dx; }
};

struct SpatialGrid2D {
    SpatialGrid1D x;     // [theta, x_max]
    SpatialGrid1D xbar;  // [-xbar_max, xbar_max]
};

struct StabilityReport {
    bool ok = true;
    double max_dt = 0.0;  // largest admissible dt (infinity when unconstrained)
    std::string message;
};

/// dt <= dx^2 / (2 D_max d) and dt <= dx / |v|_max.
StabilityReport stability_check(double dx, int dims, double dt, double D_max, double v_max);

struct DensityEvolution {
    int dims = 1;
    SpatialGrid1D grid;                  // 1D axis, or the bank axis in 2D
    std::optional<SpatialGrid1D> xbar;   // market axis in 2D
    double dt = 0.0;
    std::vector<double> snapshot_t;
    std::vector<std::vector<double>> snapshots;
    std::vector<double> t;     // every time node
    std::vector<double> mass;  // trapezoid survival mass at every node
    double min_value = 0.0;    // smallest density value seen over the run
    std::string method;        // fp-systemic | fp-individual | fp-conditional
    Scheme scheme = Scheme::corrected;
    std::vector<double> market_path;  // conditional runs: x̄ at every node
    nlohmann::json metadata = nlohmann::json::object();

    /// Trapezoid survival mass of a density on this grid (2D: x̄ first, then x).
    double integrate(const std::vector<double>& p) const;
    /// Trapezoid mass and smallest value in one pass.
    SumMin measure(const std::vector<double>& p, Isa isa) const;
    void to_csv(const std::string& path) const;
};

struct FpOptions {
    Scheme scheme = Scheme::corrected;
    int snapshots = 50;
    bool renormalize_initial = false;
    std::optional<Isa> isa;  // default: best available
    bool check_stability = true;
};

DensityEvolution solve_systemic_fp(const ClosedLoopModel& model, const SpatialGrid1D& grid, double dt,
                                   const InitialCondition& initial, const FpOptions& opt = {});

DensityEvolution solve_individual_fp(const ClosedLoopModel& model, const SpatialGrid2D& grid, double dt,
                                     const InitialCondition& initial, const FpOptions& opt = {});

/// The stochastic transport term carries the coefficient sigma^2 rho^2.
DensityEvolution solve_conditional_fp(const ClosedLoopModel& model, const SpatialGrid1D& grid, double dt,
                                      const InitialCondition& initial, const CommonNoisePath& noise, double xbar0,
                                      const FpOptions& opt = {});

/// Stability of the conditional solver on the noise path's own time grid.
StabilityReport conditional_stability(const ClosedLoopModel& model, const SpatialGrid1D& grid,
                                      const CommonNoisePath& noise, double xbar0, Scheme scheme);

/// 1 - survival mass at time node `node` (default: T), clamped to [0, 1].
DefaultReport default_probability(const DensityEvolution& e, std::optional<std::size_t> node = std::nullopt);
/// Same, at the node nearest to time s.
DefaultReport default_probability_at(const DensityEvolution& e, double s);

/// Upper bound mean + 6 sqrt(std^2 + 2 D T) + (max|intercept| + max(0, slope) reach) T.
double default_upper_bound(double mean, double std, double D, double max_intercept, double max_slope, double T);

/// Grids used when the config does not fix the bounds.
SpatialGrid1D systemic_grid(const ClosedLoopModel& m, const InitialCondition& ic, const GridConfig& g);
SpatialGrid2D individual_grid(const ClosedLoopModel& m, const InitialCondition& ic, const GridConfig& g);
SpatialGrid1D conditional_grid(const ClosedLoopModel& m, const InitialCondition& ic, const GridConfig& g);

/// Largest stable dt for each solver on its grid; the step count is then ceil(T / dt).
double max_stable_dt_systemic(const ClosedLoopModel& m, const SpatialGrid1D& g, Scheme s);
double max_stable_dt_individual(const ClosedLoopModel& m, const SpatialGrid2D& g, Scheme s);

}  // namespace riskmfg
