#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "riskmfg/errors.hpp"

namespace riskmfg {

/// Time profile of the liquidity term b(t): a constant, or a piecewise-linear
/// table held flat outside its knots.
class Liquidity {
public:
    Liquidity(double value = 0.0) : constant_(value) {}  // NOLINT: implicit from a number is intended
    Liquidity(std::vector<double> times, std::vector<double> values);

    double operator()(double t) const;
    bool is_constant() const { return times_.empty(); }
    double constant() const { return constant_; }
    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }
    /// Largest |b(t)| over the profile.
    double max_abs() const;

    friend bool operator==(const Liquidity&, const Liquidity&) = default;

private:
    double constant_ = 0.0;
    std::vector<double> times_;
    std::vector<double> values_;
};

/// Scalar interbank market parameterization.
struct InterbankParams {
    double a = 2.5;        // mean reversion toward the market state
    double q = 10.0;       // running deviation weight
    double q_hat = 0.0;    // terminal deviation weight
    double xi = 1.0;       // incentive / fee weight
    double sigma = 0.3;    // total volatility
    double rho = 0.4;      // common-noise loading
    double gamma = 0.2;    // 1/gamma is the degree of risk aversion
    Liquidity b{1.0};
    double theta = -0.7;   // default threshold
    double T = 0.25;
    /// Drop every 1/gamma term (the 1/gamma -> 0 limit).
    bool risk_neutral = false;

    double risk_aversion() const { return risk_neutral ? 0.0 : 1.0 / gamma; }
    double sigma_common() const;
    double sigma_idiosyncratic() const;

    friend bool operator==(const InterbankParams&, const InterbankParams&) = default;
};

/// Throws ConfigError naming the first violated invariant.
void validate(const InterbankParams& p);

/// The simplified scenario with a closed-form Pi: every parameter 1 except a = 10, rho = 1, T = 1.
InterbankParams simplified_scenario();
/// Unconditional-default baseline (sigma=0.3, rho=0.4, xi=1, q=10, gamma=0.2, a=2.5, b=1, q_hat=0).
InterbankParams baseline_scenario();
/// Conditional-default baseline (sigma=1, rho=0.5, xi=q=gamma=a=b=q_hat=1).
InterbankParams conditional_scenario();

struct TypeParams {
    Eigen::MatrixXd A, F, B, sigma, Q_hat, Q, R, S, H;
    Eigen::VectorXd eta;
    std::vector<Liquidity> b;  // one profile per state component
    double gamma = 1.0;

    Eigen::VectorXd b_at(double t) const;
};

/// K-type matrix-valued model.
struct GeneralModelParams {
    int K = 1;
    int n = 1;
    int m = 1;
    int r = 1;
    Eigen::VectorXd pi;
    std::vector<TypeParams> types;
    Eigen::MatrixXd sigma0;
    double T = 1.0;
    double theta = 0.0;  // carried for round-tripping interbank parameters
    bool risk_neutral = false;

    double risk_aversion(int k) const { return risk_neutral ? 0.0 : 1.0 / types[k].gamma; }
};

/// Throws ConfigError on dimension mismatches or a pi outside the simplex.
void check_dimensions(const GeneralModelParams& p);

GeneralModelParams interbank_to_general(const InterbankParams& p);
/// Inverse of interbank_to_general on K = n = m = r = 1 models with sigma > 0.
InterbankParams general_to_interbank(const GeneralModelParams& g);

struct ConvexityReport {
    bool ok = true;
    int type_index = -1;
    std::string message;
};

/// Q_hat >= 0, R > 0 and Q - S R^-1 S^T >= 0 for every type, with an eigenvalue floor of -1e-10.
ConvexityReport validate_convexity(const GeneralModelParams& p);

enum class Scheme { corrected, paper };

struct InitialCondition {
    enum class Kind { gaussian, point };
    Kind kind = Kind::gaussian;
    double mean = 0.0;         // bank (or 1D) state
    double std = 1.0;
    double market_mean = 0.0;  // market state, 2D problems and simulation
    double market_std = 1.0;
    /// Market start for conditional runs.
    double market_start = 0.0;
};

struct GridConfig {
    int steps = 2500;                   // time steps over [0, T]
    double dx = 0.01;                   // bank / 1D axis
    double dxbar = 0.01;                // market axis (2D)
    std::optional<double> x_upper;      // default derived from the initial law
    std::optional<double> xbar_bound;   // 2D market half-width
    std::optional<double> dt;           // FP time step; default: largest stable step
    int snapshots = 50;
};

struct McConfig {
    std::int64_t paths = 200000;
    double dt = 1e-4;
};

struct ScenarioConfig {
    InterbankParams params;
    std::optional<GeneralModelParams> general;  // set when params.kind == "general"
    GridConfig grid;
    InitialCondition initial;
    Scheme scheme = Scheme::corrected;
    bool renormalize_initial = false;
    std::uint64_t seed = 0;
    McConfig mc;
};

ScenarioConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& c);
/// Reads a scenario file; a sidecar written next to an artifact is accepted as well.
ScenarioConfig load_config(const std::string& path);

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

}  // namespace riskmfg
