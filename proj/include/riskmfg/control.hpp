#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "riskmfg/model.hpp"
#include "riskmfg/riccati.hpp"

namespace riskmfg {

struct PathEnsemble;

/// Per-node closed-loop drift of the market and of a representative bank.
///   market: dx̄ = (A_bar x̄ + m_bar) dt + sigma_common dw0
///   bank:   dx  = (slope x + cross x̄ + intercept) dt + sigma_idio dw + sigma_common dw0
struct ClosedLoopModel {
    std::vector<double> t;
    std::vector<double> A_bar, m_bar;
    std::vector<double> slope, cross, intercept;
    std::vector<double> Pi, Lambda, Upsilon;
    double sigma_idio = 0.0;
    double sigma_common = 0.0;
    InterbankParams params;

    struct Node {
        double A_bar, m_bar, slope, cross, intercept, Pi, Lambda, Upsilon;
    };

    std::size_t nodes() const { return t.size(); }
    double T() const { return t.back(); }
    /// Linear interpolation in time, clamped to [0, T].
    Node at(double s) const;
};

double feedback_control(const std::array<double, 3>& coeffs, const InterbankParams& p, double x, double xbar);
double mean_field_control(const std::array<double, 3>& coeffs, const InterbankParams& p, double xbar);

/// Equilibrium control of type k for the general model:
/// u = -R^-1 [(B'Pi + S')x + (B'Lambda - S'H^pi)x̄ + B'Upsilon - S'eta].
Eigen::VectorXd general_feedback_control(const GeneralModelParams& p, int k, const TypeCoefficients& c,
                                         const Eigen::VectorXd& x, const Eigen::VectorXd& xbar);

ClosedLoopModel build_closed_loop(const CoefficientPath& coeffs, const InterbankParams& p);

/// gamma log of the sample mean of exp((terminal + running)/gamma), running cost by trapezoid per path.
/// Plain sample mean when p.risk_neutral.
double evaluate_cost(const PathEnsemble& ensemble, const InterbankParams& p);

void write_csv(const std::string& path, const CoefficientPath& c);
void write_csv(const std::string& path, const ClosedLoopModel& m);

}  // namespace riskmfg
