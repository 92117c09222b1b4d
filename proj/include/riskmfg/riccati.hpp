#pragma once

#include <array>
#include <vector>

#include <Eigen/Dense>

#include "riskmfg/model.hpp"

namespace riskmfg {

/// Interbank control coefficients sampled on a uniform grid t_0 = 0 .. t_N = T.
struct CoefficientPath {
    std::vector<double> t;
    std::vector<double> Pi, Lambda, Upsilon, Delta, Gamma, Psi;

    std::size_t nodes() const { return t.size(); }
    double dt() const { return t[1] - t[0]; }
    /// Linear interpolation of (Pi, Lambda, Upsilon) at time s, clamped to [0, T].
    std::array<double, 3> feedback_at(double s) const;
};

/// Per-type coefficients of the general model at one time node.
struct TypeCoefficients {
    Eigen::MatrixXd Pi;       // n x n
    Eigen::MatrixXd Lambda;   // n x Kn
    Eigen::VectorXd Upsilon;  // n
    Eigen::MatrixXd Delta;    // Kn x Kn
    Eigen::VectorXd Gamma;    // Kn
    double Psi = 0.0;
};

struct GeneralCoefficientPath {
    std::vector<double> t;
    std::vector<std::vector<TypeCoefficients>> nodes;  // nodes[i][k]
    std::vector<Eigen::MatrixXd> A_bar;                // Kn x Kn per node
    std::vector<Eigen::VectorXd> m_bar;                // Kn per node
};

struct RiccatiOptions {
    double blowup_bound = 1e12;
};

/// Right-hand side of the six coupled scalar equations, ordered (Pi, Lambda, Upsilon, Delta, Gamma, Psi).
std::array<double, 6> interbank_rhs(const InterbankParams& p, double t, const std::array<double, 6>& y);

/// Backward classical RK4 from t = T to t = 0 with `steps` uniform steps.
CoefficientPath solve_interbank(const InterbankParams& p, int steps, const RiccatiOptions& opt = {});

/// Closed-loop market drift matrix and intercept assembled from the current coefficients.
void assemble_closed_loop(const GeneralModelParams& p, const std::vector<TypeCoefficients>& c, double t,
                          Eigen::MatrixXd& A_bar, Eigen::VectorXd& m_bar);

std::vector<TypeCoefficients> general_rhs(const GeneralModelParams& p, double t,
                                          const std::vector<TypeCoefficients>& c);
std::vector<TypeCoefficients> general_terminal(const GeneralModelParams& p);

GeneralCoefficientPath solve_general(const GeneralModelParams& p, int steps, const RiccatiOptions& opt = {});

/// Pi(t) for the simplified scenario, 22 / (23 e^{22(1-t)} - 1).
double closed_form_pi_simplified(double t);

}  // namespace riskmfg
