#include "riskmfg/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "riskmfg/io.hpp"
#include "riskmfg/simulate.hpp"

namespace riskmfg {

ClosedLoopModel::Node ClosedLoopModel::at(double s) const {
    const double h = t[1] - t[0];
    const double pos = std::clamp(s / h, 0.0, static_cast<double>(t.size() - 1));
    const auto i = std::min(static_cast<std::size_t>(pos), t.size() - 2);
    const double w = pos - static_cast<double>(i);
    auto lerp = [&](const std::vector<double>& v) { return w == 0.0 ? v[i] : (1.0 - w) * v[i] + w * v[i + 1]; };
    return {lerp(A_bar), lerp(m_bar), lerp(slope), lerp(cross), lerp(intercept), lerp(Pi), lerp(Lambda), lerp(Upsilon)};
}

double feedback_control(const std::array<double, 3>& c, const InterbankParams& p, double x, double xbar) {
    return -((c[0] + p.xi) * x + (c[1] - p.xi) * xbar + c[2]);
}

double mean_field_control(const std::array<double, 3>& c, const InterbankParams& p, double xbar) {
    return feedback_control(c, p, xbar, xbar);
}

Eigen::VectorXd general_feedback_control(const GeneralModelParams& p, int k, const TypeCoefficients& c,
                                         const Eigen::VectorXd& x, const Eigen::VectorXd& xbar) {
    const auto& tp = p.types[k];
    const int n = p.n;
    Eigen::MatrixXd H_pi(n, p.K * n);
    for (int j = 0; j < p.K; ++j) H_pi.block(0, j * n, n, n) = p.pi(j) * tp.H;
    const Eigen::MatrixXd Bt = tp.B.transpose();
    const Eigen::MatrixXd St = tp.S.transpose();
    const Eigen::VectorXd v =
        (Bt * c.Pi + St) * x + (Bt * c.Lambda - St * H_pi) * xbar + Bt * c.Upsilon - St * tp.eta;
    return -tp.R.ldlt().solve(v);
}

ClosedLoopModel build_closed_loop(const CoefficientPath& c, const InterbankParams& p) {
    ClosedLoopModel m;
    m.params = p;
    m.t = c.t;
    m.Pi = c.Pi;
    m.Lambda = c.Lambda;
    m.Upsilon = c.Upsilon;
    m.sigma_idio = p.sigma_idiosyncratic();
    m.sigma_common = p.sigma_common();
    const std::size_t n = c.t.size();
    for (auto* v : {&m.A_bar, &m.m_bar, &m.slope, &m.cross, &m.intercept}) v->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double b = p.b(c.t[i]);
        m.A_bar[i] = -c.Pi[i] - c.Lambda[i];
        m.m_bar[i] = b - c.Upsilon[i];
        m.slope[i] = -(p.a + c.Pi[i] + p.xi);
        m.cross[i] = p.a - c.Lambda[i] + p.xi;
        m.intercept[i] = b - c.Upsilon[i];
    }
    return m;
}

double evaluate_cost(const PathEnsemble& e, const InterbankParams& p) {
    const std::size_t R = e.records();
    if (e.paths == 0 || R == 0 || e.u.size() != e.paths * R) throw ConfigError("ensemble carries no controls");
    std::vector<double> cost(e.paths);
    for (std::size_t i = 0; i < e.paths; ++i) {
        auto f = [&](std::size_t r) {
            const double d = e.xbar[e.at(i, r)] - e.x[e.at(i, r)];
            const double u = e.u[e.at(i, r)];
            return 0.5 * (p.q * d * d - 2.0 * p.xi * d * u + u * u);
        };
        double run = 0.0;
        for (std::size_t r = 0; r + 1 < R; ++r) run += 0.5 * (e.t[r + 1] - e.t[r]) * (f(r) + f(r + 1));
        const double dT = e.xbar[e.at(i, R - 1)] - e.x[e.at(i, R - 1)];
        cost[i] = 0.5 * p.q_hat * dT * dT + run;
    }
    const double n = static_cast<double>(e.paths);
    if (p.risk_neutral) {
        double s = 0.0;
        for (double c : cost) s += c;
        return s / n;
    }
    const double ig = 1.0 / p.gamma;
    double top = -std::numeric_limits<double>::infinity();
    for (double c : cost)
        if (std::isfinite(c * ig)) top = std::max(top, c * ig);
    if (!std::isfinite(top)) throw NumericalError("every cost exponent is non-finite");
    double s = 0.0;
    for (double c : cost) s += std::exp(c * ig - top);
    return p.gamma * (top + std::log(s / n));
}

void write_csv(const std::string& path, const CoefficientPath& c) {
    CsvWriter w(path, {"t", "Pi", "Lambda", "Upsilon", "Delta", "Gamma", "Psi"});
    for (std::size_t i = 0; i < c.nodes(); ++i)
        w.row({c.t[i], c.Pi[i], c.Lambda[i], c.Upsilon[i], c.Delta[i], c.Gamma[i], c.Psi[i]});
}

void write_csv(const std::string& path, const ClosedLoopModel& m) {
    CsvWriter w(path, {"t", "A_bar", "m_bar", "slope", "cross", "intercept"});
    for (std::size_t i = 0; i < m.nodes(); ++i)
        w.row({m.t[i], m.A_bar[i], m.m_bar[i], m.slope[i], m.cross[i], m.intercept[i]});
}

}  // namespace riskmfg
