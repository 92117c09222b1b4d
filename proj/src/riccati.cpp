#include "riskmfg/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace riskmfg {

namespace {

void check_steps(int steps) {
    if (steps < 2) throw ConfigError("steps must be >= 2");
}

[[noreturn]] void blowup(double t, const char* what) {
    std::ostringstream os;
    os << "coefficient blow-up: " << what << " exceeded the magnitude bound at t=" << t
       << " (finite-time Riccati explosion for these parameters)";
    throw NumericalError(os.str());
}

}  // namespace

std::array<double, 3> CoefficientPath::feedback_at(double s) const {
    const double h = dt();
    const double pos = std::clamp(s / h, 0.0, static_cast<double>(t.size() - 1));
    const auto i = std::min(static_cast<std::size_t>(pos), t.size() - 2);
    const double w = pos - static_cast<double>(i);
    auto lerp = [&](const std::vector<double>& v) { return w == 0.0 ? v[i] : (1.0 - w) * v[i] + w * v[i + 1]; };
    return {lerp(Pi), lerp(Lambda), lerp(Upsilon)};
}

std::array<double, 6> interbank_rhs(const InterbankParams& p, double t, const std::array<double, 6>& y) {
    const auto [P, L, U, D, G, S] = y;
    const double ig = p.risk_aversion();
    const double s2 = p.sigma * p.sigma;
    const double c2 = p.sigma_common() * p.sigma_common();
    const double a = p.a, xi = p.xi, q = p.q;
    const double b = p.b(t);
    (void)S;
    std::array<double, 6> d{};
    d[0] = (1.0 - s2 * ig) * P * P + (2.0 * a + 2.0 * xi - 2.0 * ig * c2 * L) * P - ig * c2 * L * L + xi * xi - q;
    d[1] = (1.0 - ig * c2) * L * L + (a + 2.0 * P + xi - s2 * ig * P - ig * c2 * D) * L -
           (xi + a + ig * c2 * D) * P + q - xi * xi;
    d[2] = (P + L + a + xi - s2 * ig * P - ig * c2 * L) * U - (ig * c2 * G + b) * P - (ig * c2 * G + b) * L;
    d[3] = -ig * c2 * D * D - 2.0 * (P + L + ig * c2 * L) * D + (1.0 - s2 * ig) * L * L - 2.0 * (xi + a) * L - q +
           xi * xi;
    d[4] = (P + L - ig * c2 * (L + D)) * G + (U - b - s2 * ig * U) * L + (-xi - a + D - ig * c2 * D) * U - b * D;
    d[5] = (1.0 - s2 * ig) * U * U - ig * c2 * G * G - s2 * P - 2.0 * c2 * L + 2.0 * (G - ig * c2 * G - b) * U -
           c2 * D - 2.0 * b * G;
    return d;
}

CoefficientPath solve_interbank(const InterbankParams& p, int steps, const RiccatiOptions& opt) {
    check_steps(steps);
    validate(p);
    const auto n = static_cast<std::size_t>(steps);
    const double h = p.T / steps;

    CoefficientPath out;
    out.t.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) out.t[i] = i == n ? p.T : static_cast<double>(i) * h;
    for (auto* v : {&out.Pi, &out.Lambda, &out.Upsilon, &out.Delta, &out.Gamma, &out.Psi}) v->assign(n + 1, 0.0);

    std::array<double, 6> y{p.q_hat, -p.q_hat, 0.0, p.q_hat, 0.0, 0.0};
    auto store = [&](std::size_t i) {
        out.Pi[i] = y[0];
        out.Lambda[i] = y[1];
        out.Upsilon[i] = y[2];
        out.Delta[i] = y[3];
        out.Gamma[i] = y[4];
        out.Psi[i] = y[5];
    };
    store(n);

    auto axpy = [](const std::array<double, 6>& a, double s, const std::array<double, 6>& k) {
        std::array<double, 6> r{};
        for (int j = 0; j < 6; ++j) r[j] = a[j] + s * k[j];
        return r;
    };
    static constexpr const char* names[] = {"Pi", "Lambda", "Upsilon", "Delta", "Gamma", "Psi"};

    // Backward march: the step is -h.
    for (std::size_t i = n; i-- > 0;) {
        const double t1 = out.t[i + 1];
        const double tm = t1 - 0.5 * h;
        const double t0 = out.t[i];
        const auto k1 = interbank_rhs(p, t1, y);
        const auto k2 = interbank_rhs(p, tm, axpy(y, -0.5 * h, k1));
        const auto k3 = interbank_rhs(p, tm, axpy(y, -0.5 * h, k2));
        const auto k4 = interbank_rhs(p, t0, axpy(y, -h, k3));
        for (int j = 0; j < 6; ++j) y[j] -= h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        for (int j = 0; j < 6; ++j)
            if (!std::isfinite(y[j]) || std::abs(y[j]) > opt.blowup_bound) blowup(t0, names[j]);
        store(i);
    }
    return out;
}

namespace {

struct TypeBlocks {
    Eigen::MatrixXd F_pi, H_pi, e;  // n x Kn
    Eigen::MatrixXd R_inv;
};

Eigen::MatrixXd ones_block(int K, int n) {
    Eigen::MatrixXd M(K * n, n);
    for (int k = 0; k < K; ++k) M.block(k * n, 0, n, n).setIdentity();
    return M;
}

TypeBlocks blocks_for(const GeneralModelParams& p, int k) {
    const int n = p.n, Kn = p.K * p.n;
    TypeBlocks b;
    b.F_pi.resize(n, Kn);
    b.H_pi.resize(n, Kn);
    b.e = Eigen::MatrixXd::Zero(n, Kn);
    for (int j = 0; j < p.K; ++j) {
        b.F_pi.block(0, j * n, n, n) = p.pi(j) * p.types[k].F;
        b.H_pi.block(0, j * n, n, n) = p.pi(j) * p.types[k].H;
    }
    b.e.block(0, k * n, n, n).setIdentity();
    b.R_inv = p.types[k].R.inverse();
    return b;
}

using State = std::vector<TypeCoefficients>;

State axpy(const State& y, double s, const State& k) {
    State r = y;
    for (std::size_t i = 0; i < y.size(); ++i) {
        r[i].Pi += s * k[i].Pi;
        r[i].Lambda += s * k[i].Lambda;
        r[i].Upsilon += s * k[i].Upsilon;
        r[i].Delta += s * k[i].Delta;
        r[i].Gamma += s * k[i].Gamma;
        r[i].Psi += s * k[i].Psi;
    }
    return r;
}

double max_abs(const TypeCoefficients& c) {
    double m = std::abs(c.Psi);
    m = std::max(m, c.Pi.cwiseAbs().maxCoeff());
    m = std::max(m, c.Lambda.cwiseAbs().maxCoeff());
    m = std::max(m, c.Upsilon.cwiseAbs().maxCoeff());
    m = std::max(m, c.Delta.cwiseAbs().maxCoeff());
    m = std::max(m, c.Gamma.cwiseAbs().maxCoeff());
    return m;
}

}  // namespace

void assemble_closed_loop(const GeneralModelParams& p, const std::vector<TypeCoefficients>& c, double t,
                          Eigen::MatrixXd& A_bar, Eigen::VectorXd& m_bar) {
    const int n = p.n, Kn = p.K * p.n;
    A_bar.resize(Kn, Kn);
    m_bar.resize(Kn);
    for (int k = 0; k < p.K; ++k) {
        const auto& tp = p.types[k];
        const auto bl = blocks_for(p, k);
        const Eigen::MatrixXd BRi = tp.B * bl.R_inv;
        A_bar.block(k * n, 0, n, Kn) = (tp.A - BRi * (tp.B.transpose() * c[k].Pi + tp.S.transpose())) * bl.e +
                                       bl.F_pi - BRi * (tp.B.transpose() * c[k].Lambda - tp.S.transpose() * bl.H_pi);
        m_bar.segment(k * n, n) =
            tp.b_at(t) + BRi * tp.S.transpose() * tp.eta - BRi * tp.B.transpose() * c[k].Upsilon;
    }
}

std::vector<TypeCoefficients> general_rhs(const GeneralModelParams& p, double t,
                                          const std::vector<TypeCoefficients>& c) {
    Eigen::MatrixXd A_bar;
    Eigen::VectorXd m_bar;
    assemble_closed_loop(p, c, t, A_bar, m_bar);
    const Eigen::MatrixXd ones = ones_block(p.K, p.n);
    const Eigen::MatrixXd ones_t = ones.transpose();
    const Eigen::MatrixXd S0 = p.sigma0 * p.sigma0.transpose();

    std::vector<TypeCoefficients> d(c.size());
    for (int k = 0; k < p.K; ++k) {
        const auto& tp = p.types[k];
        const auto bl = blocks_for(p, k);
        const double ig = p.risk_aversion(k);
        const auto& Pi = c[k].Pi;
        const auto& L = c[k].Lambda;
        const auto& U = c[k].Upsilon;
        const auto& D = c[k].Delta;
        const auto& G = c[k].Gamma;
        const Eigen::VectorXd b = tp.b_at(t);
        const Eigen::MatrixXd Sk = tp.sigma * tp.sigma.transpose();
        const Eigen::MatrixXd At = tp.A.transpose();
        const Eigen::MatrixXd Bt = tp.B.transpose();
        const Eigen::MatrixXd St = tp.S.transpose();
        const Eigen::MatrixXd PBS = Pi * tp.B + tp.S;                        // n x m
        const Eigen::MatrixXd LBHS = L.transpose() * tp.B - bl.H_pi.transpose() * tp.S;  // Kn x m
        const Eigen::MatrixXd PL = Pi + L * ones;                           // n x n
        const Eigen::MatrixXd LD = L.transpose() + D * ones;                // Kn x n
        const Eigen::VectorXd BU_Seta = Bt * U - St * tp.eta;               // m
        const Eigen::VectorXd UG = U + ones_t * G;                          // n

        auto& o = d[static_cast<std::size_t>(k)];
        o.Pi = -Pi * tp.A - At * Pi - tp.Q + PBS * bl.R_inv * (Bt * Pi + St) -
               ig * (Pi * Sk * Pi + PL * S0 * (Pi + ones_t * L.transpose()));
        o.Lambda = -Pi * bl.F_pi - L * A_bar - At * L + tp.Q * bl.H_pi + PBS * bl.R_inv * (Bt * L - St * bl.H_pi) -
                   ig * (Pi * Sk * L + PL * S0 * (ones_t * D + L));
        o.Upsilon = -Pi * b - L * m_bar - At * U + tp.Q * tp.eta + PBS * bl.R_inv * BU_Seta -
                    ig * (Pi * Sk * U + PL * S0 * UG);
        o.Delta = -bl.H_pi.transpose() * tp.Q * bl.H_pi + D * A_bar + A_bar.transpose() * D -
                  2.0 * bl.F_pi.transpose() * L + LBHS * bl.R_inv * (Bt * L - St * bl.H_pi) -
                  ig * (L.transpose() * Sk * L + LD * S0 * (L + ones_t * D));
        o.Gamma = -bl.H_pi.transpose() * tp.Q * tp.eta - bl.F_pi.transpose() * U - L.transpose() * b - D * m_bar -
                  A_bar.transpose() * G + LBHS * bl.R_inv * BU_Seta -
                  ig * (L.transpose() * Sk * U + LD * S0 * UG);
        const Eigen::MatrixXd inner = Pi + 2.0 * ones_t * L.transpose() + ones_t * D * ones;
        const Eigen::RowVectorXd UB_etaS = U.transpose() * tp.B - tp.eta.transpose() * tp.S;
        const Eigen::RowVectorXd UG_row = U.transpose() + G.transpose() * ones;
        o.Psi = -tp.eta.dot(tp.Q * tp.eta) - 2.0 * U.dot(b) - 2.0 * G.dot(m_bar) -
                (p.sigma0.transpose() * inner * p.sigma0).trace() - (tp.sigma.transpose() * Pi * tp.sigma).trace() +
                (UB_etaS * bl.R_inv * BU_Seta)(0) - ig * (U.dot(Sk * U) + (UG_row * S0 * UG)(0));
    }
    return d;
}

std::vector<TypeCoefficients> general_terminal(const GeneralModelParams& p) {
    std::vector<TypeCoefficients> c(static_cast<std::size_t>(p.K));
    for (int k = 0; k < p.K; ++k) {
        const auto& tp = p.types[k];
        const auto bl = blocks_for(p, k);
        auto& o = c[static_cast<std::size_t>(k)];
        o.Pi = tp.Q_hat;
        o.Lambda = -tp.Q_hat * bl.H_pi;
        o.Upsilon = -tp.Q_hat * tp.eta;
        o.Delta = -bl.H_pi.transpose() * o.Lambda;
        o.Gamma = -bl.H_pi.transpose() * o.Upsilon;
        o.Psi = -tp.eta.dot(o.Upsilon);
    }
    return c;
}

GeneralCoefficientPath solve_general(const GeneralModelParams& p, int steps, const RiccatiOptions& opt) {
    check_steps(steps);
    check_dimensions(p);
    if (!(p.T > 0.0)) throw ConfigError("T <= 0");
    const auto n = static_cast<std::size_t>(steps);
    const double h = p.T / steps;

    GeneralCoefficientPath out;
    out.t.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) out.t[i] = i == n ? p.T : static_cast<double>(i) * h;
    out.nodes.resize(n + 1);
    out.A_bar.resize(n + 1);
    out.m_bar.resize(n + 1);

    State y = general_terminal(p);
    auto store = [&](std::size_t i) {
        out.nodes[i] = y;
        assemble_closed_loop(p, y, out.t[i], out.A_bar[i], out.m_bar[i]);
    };
    store(n);

    for (std::size_t i = n; i-- > 0;) {
        const double t1 = out.t[i + 1];
        const double tm = t1 - 0.5 * h;
        const double t0 = out.t[i];
        const auto k1 = general_rhs(p, t1, y);
        const auto k2 = general_rhs(p, tm, axpy(y, -0.5 * h, k1));
        const auto k3 = general_rhs(p, tm, axpy(y, -0.5 * h, k2));
        const auto k4 = general_rhs(p, t0, axpy(y, -h, k3));
        State incr = axpy(axpy(axpy(k1, 2.0, k2), 2.0, k3), 1.0, k4);
        y = axpy(y, -h / 6.0, incr);
        for (auto& c : y) {
            c.Pi = 0.5 * (c.Pi + c.Pi.transpose()).eval();
            c.Delta = 0.5 * (c.Delta + c.Delta.transpose()).eval();
            const double m = max_abs(c);
            if (!std::isfinite(m) || m > opt.blowup_bound) blowup(t0, "a general-model coefficient");
        }
        store(i);
    }
    return out;
}

double closed_form_pi_simplified(double t) { return 22.0 / (23.0 * std::exp(22.0 * (1.0 - t)) - 1.0); }

}  // namespace riskmfg
