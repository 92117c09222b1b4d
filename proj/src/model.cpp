#include "riskmfg/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace riskmfg {

using nlohmann::json;

Liquidity::Liquidity(std::vector<double> times, std::vector<double> values)
    : times_(std::move(times)), values_(std::move(values)) {
    if (times_.size() != values_.size() || times_.empty())
        throw ConfigError("liquidity table needs matching, nonempty t and b arrays");
    if (!std::is_sorted(times_.begin(), times_.end()) ||
        std::adjacent_find(times_.begin(), times_.end()) != times_.end())
        throw ConfigError("liquidity table times must be strictly increasing");
    constant_ = values_.front();
}

double Liquidity::operator()(double t) const {
    if (times_.empty()) return constant_;
    if (t <= times_.front()) return values_.front();
    if (t >= times_.back()) return values_.back();
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const auto i = static_cast<std::size_t>(it - times_.begin());
    const double w = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
    return (1.0 - w) * values_[i - 1] + w * values_[i];
}

double Liquidity::max_abs() const {
    if (times_.empty()) return std::abs(constant_);
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

double InterbankParams::sigma_common() const { return sigma * rho; }
double InterbankParams::sigma_idiosyncratic() const { return sigma * std::sqrt(1.0 - rho * rho); }

void validate(const InterbankParams& p) {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    const double fields[] = {p.a, p.q, p.q_hat, p.xi, p.sigma, p.rho, p.gamma, p.theta, p.T};
    for (double f : fields)
        if (!std::isfinite(f)) fail("parameters must be finite");
    if (p.q_hat < 0.0) fail("q_hat < 0");
    if (p.q - p.xi * p.xi < 0.0) fail("q - xi^2 < 0");
    if (p.rho < 0.0 || p.rho > 1.0) fail("rho outside [0, 1]");
    if (p.sigma < 0.0) fail("sigma < 0");
    if (!(p.gamma > 0.0)) fail("gamma <= 0");
    if (!(p.T > 0.0)) fail("T <= 0");
}

InterbankParams simplified_scenario() {
    InterbankParams p;
    p.a = 10.0;
    p.q = p.q_hat = p.xi = p.sigma = p.rho = p.gamma = 1.0;
    p.b = Liquidity{1.0};
    p.theta = -0.7;
    p.T = 1.0;
    return p;
}

InterbankParams baseline_scenario() { return InterbankParams{}; }

InterbankParams conditional_scenario() {
    InterbankParams p;
    p.sigma = 1.0;
    p.rho = 0.5;
    p.xi = p.q = p.gamma = p.a = p.q_hat = 1.0;
    p.b = Liquidity{1.0};
    p.theta = -0.7;
    p.T = 0.25;
    return p;
}

Eigen::VectorXd TypeParams::b_at(double t) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(b.size()));
    for (std::size_t i = 0; i < b.size(); ++i) v(static_cast<Eigen::Index>(i)) = b[i](t);
    return v;
}

void check_dimensions(const GeneralModelParams& p) {
    auto fail = [](const std::string& m) { throw ConfigError("dimension mismatch: " + m); };
    if (p.K < 1 || p.n < 1 || p.m < 1 || p.r < 1) fail("K, n, m, r must be positive");
    if (static_cast<int>(p.types.size()) != p.K) fail("types.size() != K");
    if (p.pi.size() != p.K) fail("pi.size() != K");
    if (p.sigma0.rows() != p.n || p.sigma0.cols() != p.r) fail("sigma0 must be n x r");
    for (int k = 0; k < p.K; ++k) {
        const auto& t = p.types[k];
        const std::string tag = " (type " + std::to_string(k) + ")";
        auto shape = [&](const Eigen::MatrixXd& M, int rows, int cols, const char* name) {
            if (M.rows() != rows || M.cols() != cols) fail(std::string(name) + tag);
        };
        shape(t.A, p.n, p.n, "A");
        shape(t.F, p.n, p.n, "F");
        shape(t.B, p.n, p.m, "B");
        shape(t.sigma, p.n, p.r, "sigma");
        shape(t.Q_hat, p.n, p.n, "Q_hat");
        shape(t.Q, p.n, p.n, "Q");
        shape(t.R, p.m, p.m, "R");
        shape(t.S, p.n, p.m, "S");
        shape(t.H, p.n, p.n, "H");
        if (t.eta.size() != p.n) fail("eta" + tag);
        if (static_cast<int>(t.b.size()) != p.n) fail("b" + tag);
        if (!(t.gamma > 0.0)) throw ConfigError("gamma <= 0" + tag);
    }
    double sum = 0.0;
    for (int k = 0; k < p.K; ++k) {
        if (p.pi(k) < 0.0) throw ConfigError("pi has a negative entry");
        sum += p.pi(k);
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("pi does not sum to 1");
}

GeneralModelParams interbank_to_general(const InterbankParams& p) {
    GeneralModelParams g;
    g.K = g.n = g.m = g.r = 1;
    g.pi = Eigen::VectorXd::Ones(1);
    TypeParams t;
    auto s = [](double v) { return Eigen::MatrixXd::Constant(1, 1, v); };
    t.A = s(-p.a);
    t.F = s(p.a);
    t.B = s(1.0);
    t.H = s(1.0);
    t.eta = Eigen::VectorXd::Zero(1);
    t.Q_hat = s(p.q_hat);
    t.Q = s(p.q);
    t.S = s(p.xi);
    t.R = s(1.0);
    t.sigma = s(p.sigma_idiosyncratic());
    t.b = {p.b};
    t.gamma = p.gamma;
    g.types = {t};
    g.sigma0 = s(p.sigma_common());
    g.T = p.T;
    g.theta = p.theta;
    g.risk_neutral = p.risk_neutral;
    return g;
}

InterbankParams general_to_interbank(const GeneralModelParams& g) {
    if (g.K != 1 || g.n != 1 || g.m != 1 || g.r != 1)
        throw ConfigError("general_to_interbank needs a scalar single-type model");
    const auto& t = g.types[0];
    InterbankParams p;
    p.a = -t.A(0, 0);
    p.q = t.Q(0, 0);
    p.q_hat = t.Q_hat(0, 0);
    p.xi = t.S(0, 0);
    const double s0 = g.sigma0(0, 0);
    const double s1 = t.sigma(0, 0);
    p.sigma = std::hypot(s0, s1);
    p.rho = p.sigma > 0.0 ? s0 / p.sigma : 0.0;
    p.gamma = t.gamma;
    p.b = t.b[0];
    p.theta = g.theta;
    p.T = g.T;
    p.risk_neutral = g.risk_neutral;
    return p;
}

ConvexityReport validate_convexity(const GeneralModelParams& p) {
    constexpr double floor = -1e-10;
    check_dimensions(p);
    auto min_eig = [](const Eigen::MatrixXd& M) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    };
    for (int k = 0; k < p.K; ++k) {
        const auto& t = p.types[k];
        if (min_eig(t.Q_hat) < floor) return {false, k, "Q_hat not positive semidefinite"};
        if (!(min_eig(t.R) > 0.0)) return {false, k, "R not positive definite"};
        const Eigen::MatrixXd schur = t.Q - t.S * t.R.inverse() * t.S.transpose();
        if (min_eig(schur) < floor) return {false, k, "Q - S R^-1 S^T not positive semidefinite"};
    }
    return {};
}

std::string to_string(Scheme s) { return s == Scheme::corrected ? "corrected" : "paper"; }

Scheme scheme_from_string(const std::string& s) {
    if (s == "corrected") return Scheme::corrected;
    if (s == "paper") return Scheme::paper;
    throw ConfigError("unknown scheme '" + s + "' (expected corrected|paper)");
}

namespace {

Liquidity liquidity_from_json(const json& j) {
    if (j.is_number()) return Liquidity{j.get<double>()};
    if (j.is_object()) return Liquidity{j.at("t").get<std::vector<double>>(), j.at("b").get<std::vector<double>>()};
    throw ConfigError("b must be a number or an object {t: [...], b: [...]}");
}

json liquidity_to_json(const Liquidity& b) {
    if (b.is_constant()) return b.constant();
    return json{{"t", b.times()}, {"b", b.values()}};
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* name) {
    if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
    if (!j.is_array() || j.empty()) throw ConfigError(std::string("matrix '") + name + "' must be a nested array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    if (!j[0].is_array()) {
        // Flat array reads as a column vector.
        Eigen::MatrixXd M(rows, 1);
        for (Eigen::Index i = 0; i < rows; ++i) M(i, 0) = j[static_cast<std::size_t>(i)].get<double>();
        return M;
    }
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd M(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != cols)
            throw ConfigError(std::string("matrix '") + name + "' has ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) M(i, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return M;
}

json matrix_to_json(const Eigen::MatrixXd& M) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(i, c));
        rows.push_back(row);
    }
    return rows;
}

GeneralModelParams general_from_json(const json& j) {
    GeneralModelParams g;
    g.K = j.value("K", 1);
    g.n = j.value("n", 1);
    g.m = j.value("m", 1);
    g.r = j.value("r", 1);
    g.T = j.at("T").get<double>();
    g.theta = j.value("theta", 0.0);
    g.risk_neutral = j.value("risk_neutral", false);
    const auto pis = j.at("pi").get<std::vector<double>>();
    g.pi = Eigen::Map<const Eigen::VectorXd>(pis.data(), static_cast<Eigen::Index>(pis.size()));
    g.sigma0 = matrix_from_json(j.at("sigma0"), "sigma0");
    for (const auto& tj : j.at("types")) {
        TypeParams t;
        t.A = matrix_from_json(tj.at("A"), "A");
        t.F = matrix_from_json(tj.at("F"), "F");
        t.B = matrix_from_json(tj.at("B"), "B");
        t.sigma = matrix_from_json(tj.at("sigma"), "sigma");
        t.Q_hat = matrix_from_json(tj.at("Q_hat"), "Q_hat");
        t.Q = matrix_from_json(tj.at("Q"), "Q");
        t.R = matrix_from_json(tj.at("R"), "R");
        t.S = matrix_from_json(tj.at("S"), "S");
        t.H = matrix_from_json(tj.at("H"), "H");
        t.eta = matrix_from_json(tj.at("eta"), "eta").reshaped();
        t.gamma = tj.at("gamma").get<double>();
        const auto& bj = tj.at("b");
        if (bj.is_array())
            for (const auto& e : bj) t.b.push_back(liquidity_from_json(e));
        else
            t.b.assign(static_cast<std::size_t>(g.n), liquidity_from_json(bj));
        g.types.push_back(std::move(t));
    }
    check_dimensions(g);
    return g;
}

json general_to_json(const GeneralModelParams& g) {
    json types = json::array();
    for (const auto& t : g.types) {
        json b = json::array();
        for (const auto& l : t.b) b.push_back(liquidity_to_json(l));
        types.push_back({{"A", matrix_to_json(t.A)},         {"F", matrix_to_json(t.F)},
                         {"B", matrix_to_json(t.B)},         {"sigma", matrix_to_json(t.sigma)},
                         {"Q_hat", matrix_to_json(t.Q_hat)}, {"Q", matrix_to_json(t.Q)},
                         {"R", matrix_to_json(t.R)},         {"S", matrix_to_json(t.S)},
                         {"H", matrix_to_json(t.H)},         {"eta", std::vector<double>(t.eta.begin(), t.eta.end())},
                         {"b", b},                           {"gamma", t.gamma}});
    }
    return {{"kind", "general"},
            {"K", g.K},
            {"n", g.n},
            {"m", g.m},
            {"r", g.r},
            {"T", g.T},
            {"theta", g.theta},
            {"risk_neutral", g.risk_neutral},
            {"pi", std::vector<double>(g.pi.begin(), g.pi.end())},
            {"sigma0", matrix_to_json(g.sigma0)},
            {"types", types}};
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

}  // namespace

ScenarioConfig config_from_json(const json& root) {
    const json& j = root.contains("config") ? root.at("config") : root;
    ScenarioConfig c;
    try {
        static const json no_params = json::object();
        const json& pj = j.contains("params") ? j.at("params") : no_params;
        if (pj.value("kind", std::string("interbank")) == "general") {
            c.general = general_from_json(pj);
            const auto report = validate_convexity(*c.general);
            if (!report.ok)
                throw ConfigError(report.message + " (type " + std::to_string(report.type_index) + ")");
            c.params.T = c.general->T;
            c.params.theta = c.general->theta;
        } else {
            auto& p = c.params;
            for (const char* k : {"a", "q", "q_hat", "xi", "sigma", "rho", "gamma", "theta", "T"})
                if (pj.contains(k) && !pj.at(k).is_number()) throw ConfigError(std::string("params.") + k + " must be a number");
            read_opt(pj, "a", p.a);
            read_opt(pj, "q", p.q);
            read_opt(pj, "q_hat", p.q_hat);
            read_opt(pj, "xi", p.xi);
            read_opt(pj, "sigma", p.sigma);
            read_opt(pj, "rho", p.rho);
            read_opt(pj, "gamma", p.gamma);
            if (pj.contains("b")) p.b = liquidity_from_json(pj.at("b"));
            read_opt(pj, "theta", p.theta);
            read_opt(pj, "T", p.T);
            read_opt(pj, "risk_neutral", p.risk_neutral);
            validate(p);
        }
        if (auto it = j.find("grid"); it != j.end()) {
            const json& g = *it;
            read_opt(g, "steps", c.grid.steps);
            read_opt(g, "dx", c.grid.dx);
            read_opt(g, "dxbar", c.grid.dxbar);
            read_opt(g, "snapshots", c.grid.snapshots);
            if (auto u = g.find("x_upper"); u != g.end() && !u->is_null()) c.grid.x_upper = u->get<double>();
            if (auto u = g.find("xbar_bound"); u != g.end() && !u->is_null()) c.grid.xbar_bound = u->get<double>();
            if (auto u = g.find("dt"); u != g.end() && !u->is_null()) c.grid.dt = u->get<double>();
        }
        if (auto it = j.find("initial"); it != j.end()) {
            const json& ij = *it;
            const std::string kind = ij.value("kind", std::string("gaussian"));
            if (kind == "gaussian") {
                c.initial.kind = InitialCondition::Kind::gaussian;
            } else if (kind == "point") {
                c.initial.kind = InitialCondition::Kind::point;
                c.initial.std = c.initial.market_std = 0.0;
            } else {
                throw ConfigError("initial.kind must be gaussian or point");
            }
            read_opt(ij, "mean", c.initial.mean);
            read_opt(ij, "std", c.initial.std);
            read_opt(ij, "market_mean", c.initial.market_mean);
            read_opt(ij, "market_std", c.initial.market_std);
            read_opt(ij, "market_start", c.initial.market_start);
            if (c.initial.kind == InitialCondition::Kind::point) c.initial.std = c.initial.market_std = 0.0;
        }
        if (auto it = j.find("mode"); it != j.end()) {
            if (auto s = it->find("scheme"); s != it->end()) c.scheme = scheme_from_string(s->get<std::string>());
            read_opt(*it, "renormalize_initial", c.renormalize_initial);
        }
        read_opt(j, "seed", c.seed);
        if (auto it = j.find("mc"); it != j.end()) {
            read_opt(*it, "paths", c.mc.paths);
            read_opt(*it, "dt", c.mc.dt);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    if (c.grid.steps < 2) throw ConfigError("grid.steps < 2");
    if (!(c.grid.dx > 0.0) || !(c.grid.dxbar > 0.0)) throw ConfigError("grid cell sizes must be > 0");
    if (c.grid.x_upper && !(*c.grid.x_upper > c.params.theta)) throw ConfigError("grid.x_upper must exceed theta");
    if (c.grid.xbar_bound && !(*c.grid.xbar_bound > 0.0)) throw ConfigError("grid.xbar_bound must be > 0");
    if (c.grid.dt && !(*c.grid.dt > 0.0)) throw ConfigError("grid.dt must be > 0");
    if (c.grid.snapshots < 1) throw ConfigError("grid.snapshots < 1");
    if (c.initial.std < 0.0 || c.initial.market_std < 0.0) throw ConfigError("initial std < 0");
    if (c.mc.paths < 1) throw ConfigError("mc.paths < 1");
    if (!(c.mc.dt > 0.0)) throw ConfigError("mc.dt must be > 0");
    return c;
}

json to_json(const ScenarioConfig& c) {
    json params;
    if (c.general) {
        params = general_to_json(*c.general);
    } else {
        const auto& p = c.params;
        params = {{"kind", "interbank"}, {"a", p.a},         {"q", p.q},
                  {"q_hat", p.q_hat},    {"xi", p.xi},       {"sigma", p.sigma},
                  {"rho", p.rho},        {"gamma", p.gamma}, {"b", liquidity_to_json(p.b)},
                  {"theta", p.theta},    {"T", p.T},         {"risk_neutral", p.risk_neutral}};
    }
    json grid = {{"steps", c.grid.steps}, {"dx", c.grid.dx}, {"dxbar", c.grid.dxbar}, {"snapshots", c.grid.snapshots}};
    grid["x_upper"] = c.grid.x_upper ? json(*c.grid.x_upper) : json(nullptr);
    grid["xbar_bound"] = c.grid.xbar_bound ? json(*c.grid.xbar_bound) : json(nullptr);
    grid["dt"] = c.grid.dt ? json(*c.grid.dt) : json(nullptr);
    const auto& ic = c.initial;
    json initial = {{"kind", ic.kind == InitialCondition::Kind::gaussian ? "gaussian" : "point"},
                    {"mean", ic.mean},
                    {"std", ic.std},
                    {"market_mean", ic.market_mean},
                    {"market_std", ic.market_std},
                    {"market_start", ic.market_start}};
    return {{"params", params},
            {"grid", grid},
            {"initial", initial},
            {"mode", {{"scheme", to_string(c.scheme)}, {"renormalize_initial", c.renormalize_initial}}},
            {"seed", c.seed},
            {"mc", {{"paths", c.mc.paths}, {"dt", c.mc.dt}}}};
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ConfigError("parse error in '" + path + "': " + e.what());
    }
    return config_from_json(j);
}

}  // namespace riskmfg
