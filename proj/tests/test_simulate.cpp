#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "riskmfg/parallel.hpp"
#include "riskmfg/simulate.hpp"

using namespace riskmfg;

namespace {

ClosedLoopModel model_of(const InterbankParams& p, int steps = 250) {
    return build_closed_loop(solve_interbank(p, steps), p);
}

struct ThreadsEnv {
    explicit ThreadsEnv(const char* n) { setenv("RISKMFG_THREADS", n, 1); }
    ~ThreadsEnv() { unsetenv("RISKMFG_THREADS"); }
};

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("noise-free paths follow the closed-loop ODE") {
    auto p = baseline_scenario();
    p.sigma = 0.0;
    const auto m = model_of(p, 2500);
    SimulationConfig cfg;
    cfg.paths = 3;
    cfg.dt = 1e-4;
    cfg.initial.kind = InitialCondition::Kind::point;
    cfg.initial.mean = 0.5;
    cfg.initial.market_mean = -0.2;
    const auto e = simulate_paths(m, cfg);

    // Reference: classical RK4 on (x, xbar) with the same coefficient path.
    auto f = [&](double t, double x, double xb) {
        const auto n = m.at(t);
        return std::array<double, 2>{n.slope * x + n.cross * xb + n.intercept, n.A_bar * xb + n.m_bar};
    };
    double x = 0.5, xb = -0.2;
    const int N = 2500;
    const double h = p.T / N;
    double err = 0.0;
    for (int i = 0; i < N; ++i) {
        const double t = i * h;
        const auto k1 = f(t, x, xb);
        const auto k2 = f(t + h / 2, x + h / 2 * k1[0], xb + h / 2 * k1[1]);
        const auto k3 = f(t + h / 2, x + h / 2 * k2[0], xb + h / 2 * k2[1]);
        const auto k4 = f(t + h, x + h * k3[0], xb + h * k3[1]);
        x += h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]);
        xb += h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]);
        err = std::max(err, std::abs(x - e.x[e.at(1, i + 1)]));
    }
    CHECK(err <= 10 * h);
    CHECK(e.x[e.at(0, N)] == e.x[e.at(2, N)]);
}

TEST_CASE("rho = 1 makes every bank follow the market") {
    auto p = baseline_scenario();
    p.rho = 1.0;
    SimulationConfig cfg;
    cfg.paths = 5;
    cfg.dt = 1e-3;
    cfg.mode = NoiseMode::shared;
    cfg.initial.kind = InitialCondition::Kind::point;
    cfg.initial.mean = 0.0;
    cfg.initial.market_start = 0.0;
    const auto e = simulate_paths(model_of(p), cfg);
    for (std::size_t k = 0; k < e.x.size(); ++k) CHECK(std::abs(e.x[k] - e.xbar[k]) <= 1e-12);
}

TEST_CASE("increment covariance of two banks") {
    const auto p = baseline_scenario();
    const auto m = model_of(p, 2500);
    SimulationConfig cfg;
    cfg.paths = 2;
    cfg.dt = p.T / 100000;
    cfg.mode = NoiseMode::shared;
    cfg.seed = 77;
    const auto e = simulate_paths(m, cfg);
    const std::size_t R = e.records();
    double s = 0.0, s2 = 0.0;
    for (std::size_t r = 0; r + 1 < R; ++r) {
        const double d1 = e.x[e.at(0, r + 1)] - e.x[e.at(0, r)];
        const double d2 = e.x[e.at(1, r + 1)] - e.x[e.at(1, r)];
        s += d1 * d2;
        s2 += d1 * d1 * d2 * d2;
    }
    const double n = static_cast<double>(R - 1);
    const double cov = s / n, se = std::sqrt((s2 / n - cov * cov) / n);
    const double expect = 0.12 * 0.12 * e.dt;
    CHECK(std::abs(cov - expect) <= 3 * se);
}

TEST_CASE("running minima are monotone") {
    const auto m = model_of(baseline_scenario());
    SimulationConfig cfg;
    cfg.paths = 50;
    cfg.dt = 1e-3;
    cfg.stride = 10;
    const auto e = simulate_paths(m, cfg);
    for (std::size_t i = 0; i < e.paths; ++i)
        for (std::size_t r = 0; r + 1 < e.records(); ++r) {
            CHECK(e.min_x[e.at(i, r + 1)] <= e.min_x[e.at(i, r)]);
            CHECK(e.min_xbar[e.at(i, r + 1)] <= e.min_xbar[e.at(i, r)]);
            CHECK(e.min_x[e.at(i, r)] <= e.x[e.at(i, r)]);
        }
}

TEST_CASE("deterministic across thread counts") {
    const auto m = model_of(baseline_scenario());
    SimulationConfig cfg;
    cfg.paths = 301;
    cfg.dt = 1e-3;
    cfg.seed = 5;
    PathEnsemble a, b;
    {
        ThreadsEnv t("1");
        a = simulate_paths(m, cfg);
    }
    {
        ThreadsEnv t("7");
        b = simulate_paths(m, cfg);
    }
    CHECK(a.x == b.x);
    CHECK(a.xbar == b.xbar);
    CHECK(a.u == b.u);
    cfg.seed = 6;
    CHECK(simulate_paths(m, cfg).x != a.x);
}

TEST_CASE("parallel_for covers the range once") {
    ThreadsEnv t("4");
    std::vector<int> hit(1001, 0);
    parallel_for(hit.size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) ++hit[i];
    });
    for (int h : hit) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(10, [](std::size_t, std::size_t) { throw NumericalError("x"); }), NumericalError);
}

TEST_CASE("mc default probability") {
    const auto m = model_of(baseline_scenario());
    SimulationConfig cfg;
    cfg.paths = 2000;
    cfg.dt = 1e-3;
    cfg.stride = 25;
    const auto e = simulate_paths(m, cfg);
    CHECK(mc_default_probability(e, -100.0, Target::bank).probability == 0.0);
    CHECK(mc_default_probability(e, 100.0, Target::market).probability == 1.0);
    double prev = 0.0;
    for (double th = -2.0; th <= 1.0; th += 0.25) {
        const double q = mc_default_probability(e, th, Target::bank).probability;
        CHECK(q >= prev);
        prev = q;
    }
    prev = 0.0;
    for (std::size_t r = 0; r < e.records(); ++r) {
        const auto rep = mc_default_probability(e, -0.7, Target::bank, r);
        CHECK(rep.probability >= prev);
        CHECK(rep.ci >= 0.0);
        prev = rep.probability;
    }
    const auto rep = mc_default_probability(e, -0.7, Target::market);
    CHECK(rep.method == "mc");
    CHECK(rep.to_json().contains("ci"));

    SimulationConfig at;
    at.paths = 10;
    at.dt = 1e-3;
    at.initial.kind = InitialCondition::Kind::point;
    at.initial.mean = at.initial.market_mean = -0.8;
    const auto d = simulate_paths(m, at);
    CHECK(mc_default_probability(d, -0.7, Target::bank).probability == 1.0);
    CHECK(mc_default_probability(d, -0.7, Target::market).probability == 1.0);
}

TEST_CASE("reflection closed form") {
    CHECK(brownian_first_passage_closed_form(0.0, 1.0, -0.7, 1.0) == doctest::Approx(0.483927).epsilon(1e-6));
    CHECK(brownian_first_passage_closed_form(0.0, 1.0, -0.7, 0.0) == 0.0);
    CHECK(brownian_first_passage_closed_form(0.0, 1.0, -0.7, 1e-12) <= 1e-300);
    CHECK(brownian_first_passage_closed_form(0.0, 0.12, -0.7, 0.25) <= 1e-30);
    CHECK_THROWS_AS(brownian_first_passage_closed_form(-0.7, 1.0, -0.7, 1.0), std::domain_error);
    CHECK(normal_cdf(0.0) == 0.5);
}

TEST_CASE("finite population") {
    const auto p = baseline_scenario();
    const auto c = solve_interbank(p, 250);
    const auto one = simulate_finite_population(1, p, c, 3);
    CHECK(one.average.size() == c.nodes());

    auto q = p;
    q.sigma = 0.0;
    const auto cq = solve_interbank(q, 250);
    InitialCondition ic;
    ic.kind = InitialCondition::Kind::point;
    ic.mean = 0.3;
    for (int N : {1, 10, 100}) CHECK(simulate_finite_population(N, q, cq, 1, ic).sup_gap() <= 1e-12);
    CHECK_THROWS_AS(simulate_finite_population(0, p, c, 1), ConfigError);
}

TEST_CASE("noise paths") {
    const auto w = CommonNoisePath::generate(0.25, 50, 9);
    CHECK(w.steps() == 50);
    CHECK(w.t.size() == 51);
    const std::string path = "noise_roundtrip.csv";
    w.to_csv(path);
    const auto r = CommonNoisePath::from_csv(path, 0.25);
    CHECK(r.increments == w.increments);
    const auto s = w.shifted(-0.05);
    CHECK(s.increments[7] == w.increments[7] - 0.05);
    const auto f = w.refined(4);
    CHECK(f.steps() == 200);
    CHECK(f.increments[0] * 4 == doctest::Approx(w.increments[0]));
    double sum = 0.0, sumf = 0.0;
    for (double v : w.increments) sum += v;
    for (double v : f.increments) sumf += v;
    CHECK(sumf == doctest::Approx(sum).epsilon(1e-12));
    CHECK(CommonNoisePath::zeros(1.0, 10).increments == std::vector<double>(10, 0.0));

    std::ofstream("noise_bad.csv") << "t,dw\n0,0.1\n0.3,0.2\n";
    CHECK_THROWS_AS(CommonNoisePath::from_csv("noise_bad.csv", 0.25), ConfigError);

    const auto m = model_of(baseline_scenario());
    SimulationConfig cfg;
    cfg.mode = NoiseMode::shared;
    cfg.dt = 1e-3;
    cfg.noise = w;
    CHECK_THROWS_AS(simulate_paths(m, cfg), ConfigError);
    cfg.dt = 0.003;
    CHECK_THROWS_AS(simulate_paths(m, cfg), ConfigError);
}

TEST_CASE("ensemble csv") {
    const auto m = model_of(baseline_scenario());
    SimulationConfig cfg;
    cfg.paths = 2;
    cfg.dt = 0.05;
    const auto e = simulate_paths(m, cfg);
    e.to_csv("ensemble.csv");
    std::ifstream in("ensemble.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "path,t,x,xbar,u");
}

}
