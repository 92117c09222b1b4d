#include <doctest.h>

#include <cmath>
#include <fstream>

#include "riskmfg/fokker_planck.hpp"
#include "riskmfg/pipeline.hpp"

using namespace riskmfg;

namespace {

ClosedLoopModel model_of(const InterbankParams& p, int steps = 250) {
    return build_closed_loop(solve_interbank(p, steps), p);
}

double stable_dt(double T, double max_dt) { return T / std::ceil(T / max_dt * (1 + 1e-12)); }

std::string first_line(const std::string& path) {
    std::ifstream in(path);
    std::string s;
    std::getline(in, s);
    return s;
}

}  // namespace

TEST_SUITE("fokker_planck") {

TEST_CASE("stability_check") {
    const auto ok = stability_check(0.01, 1, 1e-3, 0.12 * 0.12 / 2, 0.0);
    CHECK(ok.ok);
    CHECK(ok.max_dt == doctest::Approx(6.944e-3).epsilon(1e-3));
    CHECK_FALSE(stability_check(0.01, 1, 1.0, 0.1, 0.0).ok);
    CHECK_FALSE(stability_check(0.01, 1, 0.1, 0.0, 1.0).ok);
    const auto free = stability_check(0.01, 2, 1e6, 0.0, 0.0);
    CHECK(free.ok);
    CHECK(std::isinf(free.max_dt));
    CHECK(stability_check(0.01, 2, 1.0, 0.1, 0.0).max_dt == doctest::Approx(2.5e-4));
}

TEST_CASE("grids") {
    const auto g = SpatialGrid1D::make(-0.7, 1.3, 0.01);
    CHECK(g.nodes == 201);
    CHECK_THROWS_AS(SpatialGrid1D::make(-0.7, 1.305, 0.01), ConfigError);
    CHECK_THROWS_AS(SpatialGrid1D::make(0.0, 0.05, 0.01), ConfigError);
    const auto c = SpatialGrid1D::covering(-0.7, 1.2345, 0.01);
    CHECK(c.upper >= 1.2345);
    CHECK(c.upper < 1.2345 + 0.01);
}

TEST_CASE("null generator leaves the density unchanged") {
    const auto m = model_of(zero_control_scenario(0.0, -0.7, 0.25));
    const auto g = SpatialGrid1D::make(-0.7, 6.0, 0.01);
    InitialCondition ic;
    const auto e = solve_systemic_fp(m, g, 0.01, ic);
    CHECK(e.snapshots.front() == e.snapshots.back());
    CHECK(e.mass.front() == e.mass.back());
}

TEST_CASE("2D null generator") {
    const auto m = model_of(zero_control_scenario(0.0, -0.7, 0.25));
    SpatialGrid2D g{SpatialGrid1D::make(-0.7, 6.0, 0.05), SpatialGrid1D::make(-6.0, 6.0, 0.05)};
    const auto e = solve_individual_fp(m, g, 0.01, InitialCondition{});
    CHECK(e.snapshots.front() == e.snapshots.back());
    CHECK(e.dims == 2);
}

TEST_CASE("pure diffusion conserves mass on a wide domain") {
    const auto m = model_of(zero_control_scenario(1.0, -11.0, 0.25));
    const auto g = SpatialGrid1D::make(-11.0, 11.0, 0.01);
    const auto e = solve_systemic_fp(m, g, stable_dt(0.25, max_stable_dt_systemic(m, g, Scheme::corrected)), InitialCondition{});
    CHECK(std::abs(e.mass.back() - e.mass.front()) <= 1e-3);
}

TEST_CASE("baseline systemic run: invariants") {
    const auto p = baseline_scenario();
    const auto m = model_of(p, 2500);
    GridConfig gc;
    const auto g = systemic_grid(m, InitialCondition{}, gc);
    const auto e = solve_systemic_fp(m, g, stable_dt(p.T, max_stable_dt_systemic(m, g, Scheme::corrected)), InitialCondition{});
    for (std::size_t k = 1; k < e.mass.size(); ++k) CHECK(e.mass[k] <= e.mass[k - 1]);
    CHECK(e.min_value >= -1e-12);
    for (const auto& s : e.snapshots) CHECK(s.front() == 0.0);
    double prev = -1.0;
    for (std::size_t k = 0; k < e.t.size(); k += 10) {
        const double q = default_probability(e, k).probability;
        CHECK(q >= prev);
        prev = q;
    }
    // Truncated standard normal, no renormalization.
    CHECK(default_probability(e, 0).probability == doctest::Approx(normal_cdf(-0.7)).epsilon(1e-3 / 0.242));
    const auto r = default_probability(e);
    CHECK(r.method == "fp-systemic");
    CHECK(r.metadata.contains("mass_at_T"));
    CHECK(r.metadata.contains("grid"));
    CHECK(r.metadata.contains("dt"));
}

TEST_CASE("renormalized initial law") {
    const auto m = model_of(baseline_scenario(), 250);
    const auto g = systemic_grid(m, InitialCondition{}, GridConfig{});
    FpOptions o;
    o.renormalize_initial = true;
    const auto e = solve_systemic_fp(m, g, stable_dt(0.25, max_stable_dt_systemic(m, g, Scheme::corrected)), InitialCondition{}, o);
    CHECK(e.mass.front() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("default probability from mass") {
    DensityEvolution e;
    e.grid = SpatialGrid1D::make(0.0, 1.0, 0.1);
    e.t = {0.0};
    e.mass = {e.integrate(std::vector<double>(e.grid.nodes, 0.6))};
    CHECK(default_probability(e).probability == doctest::Approx(0.4).epsilon(1e-14));
    e.mass = {1.0};
    CHECK(default_probability(e).probability == 0.0);
    e.mass = {1.0 + 1e-9};
    CHECK(default_probability(e).probability == 0.0);
}

TEST_CASE("grid refinement is Cauchy") {
    const auto m = model_of(baseline_scenario(), 2500);
    std::vector<double> q;
    for (double dx : {0.01, 0.005, 0.0025}) {
        GridConfig gc;
        gc.dx = dx;
        const auto g = systemic_grid(m, InitialCondition{}, gc);
        const double dt = stable_dt(0.25, max_stable_dt_systemic(m, g, Scheme::corrected));
        q.push_back(default_probability(solve_systemic_fp(m, g, dt, InitialCondition{})).probability);
    }
    CHECK(std::abs(q[2] - q[1]) < std::abs(q[1] - q[0]));
}

TEST_CASE("instability is detected") {
    const auto m = model_of(baseline_scenario());
    const auto g = SpatialGrid1D::make(-0.7, 6.0, 0.01);
    CHECK_THROWS_AS(solve_systemic_fp(m, g, 0.05, InitialCondition{}), NumericalError);
    FpOptions o;
    o.check_stability = false;
    CHECK_THROWS_AS(solve_systemic_fp(m, g, 0.05, InitialCondition{}, o), NumericalError);
}

TEST_CASE("rho = 0 reduces the 2D problem to a 1D one") {
    auto p = zero_control_scenario(0.3, -0.7, 0.25);
    p.rho = 0.0;
    p.b = Liquidity{0.5};
    const auto m = model_of(p);
    InitialCondition ic;
    const SpatialGrid2D g2{SpatialGrid1D::make(-0.7, 6.0, 0.01), SpatialGrid1D::make(-6.0, 6.0, 0.05)};
    const double dt = stable_dt(0.25, max_stable_dt_individual(m, g2, Scheme::corrected));
    const auto e2 = solve_individual_fp(m, g2, dt, ic);
    const int n = static_cast<int>(std::lround(0.25 / dt));
    const auto e1 = solve_conditional_fp(m, g2.x, dt, ic, CommonNoisePath::zeros(0.25, n), 0.0);
    CHECK(std::abs(default_probability(e2).probability - default_probability(e1).probability) <= 1e-3);
}

TEST_CASE("zero noise: conditional solver equals the deterministic 1D solver") {
    auto p = zero_control_scenario(1.0, -0.7, 0.25);
    p.rho = std::sqrt(0.5);
    p.b = Liquidity{1.0};
    const auto m = model_of(p);
    const auto g = SpatialGrid1D::make(-0.7, 7.0, 0.01);
    const double dt = stable_dt(0.25, max_stable_dt_systemic(m, g, Scheme::corrected));
    const int n = static_cast<int>(std::lround(0.25 / dt));
    InitialCondition ic;
    const auto a = solve_systemic_fp(m, g, dt, ic);
    const auto b = solve_conditional_fp(m, g, dt, ic, CommonNoisePath::zeros(0.25, n), 0.0);
    for (std::size_t k = 0; k < a.mass.size(); ++k) CHECK(std::abs(a.mass[k] - b.mass[k]) <= 1e-6);
    CHECK(b.market_path.back() == doctest::Approx(0.25));
}

TEST_CASE("conditional noise alignment") {
    const auto m = model_of(conditional_scenario());
    const auto g = SpatialGrid1D::make(-0.7, 7.0, 0.01);
    const auto w = CommonNoisePath::generate(0.25, 1000, 3);
    CHECK_THROWS_AS(solve_conditional_fp(m, g, 0.25 / 2000, InitialCondition{}, w, 0.0), ConfigError);
    CHECK_THROWS_AS(solve_conditional_fp(m, g, 0.25 / 500, InitialCondition{}, w, 0.0), ConfigError);
}

TEST_CASE("scalar and avx2 solvers agree exactly") {
    if (!isa_available(Isa::avx2)) return;
    const auto m = model_of(baseline_scenario());
    SpatialGrid2D g{SpatialGrid1D::make(-0.7, 3.0, 0.02), SpatialGrid1D::make(-3.0, 3.0, 0.04)};
    const double dt = stable_dt(0.25, max_stable_dt_individual(m, g, Scheme::corrected));
    FpOptions a, b;
    a.isa = Isa::scalar;
    b.isa = Isa::avx2;
    const auto ea = solve_individual_fp(m, g, dt, InitialCondition{}, a);
    const auto eb = solve_individual_fp(m, g, dt, InitialCondition{}, b);
    CHECK(ea.mass == eb.mass);
    CHECK(ea.snapshots.back() == eb.snapshots.back());
    const auto g1 = SpatialGrid1D::make(-0.7, 6.0, 0.01);
    const double dt1 = stable_dt(0.25, max_stable_dt_systemic(m, g1, Scheme::corrected));
    CHECK(solve_systemic_fp(m, g1, dt1, InitialCondition{}, a).mass == solve_systemic_fp(m, g1, dt1, InitialCondition{}, b).mass);
}

TEST_CASE("paper-faithful scheme runs") {
    const auto m = model_of(baseline_scenario());
    const auto g = systemic_grid(m, InitialCondition{}, GridConfig{});
    FpOptions o;
    o.scheme = Scheme::paper;
    const auto e = solve_systemic_fp(m, g, stable_dt(0.25, max_stable_dt_systemic(m, g, Scheme::paper)), InitialCondition{}, o);
    const double q = default_probability(e).probability;
    CHECK(q >= 0.0);
    CHECK(q <= 1.0);
    CHECK(e.scheme == Scheme::paper);
}

TEST_CASE("density csv") {
    const auto m = model_of(zero_control_scenario(0.0, -0.7, 0.25));
    FpOptions o;
    o.snapshots = 2;
    solve_systemic_fp(m, SpatialGrid1D::make(-0.7, 1.0, 0.1), 0.05, InitialCondition{}, o).to_csv("d1.csv");
    CHECK(first_line("d1.csv") == "t,x,p");
    SpatialGrid2D g{SpatialGrid1D::make(-0.7, 1.0, 0.1), SpatialGrid1D::make(-1.0, 1.0, 0.1)};
    solve_individual_fp(m, g, 0.05, InitialCondition{}, o).to_csv("d2.csv");
    CHECK(first_line("d2.csv") == "t,x,xbar,p");
}

}
