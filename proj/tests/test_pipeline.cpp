#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "riskmfg/io.hpp"
#include "riskmfg/pipeline.hpp"

using namespace riskmfg;

namespace {

const std::string data = RISKMFG_TEST_DATA;
const std::string cli = RISKMFG_CLI;

int run(const std::string& args) {
    const int rc = std::system((cli + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ScenarioConfig coarse_baseline() {
    ScenarioConfig c;
    c.grid.dx = 0.01;
    return c;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("sweep spec") {
    SweepSpec s;
    s.param = "rho";
    s.from = 0.1;
    s.to = 0.9;
    CHECK_NOTHROW(s.check());
    s.points = 1;
    CHECK_THROWS_AS(s.check(), ConfigError);
    s.points = 5;
    s.to = 0.1;
    CHECK_THROWS_AS(s.check(), ConfigError);
    s.to = 0.9;
    s.param = "kappa";
    CHECK_THROWS_AS(s.check(), ConfigError);
}

TEST_CASE("set_param") {
    InterbankParams p;
    set_param(p, "inv_gamma", 80.0);
    CHECK(p.gamma == 1.0 / 80.0);
    set_param(p, "b", 2.0);
    CHECK(p.b(0.1) == 2.0);
    set_param(p, "rho", 0.3);
    set_param(p, "xi", 0.5);
    set_param(p, "q", 4.0);
    set_param(p, "a", 1.5);
    set_param(p, "sigma", 0.2);
    CHECK(p.rho == 0.3);
    CHECK(p.xi == 0.5);
    CHECK(p.q == 4.0);
    CHECK(p.a == 1.5);
    CHECK(p.sigma == 0.2);
    CHECK_THROWS_AS(set_param(p, "inv_gamma", 0.0), ConfigError);
}

TEST_CASE("sweep rows keep their order and record failures") {
    SweepSpec s;
    s.param = "rho";
    s.from = 0.2;
    s.to = 1.4;
    s.points = 4;
    s.individual = false;
    s.base = coarse_baseline();
    setenv("RISKMFG_THREADS", "3", 1);
    const auto t = run_sweep(s);
    unsetenv("RISKMFG_THREADS");
    REQUIRE(t.rows.size() == 4);
    CHECK(t.rows[0].value == 0.2);
    CHECK(t.rows[3].value == 1.4);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(t.rows[i].status == "ok");
        REQUIRE(t.rows[i].systemic);
        CHECK(*t.rows[i].systemic >= 0.0);
        CHECK(*t.rows[i].systemic <= 1.0);
    }
    CHECK(t.rows[3].status.find("rho outside [0, 1]") != std::string::npos);
    CHECK_FALSE(t.rows[3].systemic);
    t.to_csv("sweep.csv");
    std::ifstream in("sweep.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "param,value,systemic,individual,status,method");
}

TEST_CASE("zero-noise conditional series") {
    ScenarioConfig c;
    c.params = conditional_scenario();
    c.grid.dx = 0.0025;
    const double D = 0.5 * 1.0 * 0.75;
    const int n = static_cast<int>(std::ceil(0.25 / (0.0025 * 0.0025 / (2 * D)) / 5.0)) * 5;
    const auto s = run_conditional(c, CommonNoisePath::zeros(0.25, n));
    REQUIRE(s.t.size() == 6);
    CHECK(s.t[5] == 0.25);
    CHECK(std::abs(s.probability[0] - normal_cdf(-0.7)) <= 1e-3);
    for (std::size_t k = 1; k < 6; ++k) CHECK(s.probability[k] > s.probability[k - 1]);
    const auto w = CommonNoisePath::zeros(0.25, n / 5);
    CHECK_THROWS_AS(run_conditional(c, w), NumericalError);
}

TEST_CASE("validate with a forced dt") {
    ValidateOptions o;
    o.dt = 0.05;
    o.paths = 2000;
    const auto checks = run_validate(o);
    bool stability = true;
    for (const auto& r : checks)
        if (r.name == "stability") stability = r.ok;
    CHECK_FALSE(stability);
}

TEST_CASE("interbank_of rejects multi-type models") {
    ScenarioConfig c;
    c.general = interbank_to_general(baseline_scenario());
    CHECK(interbank_of(c) == general_to_interbank(*c.general));
    c.general->K = 2;
    CHECK_THROWS_AS(interbank_of(c), ConfigError);
}

TEST_CASE("cli exit codes") {
    CHECK(run("coeffs --config " + data + "/bad_convexity.json --out cli_bad.csv") == 1);
    CHECK(run("coeffs --config " + data + "/missing.json") == 1);
    CHECK(run("default --target systemic --dt 0.05 --config " + data + "/baseline.json") == 2);
    CHECK(run("validate --dt 0.05 --paths 2000") == 1);
    CHECK(run("nonsense") == 1);
    CHECK(run("coeffs --config " + data + "/baseline.json --out cli_ok.csv") == 0);
}

TEST_CASE("sidecar reproduces the artifact") {
    REQUIRE(run("coeffs --config " + data + "/baseline.json --dt 0.001 --out side_a.csv") == 0);
    REQUIRE(run("coeffs --config side_a.csv.json --out side_b.csv") == 0);
    CHECK(slurp("side_a.csv") == slurp("side_b.csv"));
    CHECK(slurp("side_a.csv").rfind("t,Pi,Lambda,Upsilon,Delta,Gamma,Psi\n", 0) == 0);

    REQUIRE(run("simulate --config " + data + "/baseline.json --paths 7 --seed 99 --dt 0.005 --out sim_a.csv") == 0);
    REQUIRE(run("simulate --config sim_a.csv.json --paths 7 --dt 0.005 --out sim_b.csv") == 0);
    CHECK(slurp("sim_a.csv") == slurp("sim_b.csv"));
    const auto side = nlohmann::json::parse(slurp("sim_a.csv.json"));
    CHECK(side["config"]["seed"] == 99);
}

}
