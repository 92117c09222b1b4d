#include <doctest.h>

#include <cmath>
#include <fstream>

#include "riskmfg/model.hpp"

using namespace riskmfg;

namespace {
const std::string data = RISKMFG_TEST_DATA;
}

TEST_SUITE("model") {

TEST_CASE("baseline file loads") {
    const auto c = load_config(data + "/baseline.json");
    CHECK(c.params.sigma == 0.3);
    CHECK(c.params.rho == 0.4);
    CHECK(c.params.xi == 1.0);
    CHECK(c.params.q == 10.0);
    CHECK(c.params.gamma == 0.2);
    CHECK(c.params.a == 2.5);
    CHECK(c.params.b(0.1) == 1.0);
    CHECK(c.params.q_hat == 0.0);
    CHECK(c.params.theta == -0.7);
    CHECK(c.params.T == 0.25);
    CHECK(c.params == baseline_scenario());
}

TEST_CASE("convexity violation is reported") {
    try {
        load_config(data + "/bad_convexity.json");
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("q - xi^2 < 0") != std::string::npos);
    }
}

TEST_CASE("missing seed defaults to 0") {
    const auto c = config_from_json(nlohmann::json::parse(R"({"params": {"kind": "interbank"}})"));
    CHECK(c.seed == 0);
    CHECK(c.scheme == Scheme::corrected);
    CHECK_FALSE(c.renormalize_initial);
}

TEST_CASE("malformed input") {
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"params": {"a": "x"}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"params": {"rho": 1.5}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"grid": {"dx": 0}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(R"({"mode": {"scheme": "upwind"}})")), ConfigError);
    const std::string path = "model_bad.json";
    std::ofstream(path) << "{ not json";
    CHECK_THROWS_AS(load_config(path), ConfigError);
    CHECK_THROWS_AS(load_config("no/such/file.json"), ConfigError);
}

TEST_CASE("config round trip is deterministic") {
    const auto a = load_config(data + "/baseline.json");
    const auto b = config_from_json(to_json(a));
    CHECK(to_json(a).dump() == to_json(b).dump());
    nlohmann::json side = {{"command", "x"}, {"config", to_json(a)}};
    CHECK(to_json(config_from_json(side)).dump() == to_json(a).dump());
}

TEST_CASE("interbank_to_general on the baseline") {
    const auto g = interbank_to_general(baseline_scenario());
    REQUIRE(g.K == 1);
    const auto& t = g.types[0];
    CHECK(t.A(0, 0) == -2.5);
    CHECK(t.F(0, 0) == 2.5);
    CHECK(g.sigma0(0, 0) == doctest::Approx(0.12).epsilon(1e-15));
    CHECK(t.sigma(0, 0) == doctest::Approx(0.3 * std::sqrt(0.84)).epsilon(1e-15));
    CHECK(t.Q(0, 0) == 10.0);
    CHECK(t.S(0, 0) == 1.0);
    CHECK(t.R(0, 0) == 1.0);
    CHECK(t.B(0, 0) == 1.0);
    CHECK(t.H(0, 0) == 1.0);
    CHECK(t.eta(0) == 0.0);
    CHECK(g.pi(0) == 1.0);
}

TEST_CASE("degenerate loadings") {
    auto p = baseline_scenario();
    p.rho = 1.0;
    CHECK(interbank_to_general(p).types[0].sigma(0, 0) == 0.0);
    p.rho = 0.0;
    CHECK(interbank_to_general(p).sigma0(0, 0) == 0.0);
}

TEST_CASE("round trip recovers every field") {
    InterbankParams p;
    p.a = 1.7;
    p.q = 3.0;
    p.q_hat = 0.4;
    p.xi = 1.2;
    p.sigma = 0.45;
    p.rho = 0.35;
    p.gamma = 0.8;
    p.b = Liquidity({0.0, 0.1, 0.25}, {1.0, 0.5, 2.0});
    p.theta = -0.3;
    p.T = 0.25;
    const auto r = general_to_interbank(interbank_to_general(p));
    CHECK(r.a == p.a);
    CHECK(r.q == p.q);
    CHECK(r.q_hat == p.q_hat);
    CHECK(r.xi == p.xi);
    CHECK(r.sigma == doctest::Approx(p.sigma).epsilon(1e-14));
    CHECK(r.rho == doctest::Approx(p.rho).epsilon(1e-14));
    CHECK(r.gamma == p.gamma);
    CHECK(r.b == p.b);
    CHECK(r.theta == p.theta);
    CHECK(r.T == p.T);
}

TEST_CASE("validate_convexity") {
    CHECK(validate_convexity(interbank_to_general(baseline_scenario())).ok);

    auto p = baseline_scenario();
    p.q = p.xi * p.xi;
    CHECK(validate_convexity(interbank_to_general(p)).ok);

    auto g = interbank_to_general(baseline_scenario());
    g.types[0].R(0, 0) = 0.0;
    const auto r = validate_convexity(g);
    CHECK_FALSE(r.ok);
    CHECK(r.type_index == 0);
    CHECK(r.message == "R not positive definite");

    for (double q : {0.5, 0.99, 1.0, 2.0})
        for (double qh : {-0.1, 0.0, 0.3}) {
            auto s = baseline_scenario();
            s.q = q;
            s.q_hat = qh;
            CHECK(validate_convexity(interbank_to_general(s)).ok == (qh >= 0.0 && q >= s.xi * s.xi));
        }
}

TEST_CASE("dimension checks") {
    auto g = interbank_to_general(baseline_scenario());
    g.types[0].Q = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(check_dimensions(g), ConfigError);
    auto h = interbank_to_general(baseline_scenario());
    h.pi(0) = 0.5;
    CHECK_THROWS_AS(check_dimensions(h), ConfigError);
}

TEST_CASE("liquidity profiles") {
    Liquidity c{1.5};
    CHECK(c(0.0) == 1.5);
    CHECK(c(10.0) == 1.5);
    Liquidity t({0.0, 1.0}, {1.0, 3.0});
    CHECK(t(-1.0) == 1.0);
    CHECK(t(0.5) == 2.0);
    CHECK(t(2.0) == 3.0);
    CHECK(t.max_abs() == 3.0);
    CHECK_THROWS_AS(Liquidity({1.0, 0.0}, {1.0, 2.0}), ConfigError);
}

}
