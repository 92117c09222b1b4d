#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskmfg/fokker_planck.hpp"
#include "riskmfg/model.hpp"
#include "riskmfg/simulate.hpp"

namespace riskmfg {

/// Interbank parameters of a config (general K = n = 1 models are mapped back).
InterbankParams interbank_of(const ScenarioConfig& c);
ClosedLoopModel closed_loop_of(const ScenarioConfig& c);

FpOptions fp_options_of(const ScenarioConfig& c, int snapshots);

struct FpRun {
    DensityEvolution evolution;
    DefaultReport report;
};

FpRun systemic_default(const ScenarioConfig& c, int snapshots = 0);
FpRun individual_default(const ScenarioConfig& c, int snapshots = 0);

struct McRun {
    DefaultReport market, bank;
};
/// Independent common noise per path, market and bank targets from one ensemble.
McRun mc_default(const ScenarioConfig& c);

struct SweepSpec {
    std::string param;  // rho | inv_gamma | b | xi | q | a | sigma
    double from = 0.0, to = 1.0;
    int points = 5;
    ScenarioConfig base;
    bool systemic = true, individual = true;

    void check() const;
    nlohmann::json to_json() const;
};

void set_param(InterbankParams& p, const std::string& name, double value);

struct SweepRow {
    double value = 0.0;
    std::optional<double> systemic, individual;
    std::string status = "ok";
    nlohmann::json meta = nlohmann::json::object();
};

struct ReportTable {
    std::string param;
    std::vector<SweepRow> rows;
    void to_csv(const std::string& path) const;
};

ReportTable run_sweep(const SweepSpec& spec);

struct ConditionalSeries {
    std::vector<double> t, probability, xbar;
};

/// Conditional default at six evenly spaced times over [0, T], market started at initial.market_start.
/// A supplied noise path fixes the step count; otherwise the path is drawn from the seed on the coarsest
/// stable grid (step count a multiple of 5).
ConditionalSeries run_conditional(const ScenarioConfig& c, const std::optional<CommonNoisePath>& noise,
                                  DensityEvolution* evolution = nullptr);
void write_csv(const std::string& path, const ConditionalSeries& s);

struct CheckResult {
    std::string name;
    bool ok = false;
    double value = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct ValidateOptions {
    std::optional<double> dt;  // forces the FP time step of the diffusion checks
    std::int64_t paths = 50000;
    double mc_dt = 2.5e-4;
    std::uint64_t seed = 0;
};

std::vector<CheckResult> run_validate(const ValidateOptions& opt);
void write_csv(const std::string& path, const std::vector<CheckResult>& checks);

/// A driftless, uncontrolled market with volatility `vol` (all cost weights and b zero, rho = 1).
InterbankParams zero_control_scenario(double vol, double theta, double T);

}  // namespace riskmfg
