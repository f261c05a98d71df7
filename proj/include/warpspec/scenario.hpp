#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "warpspec/estimates.hpp"
#include "warpspec/exit_time_mc.hpp"

namespace warpspec {

inline constexpr const char* kToolName = "warpspec";
inline constexpr const char* kToolVersion = "0.1.0";

struct AnalysisOptions {
    double r_cap = 50.0;
    double tol = 1e-10;
    int grid_points = 2000;
    double classify_tol = 1e-6;
};

struct McScenarioOptions {
    int n_paths = 100000;
    double dt = 1e-5;
    std::uint64_t seed = 20240101;
    double rho0 = 0.0;
    std::vector<double> R_list;
    double t_cap = 0.0;  // 0: derived as t_cap_factor * (F(R) - F(rho0))
    double t_cap_factor = 100.0;
    bool antithetic = false;
};

struct OutputOptions {
    std::string format = "json";  // json | csv | both
    bool dump_tables = false;
    bool timings = true;
};

struct Scenario {
    ProfileConfig profile;
    AnalysisOptions analysis;
    McScenarioOptions mc;
    OutputOptions output;
    Assumptions assumptions;
};

Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);
nlohmann::ordered_json scenario_to_json(const Scenario& s);

struct Pipeline {
    std::shared_ptr<const ProfileSpec> profile;
    std::shared_ptr<const WarpingFunction> warping;
    std::shared_ptr<const RatioTable> table;
    EstimateReport report;
};

// profile -> warping ODE -> ratio table -> estimate report
Pipeline run_analysis(const Scenario& s, Exec exec = Exec::parallel);

nlohmann::ordered_json report_to_json(const Scenario& s, const Pipeline& p);

// 0 clean, 2 when a theorem hypothesis is violated (report still emitted)
int exit_code_for(const EstimateReport& rep);

struct SweepSpec {
    std::string param;  // k | H0 | r_phi | m | l | poly_coeff:<i> | exp_coeff:<i> | g_coeff:<i>
    std::vector<double> values;
};

void apply_sweep_value(Scenario& s, const std::string& param, double value);
std::string run_sweep_csv(const Scenario& base, const SweepSpec& spec, Exec exec = Exec::parallel);

struct SimulateRow {
    ExitTimeEstimate estimate;
    double expected = 0.0;  // F(R) - F(rho0) from the ratio table
    double tolerance = 0.0;
    bool pass = false;
};

std::vector<SimulateRow> run_simulation(const Scenario& s, const Pipeline& p,
                                        Exec exec = Exec::parallel,
                                        std::vector<std::vector<double>>* taus_out = nullptr,
                                        std::vector<std::vector<std::uint8_t>>* censored_out = nullptr);
nlohmann::ordered_json simulate_to_json(const std::vector<SimulateRow>& rows);

}  // namespace warpspec
