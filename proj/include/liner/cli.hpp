#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "liner/estimation.hpp"
#include "liner/market_model.hpp"
#include "liner/simulation.hpp"

namespace liner {

// JSON run configuration. Every key is optional; unknown keys are rejected.
// Relative paths resolve against the directory of the config file.
struct RunConfig {
  std::string market = "transpacific";
  int first_year = 1973;
  int horizon = 18;
  StaticParams static_params;
  RegimeCalendar calendar;
  std::string environment_csv;  // market,route,year,demand_state,gamma0; empty = fixture environment
  bool dynamic_given = false;   // otherwise the market's fixture values
  DynamicParams dynamic;
  SolverOptions solver;
  int n_sims = 1000;
  std::uint64_t seed = 1;
  IndustryState initial_state{{2, 2, 1, 1}};
  double choke_price = 0.0;  // 0 = choke_multiplier x highest baseline price
  double choke_multiplier = 10.0;
  PsMode ps_mode = PsMode::StaticProfits;
  bool welfare_on_data = false;  // welfare.paths: "ensemble" (simulated) or "data" (observed states)
  std::vector<RegimeWindow> windows = default_regime_windows();
  std::string route_year_csv;
  std::string firm_csv;
  DynamicEstimateOptions estimation;
  LrOptions ci;
  int synthetic_markets = 30;
  std::string out_dir = "out";
};

RunConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::string& path);

// Environment CSV: market,route,year,demand_state,gamma0.
MarketEnvironment load_environment_csv(const std::string& path, const std::string& market, Market kind,
                                       int first_year, int horizon);
void write_environment_csv(const MarketEnvironment& env, const std::string& market, std::ostream& out);

// Market environment and dynamic parameters implied by a config.
MarketEnvironment config_environment(const RunConfig& cfg);
DynamicParams config_dynamic(const RunConfig& cfg);

// 64-bit FNV-1a.
std::uint64_t fnv1a64(const std::string& bytes);

// Command-line entry point. Exit codes: 0 success, 1 validation/usage error,
// 2 solver or estimation failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace liner
