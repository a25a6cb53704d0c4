#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "liner/dynamic_game.hpp"
#include "liner/market_model.hpp"
#include "liner/rng.hpp"

namespace liner {

struct SimulatedYear {
  int t = 0;
  int year = 0;
  IndustryState state;
  ActionTally tally;  // actions taken in this year; empty in the final year
  // Static outcomes of `state`; filled when a StaticTable is supplied.
  std::vector<double> price, quantity;
  double producer_surplus = 0.0;  // USD
};

struct SimulatedPath {
  std::uint64_t seed = 0;
  std::vector<SimulatedYear> years;
};

// Draws every actor's action from its CCP row, in the order levels 1..4 then entrants.
ActionTally sample_actions(const IndustryState& s, const LevelCcps& ccps, int n_entrants, SplitMix64& rng);

SimulatedPath simulate_path(const PolicySolution& policy, const IndustryState& initial, int horizon, std::uint64_t seed,
                            const StaticTable* statics = nullptr, int first_year = 1973);

struct Ensemble {
  std::vector<SimulatedPath> paths;
  std::vector<std::array<double, kLevels>> mean_counts;  // per year
  std::vector<std::array<double, kLevels>> median_counts;
};

// Run i uses seed base_seed + i.
Ensemble simulate_ensemble(const PolicySolution& policy, const IndustryState& initial, int horizon, int n,
                           std::uint64_t base_seed, const StaticTable* statics = nullptr, int first_year = 1973);

enum class ScenarioKind { Baseline, NoCartel, FavorSmall, FavorLarge };

ScenarioKind parse_scenario(const std::string& name);
std::string to_string(ScenarioKind k);

struct Scenario {
  ScenarioKind kind = ScenarioKind::Baseline;
  std::optional<StaticParams> static_override;
  std::optional<DynamicParams> dynamic_override;
};

// NoCartel zeroes both cartel effects; FavorSmall/FavorLarge pick the allocation rule.
MarketEnvironment apply_scenario(const MarketEnvironment& env, const Scenario& scenario);

struct ScenarioRun {
  MarketEnvironment env;
  DynamicParams params;
  StaticTable statics;
  PolicySolution policy;
  Ensemble ensemble;
};

ScenarioRun run_scenario(const Scenario& scenario, const MarketEnvironment& env, const DynamicParams& params,
                         const SolverOptions& solver, const IndustryState& initial, int n_sims,
                         std::uint64_t base_seed);

struct RegimeWindow {
  std::string name;
  int first_year = 0, last_year = 0;
};

std::vector<RegimeWindow> default_regime_windows();

enum class PsMode { StaticProfits, NetOfDynamicCosts };

struct WelfareOptions {
  std::vector<RegimeWindow> windows = default_regime_windows();
  double beta = 0.9;
  int base_year = 1973;
  double choke_price = 0.0;  // USD/TEU; must exceed every price
  PsMode ps_mode = PsMode::StaticProfits;
  DynamicParams dynamic;  // used by NetOfDynamicCosts
  int n_entrants = 4;
};

struct WelfareRow {
  std::string window;
  double cs = 0.0, ps = 0.0, sw = 0.0;  // billion USD, discounted to base_year, ensemble mean
};

struct WelfareReport {
  std::vector<WelfareRow> rows;
};

WelfareReport welfare_by_regime(const std::vector<SimulatedPath>& paths, const MarketEnvironment& env,
                                const WelfareOptions& options);

// (scenario - baseline) / baseline per cell; NaN when the baseline cell is 0.
WelfareReport proportional_change(const WelfareReport& baseline, const WelfareReport& scenario);

void write_mean_path_csv(const Ensemble& e, int first_year, std::ostream& out);
void write_paths_csv(const std::vector<SimulatedPath>& paths, std::ostream& out);
void write_welfare_csv(const WelfareReport& report, std::ostream& out, const WelfareReport* change = nullptr);
// Whitespace-separated x-y columns: year, then mean counts per level.
void write_plot_data(const Ensemble& e, int first_year, std::ostream& out);

}  // namespace liner
