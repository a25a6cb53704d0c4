#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "liner/estimation.hpp"
#include "liner/market_model.hpp"
#include "liner/simulation.hpp"

namespace liner {

struct RouteYearRecord {
  std::string market;
  std::string route;
  int year = 0;
  double price = 0.0;          // USD/TEU
  double quantity = 0.0;       // TEU
  double total_tonnage = 0.0;  // TEU
  double log_gdp = 0.0;
  double avg_ship_age = 0.0;
  double share_old_ships = 0.0;
  double avg_ship_size = 0.0;

  bool operator==(const RouteYearRecord&) const = default;
};

// Potential entrants carry tonnage 0 and act with e (enter) or x (stay out).
struct FirmRecord {
  std::string firm_id;
  std::string market;
  int year = 0;
  double tonnage = 0.0;  // TEU
  char action = 'k';     // x, k, b, e

  bool is_potential_entrant() const { return tonnage == 0.0; }
  bool operator==(const FirmRecord&) const = default;
};

inline constexpr const char* kRouteYearHeader =
    "market,route,year,price,quantity,total_tonnage,log_gdp,avg_ship_age,share_old_ships,avg_ship_size";
inline constexpr const char* kFirmHeader = "firm_id,market,year,tonnage,action";

// Row numbers in LoadError count data rows from 1.
std::vector<RouteYearRecord> read_route_year_csv(std::istream& in);
std::vector<FirmRecord> read_firm_csv(std::istream& in);
std::vector<RouteYearRecord> load_route_year_csv(const std::string& path);
std::vector<FirmRecord> load_firm_csv(const std::string& path);

void write_route_year_csv(const std::vector<RouteYearRecord>& rows, std::ostream& out);
void write_firm_csv(const std::vector<FirmRecord>& rows, std::ostream& out);
void save_route_year_csv(const std::vector<RouteYearRecord>& rows, const std::string& path);
void save_firm_csv(const std::vector<FirmRecord>& rows, const std::string& path);

struct TallyOptions {
  int first_year = 1973;
  int horizon = 18;  // years at or beyond first_year + horizon - 1 carry no decision
  LevelCutoffs cutoffs;
};

// One observation per (market, decision year), ordered by market name then year.
// Incumbent levels come from discretize_tonnage.
ObservedTallies derive_tallies(const std::vector<FirmRecord>& firms, const TallyOptions& options = {});

// Observed industry paths, one per market, for t = 1..env.horizon. Years without
// observations are empty states; the final year applies the last observed tally
// without caps. Prices, quantities and PS are the model's at each observed state.
std::vector<SimulatedPath> observed_paths(const ObservedTallies& tallies, const MarketEnvironment& env);

// Keeps markets equal to `name` or named `name-<suffix>`.
bool market_matches(const std::string& market, const std::string& name);

struct SyntheticSpec {
  MarketEnvironment env;
  DynamicParams theta;
  SolverOptions solver;
  int n_markets = 30;
  std::uint64_t seed = 1;
  // Log tonnage written for a level-l firm; each value discretizes back to l.
  std::array<double, kLevels> log_tonnage{8.0, 9.0, 10.0, 11.0};
};

struct SyntheticPanel {
  std::vector<RouteYearRecord> routes;
  std::vector<FirmRecord> firms;
  ObservedTallies tallies;  // as simulated, in derive_tallies order
  std::vector<SimulatedPath> paths;
};

// Solves the model once at the true parameters and simulates n_markets independent
// paths from initial states drawn uniformly within the caps. Market m is named
// "<market>-<m+1, two digits>".
SyntheticPanel generate_synthetic_panel(const SyntheticSpec& spec);

}  // namespace liner
