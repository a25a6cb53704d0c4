#pragma once

#include <array>
#include <string>
#include <vector>

#include "liner/dynamic_game.hpp"
#include "liner/state_space.hpp"
#include "liner/static_market.hpp"

namespace liner {

// Exogenous path of one route: demand state and effective supply intercept per period.
struct RouteEnvironment {
  std::string name;
  std::vector<double> demand_state;  // D_rt, t = 1..T stored at [t-1]
  std::vector<double> gamma0;        // gamma_r + gamma_2 Y_rt, USD/TEU
};

// Everything needed to turn an industry state into static outcomes, year by year.
struct MarketEnvironment {
  Market market = Market::Transpacific;
  int first_year = 1973;
  int horizon = 18;
  StaticParams params;  // gamma0 is taken from the routes
  RegimeCalendar calendar;
  RepresentativeTonnage tonnage = RepresentativeTonnage::for_market(Market::Transpacific);
  AllocationRule allocation;
  std::vector<RouteEnvironment> routes;

  int year(int t) const { return first_year + t - 1; }
  Regime regime(int t) const { return calendar.regime(year(t)); }
  void validate() const;
};

// Demand states follow D = c_r + 0.434 * g * (year - 1973) + 0.396 * 1(year <= 1979) + 0.095 * 1(1980..1983)
// with a synthetic log-GDP growth g; route constants and intercepts are calibrated so
// that typical states have Q/S near 4 and competitive prices near $2,400 per TEU.
MarketEnvironment fixture_environment(Market market, int horizon = 18, int first_year = 1973);

// Point estimates of the dynamic parameters for each market, beta = 0.9.
DynamicParams fixture_dynamic_params(Market market);

// Static outcome of one industry state in one period, with all level-l firms at the
// representative tonnage of level l.
struct StateStatics {
  bool empty = true;
  std::vector<double> price;           // per route, USD/TEU (0 when empty)
  std::vector<double> quantity;        // per route, TEU
  std::array<double, kLevels> level_profit{};  // per firm, summed over routes, USD
  double producer_surplus = 0.0;       // all firms, USD
};

StateStatics state_statics(const MarketEnvironment& env, int t, const IndustryState& state);

class StaticTable {
 public:
  StaticTable(const MarketEnvironment& env, Caps caps);

  int horizon() const { return horizon_; }
  const StateSpace& space() const { return space_; }
  const StateStatics& at(int t, int state) const { return data_[static_cast<std::size_t>(t - 1) * space_.size() + state]; }
  double max_price() const;

 private:
  int horizon_;
  StateSpace space_;
  std::vector<StateStatics> data_;
};

// Static profits in 100 billion USD.
ProfitTable profit_table(const StaticTable& statics);
ProfitTable build_profit_table(const MarketEnvironment& env, Caps caps);

}  // namespace liner
