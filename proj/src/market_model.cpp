#include "liner/market_model.hpp"

#include <algorithm>
#include <cmath>

#include "liner/errors.hpp"
#include "liner/units.hpp"

namespace liner {

void MarketEnvironment::validate() const {
  if (horizon < 1) throw ConfigError("market environment: horizon must be at least 1");
  if (routes.empty()) throw ConfigError("market environment: no routes");
  for (const auto& r : routes) {
    if (static_cast<int>(r.demand_state.size()) != horizon || static_cast<int>(r.gamma0.size()) != horizon)
      throw ConfigError("market environment: route '" + r.name + "' does not cover the horizon");
    for (double g : r.gamma0)
      if (!(g > 0.0)) throw ConfigError("market environment: route '" + r.name + "' has non-positive gamma0");
  }
  StaticParams p = params;
  p.gamma0 = routes.front().gamma0.front();
  p.validate();
}

MarketEnvironment fixture_environment(Market market, int horizon, int first_year) {
  struct Calib {
    double east, west, gamma0;
  };
  Calib c{};
  switch (market) {
    case Market::Transpacific: c = {19.25, 18.85, 1725.0}; break;
    case Market::Transatlantic: c = {19.00, 18.70, 1500.0}; break;
    case Market::AsiaEurope: c = {19.40, 19.10, 1600.0}; break;
  }
  constexpr double alpha2 = 0.434, alpha3 = 0.396, alpha4 = 0.095, gdp_growth = 0.03;
  MarketEnvironment env;
  env.market = market;
  env.first_year = first_year;
  env.horizon = horizon;
  env.tonnage = RepresentativeTonnage::for_market(market);
  for (auto [name, base] : {std::pair{"eastbound", c.east}, std::pair{"westbound", c.west}}) {
    RouteEnvironment r;
    r.name = name;
    for (int t = 1; t <= horizon; ++t) {
      const int y = first_year + t - 1;
      double d = base + alpha2 * gdp_growth * (y - 1973);
      if (y <= 1979) d += alpha3;
      else if (y <= 1983) d += alpha4;
      r.demand_state.push_back(d);
      r.gamma0.push_back(c.gamma0);
    }
    env.routes.push_back(std::move(r));
  }
  env.params.gamma0 = c.gamma0;
  return env;
}

DynamicParams fixture_dynamic_params(Market market) {
  // exit, operation, entry, invest low, invest high, sigma, beta
  switch (market) {
    case Market::Transpacific: return {0.200, 0.103, 0.055, 0.152, 0.162, 0.101, 0.9};
    case Market::Transatlantic: return {0.193, 0.096, 0.109, 0.146, 0.256, 0.100, 0.9};
    case Market::AsiaEurope: return {0.302, 0.105, 0.001, 0.076, 0.078, 0.078, 0.9};
  }
  throw ConfigError("unknown market");
}

StateStatics state_statics(const MarketEnvironment& env, int t, const IndustryState& state) {
  if (t < 1 || t > env.horizon) throw DomainError("state_statics: period out of range");
  StateStatics out;
  const std::size_t nr = env.routes.size();
  out.price.assign(nr, 0.0);
  out.quantity.assign(nr, 0.0);
  if (state.total() == 0) return out;
  out.empty = false;

  RouteSnapshot snap;
  snap.year_index = t;
  snap.regime = env.regime(t);
  std::array<int, kLevels> first{};
  for (int l = 1; l <= kLevels; ++l) {
    first[l - 1] = static_cast<int>(snap.tonnages.size());
    for (int i = 0; i < state.count(l); ++i) {
      snap.tonnages.push_back(env.tonnage.tonnage(l));
      snap.levels.push_back(l);
    }
  }
  for (std::size_t r = 0; r < nr; ++r) {
    snap.demand_state = env.routes[r].demand_state[t - 1];
    StaticParams p = env.params;
    p.gamma0 = env.routes[r].gamma0[t - 1];
    const auto eq = equilibrium_outcome(snap, p, env.allocation);
    out.price[r] = eq.price;
    out.quantity[r] = eq.quantity;
    for (int l = 1; l <= kLevels; ++l)
      if (state.count(l) > 0) out.level_profit[l - 1] += eq.firm_profits[first[l - 1]];
    out.producer_surplus += producer_surplus(eq.firm_profits);
  }
  return out;
}

StaticTable::StaticTable(const MarketEnvironment& env, Caps caps) : horizon_(env.horizon), space_(caps) {
  env.validate();
  data_.reserve(static_cast<std::size_t>(horizon_) * space_.size());
  for (int t = 1; t <= horizon_; ++t)
    for (int s = 0; s < space_.size(); ++s) data_.push_back(state_statics(env, t, space_.state(s)));
}

double StaticTable::max_price() const {
  double m = 0.0;
  for (const auto& d : data_)
    for (double p : d.price) m = std::max(m, p);
  return m;
}

ProfitTable profit_table(const StaticTable& statics) {
  ProfitTable table(statics.horizon(), statics.space().caps());
  for (int t = 1; t <= statics.horizon(); ++t)
    for (int s = 0; s < statics.space().size(); ++s) {
      const auto& st = statics.at(t, s);
      for (int l = 1; l <= kLevels; ++l) table.set(t, s, l, units::usd_to_dynamic(st.level_profit[l - 1]));
    }
  return table;
}

ProfitTable build_profit_table(const MarketEnvironment& env, Caps caps) { return profit_table(StaticTable(env, caps)); }

}  // namespace liner
