#pragma once

#include <span>
#include <vector>

namespace liner {

enum class Regime { Collusive79, Collusive83, Competitive };

bool is_collusive(Regime r);
const char* to_string(Regime r);

// Year -> regime mapping. Defaults follow the pre-1980 / 1980-83 / post-Shipping-Act split.
struct RegimeCalendar {
  int collusive_last_year = 1979;
  int weak_collusive_last_year = 1983;

  Regime regime(int year) const;
};

struct StaticParams {
  double alpha1 = -0.869;  // demand price elasticity
  double gamma0 = 0.0;     // supply intercept, USD/TEU
  double gamma1 = 180.190;  // supply slope on Q/S, USD/TEU
  double cartel_effect_pre80 = 1106.208;
  double cartel_effect_80_83 = 440.663;

  double cartel_effect(Regime r) const;
  // Throws PreconditionError unless alpha1 < 0, gamma0 > 0, gamma1 >= 0.
  void validate() const;
};

struct RouteSnapshot {
  double demand_state = 0.0;    // D_rt, log scale
  std::vector<double> tonnages;  // per-firm tonnage, TEU
  std::vector<int> levels;       // per-firm capacity level; derived from tonnage when empty
  int year_index = 0;
  Regime regime = Regime::Competitive;

  double total_tonnage() const;
};

enum class AllocationKind { TonnageShare, FavorSmall, FavorLarge };

struct AllocationRule {
  AllocationKind kind = AllocationKind::TonnageShare;
  double boost = 1.25;
  double penalty = 0.75;
};

struct EquilibriumOutcome {
  double price = 0.0;
  double quantity = 0.0;
  std::vector<double> firm_quantities;
  std::vector<double> firm_profits;
};

double demand_quantity(double price, double demand_state, double alpha1);
double marginal_cost(double q, double tonnage, double gamma0, double gamma1);
double total_cost(double q, double tonnage, double gamma0, double gamma1);
double individual_supply(double price, double tonnage, double gamma0, double gamma1);

std::vector<double> allocation_weights(const AllocationRule& rule, std::span<const double> tonnages,
                                       std::span<const int> levels);

// Delta(P) = P - gamma0 - gamma1 * exp(D) P^alpha1 / S - cartel; strictly increasing for alpha1 < 0.
double excess_price(double price, double demand_state, double total_tonnage, double cartel,
                    const StaticParams& params);

double equilibrium_price(const RouteSnapshot& snapshot, const StaticParams& params);

EquilibriumOutcome equilibrium_outcome(const RouteSnapshot& snapshot, const StaticParams& params,
                                       const AllocationRule& rule = {});

// Per-firm market profit: sum of the eastbound and westbound route profits.
std::vector<double> market_profit(std::span<const EquilibriumOutcome> route_outcomes);

// Area under the demand curve between price and choke_price. choke_price may be +inf when alpha1 < -1.
double consumer_surplus(double price, double demand_state, double alpha1, double choke_price);

double producer_surplus(std::span<const double> firm_profits);

}  // namespace liner
