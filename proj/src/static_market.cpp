#include "liner/static_market.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>

#include "liner/errors.hpp"
#include "liner/state_space.hpp"

namespace liner {

bool is_collusive(Regime r) { return r != Regime::Competitive; }

const char* to_string(Regime r) {
  switch (r) {
    case Regime::Collusive79: return "collusive79";
    case Regime::Collusive83: return "collusive83";
    case Regime::Competitive: return "competitive";
  }
  return "?";
}

Regime RegimeCalendar::regime(int year) const {
  if (year <= collusive_last_year) return Regime::Collusive79;
  if (year <= weak_collusive_last_year) return Regime::Collusive83;
  return Regime::Competitive;
}

double StaticParams::cartel_effect(Regime r) const {
  switch (r) {
    case Regime::Collusive79: return cartel_effect_pre80;
    case Regime::Collusive83: return cartel_effect_80_83;
    case Regime::Competitive: return 0.0;
  }
  return 0.0;
}

void StaticParams::validate() const {
  if (!(alpha1 < 0.0)) throw PreconditionError("alpha1 must be negative, got " + std::to_string(alpha1));
  if (!(gamma0 > 0.0)) throw PreconditionError("gamma0 must be positive, got " + std::to_string(gamma0));
  if (!(gamma1 >= 0.0)) throw PreconditionError("gamma1 must be non-negative, got " + std::to_string(gamma1));
}

double RouteSnapshot::total_tonnage() const { return std::accumulate(tonnages.begin(), tonnages.end(), 0.0); }

double demand_quantity(double price, double demand_state, double alpha1) {
  if (!(price > 0.0)) throw DomainError("demand_quantity: price must be positive");
  return std::exp(demand_state) * std::pow(price, alpha1);
}

double marginal_cost(double q, double tonnage, double gamma0, double gamma1) {
  if (!(tonnage > 0.0)) throw DomainError("marginal_cost: tonnage must be positive");
  if (q < 0.0) throw DomainError("marginal_cost: quantity must be non-negative");
  return gamma0 + gamma1 * q / tonnage;
}

double total_cost(double q, double tonnage, double gamma0, double gamma1) {
  if (!(tonnage > 0.0)) throw DomainError("total_cost: tonnage must be positive");
  if (q < 0.0) throw DomainError("total_cost: quantity must be non-negative");
  return gamma0 * q + gamma1 * q * q / (2.0 * tonnage);
}

double individual_supply(double price, double tonnage, double gamma0, double gamma1) {
  if (!(gamma1 > 0.0)) throw DomainError("individual_supply: gamma1 must be positive");
  return (price - gamma0) / gamma1 * tonnage;
}

std::vector<double> allocation_weights(const AllocationRule& rule, std::span<const double> tonnages,
                                       std::span<const int> levels) {
  if (tonnages.empty()) throw DomainError("allocation_weights: no firms");
  if (rule.kind != AllocationKind::TonnageShare && levels.size() != tonnages.size())
    throw DomainError("allocation_weights: levels must match tonnages");
  if (!(rule.boost > 0.0) || !(rule.penalty > 0.0))
    throw DomainError("allocation_weights: boost and penalty must be positive");

  std::vector<double> w(tonnages.size());
  for (std::size_t i = 0; i < tonnages.size(); ++i) {
    if (!(tonnages[i] > 0.0)) throw DomainError("allocation_weights: tonnage must be positive");
    double m = 1.0;
    if (rule.kind == AllocationKind::FavorSmall) m = levels[i] <= 2 ? rule.boost : rule.penalty;
    if (rule.kind == AllocationKind::FavorLarge) m = levels[i] >= 3 ? rule.boost : rule.penalty;
    w[i] = m * tonnages[i];
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return w;
}

double excess_price(double price, double demand_state, double total_tonnage, double cartel,
                    const StaticParams& params) {
  return price - params.gamma0 - params.gamma1 * std::exp(demand_state) * std::pow(price, params.alpha1) / total_tonnage -
         cartel;
}

namespace {

constexpr double kPriceFloor = 1e-9;

double solve_price(double demand_state, double total_tonnage, double cartel, const StaticParams& params) {
  if (params.gamma1 == 0.0) return params.gamma0 + cartel;

  auto delta = [&](double p) { return excess_price(p, demand_state, total_tonnage, cartel, params); };

  // Delta(gamma0 + cartel) < 0 and Delta is increasing, so the root lies above that point.
  double lo = std::max(kPriceFloor, params.gamma0 + cartel);
  if (delta(lo) > 0.0) {
    if (lo > kPriceFloor) throw SolverError("equilibrium_price: lower bracket has positive excess price");
    return lo;
  }
  double hi = lo + params.gamma1 * std::exp(demand_state) * std::pow(lo, params.alpha1) / total_tonnage;
  int grow = 0;
  while (!(delta(hi) > 0.0)) {
    hi = 2.0 * hi + 1.0;
    if (++grow > 200 || !std::isfinite(hi)) throw SolverError("equilibrium_price: bracket not found");
  }

  std::uintmax_t iters = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(52);
  auto [a, b] = boost::math::tools::toms748_solve(delta, lo, hi, tol, iters);
  double p = 0.5 * (a + b);

  // Newton polish with the analytic derivative.
  for (int k = 0; k < 3; ++k) {
    const double d = delta(p);
    const double slope = 1.0 - params.gamma1 * std::exp(demand_state) / total_tonnage * params.alpha1 *
                                   std::pow(p, params.alpha1 - 1.0);
    const double next = p - d / slope;
    if (!(next > 0.0) || !std::isfinite(next)) break;
    if (std::abs(delta(next)) >= std::abs(d)) break;
    p = next;
  }
  return p;
}

}  // namespace

double equilibrium_price(const RouteSnapshot& snapshot, const StaticParams& params) {
  params.validate();
  const double s = snapshot.total_tonnage();
  if (!(s > 0.0)) throw PreconditionError("equilibrium_price: total tonnage must be positive");
  return solve_price(snapshot.demand_state, s, params.cartel_effect(snapshot.regime), params);
}

EquilibriumOutcome equilibrium_outcome(const RouteSnapshot& snapshot, const StaticParams& params,
                                       const AllocationRule& rule) {
  EquilibriumOutcome out;
  out.price = equilibrium_price(snapshot, params);
  out.quantity = demand_quantity(out.price, snapshot.demand_state, params.alpha1);

  const std::size_t n = snapshot.tonnages.size();
  out.firm_quantities.resize(n);
  out.firm_profits.resize(n);

  if (is_collusive(snapshot.regime) || params.gamma1 == 0.0) {
    std::vector<int> levels = snapshot.levels;
    if (levels.empty()) {
      levels.reserve(n);
      for (double s : snapshot.tonnages) levels.push_back(discretize_tonnage(s));
    }
    const auto w = allocation_weights(rule, snapshot.tonnages, levels);
    for (std::size_t i = 0; i < n; ++i) out.firm_quantities[i] = out.quantity * w[i];
  } else {
    for (std::size_t i = 0; i < n; ++i)
      out.firm_quantities[i] =
          std::max(0.0, individual_supply(out.price, snapshot.tonnages[i], params.gamma0, params.gamma1));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double q = out.firm_quantities[i];
    out.firm_profits[i] = out.price * q - total_cost(q, snapshot.tonnages[i], params.gamma0, params.gamma1);
  }
  return out;
}

std::vector<double> market_profit(std::span<const EquilibriumOutcome> route_outcomes) {
  if (route_outcomes.empty()) return {};
  const std::size_t n = route_outcomes.front().firm_profits.size();
  std::vector<double> total(n, 0.0);
  for (const auto& r : route_outcomes) {
    if (r.firm_profits.size() != n) throw ConsistencyError("market_profit: routes have different firm rosters");
    for (std::size_t i = 0; i < n; ++i) total[i] += r.firm_profits[i];
  }
  return total;
}

double consumer_surplus(double price, double demand_state, double alpha1, double choke_price) {
  if (!(price > 0.0)) throw DomainError("consumer_surplus: price must be positive");
  if (choke_price < price) throw DomainError("consumer_surplus: choke price below price");
  if (alpha1 == -1.0) throw DomainError("consumer_surplus: alpha1 = -1 not supported");
  if (choke_price == price) return 0.0;
  const double e = alpha1 + 1.0;
  double upper;
  if (std::isinf(choke_price)) {
    if (e >= 0.0) throw DomainError("consumer_surplus: infinite choke price requires alpha1 < -1");
    upper = 0.0;
  } else {
    upper = std::pow(choke_price, e);
  }
  return std::exp(demand_state) * (upper - std::pow(price, e)) / e;
}

double producer_surplus(std::span<const double> firm_profits) {
  return std::accumulate(firm_profits.begin(), firm_profits.end(), 0.0);
}

}  // namespace liner
