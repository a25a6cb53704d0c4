#include "liner/static_estimation.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include "liner/errors.hpp"

namespace liner {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_report(const char* eq, const EstimateReport& r, std::ostream& out) {
  for (std::size_t i = 0; i < r.names.size(); ++i)
    out << eq << ',' << r.names[i] << ',' << fmt(r.coef(i)) << ',' << fmt(r.se(i)) << '\n';
  for (std::size_t i = 0; i < r.first_stage_f.size(); ++i)
    out << eq << ",first_stage_f_" << r.names[i] << ',' << fmt(r.first_stage_f[i]) << ",\n";
  out << eq << ",r2," << fmt(r.r2) << ",\n";
  out << eq << ",n_obs," << r.n_obs << ",\n";
  out << eq << ",n_clusters," << r.n_clusters << ",\n";
}

}  // namespace

StaticEstimation estimate_static(const std::vector<RouteYearRecord>& rows, const RegimeCalendar& calendar) {
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) throw EstimationError("estimate_static: no route-year rows");
  std::map<std::pair<std::string, std::string>, int> group_of;
  std::vector<int> group(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto key = std::make_pair(rows[i].market, rows[i].route);
    const auto it = group_of.emplace(key, static_cast<int>(group_of.size())).first;
    group[i] = it->second;
  }
  Eigen::VectorXd log_q(n), price(n);
  Eigen::MatrixXd log_p(n, 1), q_per_s(n, 1), dem_exog(n, 3), dem_inst(n, 2), sup_exog(n, 4), sup_inst(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[i];
    const Regime reg = calendar.regime(r.year);
    const double d79 = reg == Regime::Collusive79, d83 = reg == Regime::Collusive83;
    log_q(i) = std::log(r.quantity);
    price(i) = r.price;
    log_p(i, 0) = std::log(r.price);
    q_per_s(i, 0) = r.quantity / r.total_tonnage;
    dem_exog.row(i) << r.log_gdp, d79, d83;
    dem_inst.row(i) << std::log(r.total_tonnage), r.avg_ship_size;
    sup_exog.row(i) << d79, d83, r.avg_ship_age, r.share_old_ships;
    sup_inst(i, 0) = r.log_gdp;
  }
  StaticEstimation est;
  est.demand = tsls_panel(log_q, log_p, dem_exog, dem_inst, {kLogPrice, kLogGdp, kRegime79, kRegime83}, group, group);
  est.supply = tsls_panel(price, q_per_s, sup_exog, sup_inst,
                          {kQuantityPerTonnage, kCartel79, kCartel83, "avg_ship_age", "share_old_ships"}, group, group);
  est.params.alpha1 = est.demand.coefficient(kLogPrice);
  est.params.gamma1 = est.supply.coefficient(kQuantityPerTonnage);
  est.params.cartel_effect_pre80 = est.supply.coefficient(kCartel79);
  est.params.cartel_effect_80_83 = est.supply.coefficient(kCartel83);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[i];
    const double d = demand_state(est.demand, r.log_gdp, r.year, est.demand.group_effects[group[i]], calendar);
    const double g0 = supply_intercept(est.supply, {{"avg_ship_age", r.avg_ship_age}, {"share_old_ships", r.share_old_ships}},
                                       est.supply.group_effects[group[i]]);
    est.environment.push_back({r.market, r.route, r.year, d, g0});
  }
  est.params.gamma0 = est.environment.front().gamma0;
  return est;
}

void write_static_estimates_csv(const StaticEstimation& est, std::ostream& out) {
  out << "equation,name,estimate,std_error\n";
  write_report("demand", est.demand, out);
  write_report("supply", est.supply, out);
}

void write_static_environment_csv(const StaticEstimation& est, std::ostream& out) {
  out << "market,route,year,demand_state,gamma0\n";
  for (const auto& e : est.environment)
    out << e.market << ',' << e.route << ',' << e.year << ',' << fmt(e.demand_state) << ',' << fmt(e.gamma0) << '\n';
}

}  // namespace liner
