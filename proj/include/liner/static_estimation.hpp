#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "liner/data_io.hpp"
#include "liner/estimation.hpp"

namespace liner {

// Demand: log Q = alpha1 log P + alpha2 X + alpha3 d79 + alpha4 d83 + alpha_r,
//   log P instrumented by log total tonnage and average ship size.
// Supply: P = gamma1 Q/S + cartel_1 d79 + cartel_2 d83 + gamma2' Y + gamma_r,
//   Q/S instrumented by log GDP; Y = (average ship age, share of old ships).
// Route fixed effects absorbed, errors clustered by route.
struct StaticEstimation {
  EstimateReport demand;
  EstimateReport supply;
  StaticParams params;  // gamma0 left at the first route-year's value
  struct EnvRow {
    std::string market, route;
    int year;
    double demand_state, gamma0;
  };
  std::vector<EnvRow> environment;
};

inline constexpr const char* kLogPrice = "log_price";
inline constexpr const char* kQuantityPerTonnage = "quantity_per_tonnage";
inline constexpr const char* kCartel79 = "cartel_1973_1979";
inline constexpr const char* kCartel83 = "cartel_1980_1983";

StaticEstimation estimate_static(const std::vector<RouteYearRecord>& rows, const RegimeCalendar& calendar = {});

void write_static_estimates_csv(const StaticEstimation& est, std::ostream& out);
void write_static_environment_csv(const StaticEstimation& est, std::ostream& out);

}  // namespace liner
