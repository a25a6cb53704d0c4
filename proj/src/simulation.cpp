#include "liner/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "liner/errors.hpp"
#include "liner/units.hpp"

namespace liner {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int draw(const ChoiceRow& row, int n_actions, SplitMix64& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (int a = 0; a < n_actions - 1; ++a) {
    acc += row[a];
    if (u < acc) return a;
  }
  return n_actions - 1;
}

}  // namespace

ActionTally sample_actions(const IndustryState& s, const LevelCcps& ccps, int n_entrants, SplitMix64& rng) {
  ActionTally t;
  for (int l = 1; l <= kLevels; ++l)
    for (int i = 0; i < s.count(l); ++i) {
      const int a = draw(ccps.incumbent[l - 1], 3, rng);
      if (a == kExit) ++t.exits[l - 1];
      else if (a == kBuild) ++t.builds[l - 1];
    }
  for (int i = 0; i < n_entrants; ++i) (draw(ccps.entrant, 2, rng) == kEnter ? t.entries : t.entrant_quits)++;
  return t;
}

SimulatedPath simulate_path(const PolicySolution& policy, const IndustryState& initial, int horizon, std::uint64_t seed,
                            const StaticTable* statics, int first_year) {
  if (horizon < 1 || horizon > policy.horizon()) throw DomainError("simulate_path: horizon outside the solved horizon");
  const auto& space = policy.space();
  if (!space.contains(initial)) throw DomainError("simulate_path: initial state " + to_string(initial) + " exceeds caps");
  SplitMix64 rng(seed);
  SimulatedPath path;
  path.seed = seed;
  IndustryState s = initial;
  for (int t = 1; t <= horizon; ++t) {
    SimulatedYear y;
    y.t = t;
    y.year = first_year + t - 1;
    y.state = s;
    const int idx = space.index(s);
    if (statics) {
      const auto& st = statics->at(t, idx);
      y.price = st.price;
      y.quantity = st.quantity;
      y.producer_surplus = st.producer_surplus;
    }
    if (t < horizon) {
      y.tally = sample_actions(s, policy.level_ccps(t, idx), policy.n_entrants(), rng);
      s = apply_transition(s, y.tally, space.caps());
    }
    path.years.push_back(std::move(y));
  }
  return path;
}

Ensemble simulate_ensemble(const PolicySolution& policy, const IndustryState& initial, int horizon, int n,
                           std::uint64_t base_seed, const StaticTable* statics, int first_year) {
  if (n < 1) throw DomainError("simulate_ensemble: n must be at least 1");
  Ensemble e;
  e.paths.reserve(n);
  for (int i = 0; i < n; ++i)
    e.paths.push_back(simulate_path(policy, initial, horizon, base_seed + static_cast<std::uint64_t>(i), statics, first_year));
  e.mean_counts.assign(horizon, {});
  e.median_counts.assign(horizon, {});
  std::vector<int> column(n);
  for (int t = 0; t < horizon; ++t)
    for (int l = 0; l < kLevels; ++l) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        column[i] = e.paths[i].years[t].state.n[l];
        sum += column[i];
      }
      e.mean_counts[t][l] = sum / n;
      std::sort(column.begin(), column.end());
      e.median_counts[t][l] = n % 2 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
    }
  return e;
}

ScenarioKind parse_scenario(const std::string& name) {
  if (name == "baseline") return ScenarioKind::Baseline;
  if (name == "no-cartel") return ScenarioKind::NoCartel;
  if (name == "omega1" || name == "favor-small") return ScenarioKind::FavorSmall;
  if (name == "omega2" || name == "favor-large") return ScenarioKind::FavorLarge;
  throw ConfigError("unknown scenario '" + name + "'");
}

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Baseline: return "baseline";
    case ScenarioKind::NoCartel: return "no-cartel";
    case ScenarioKind::FavorSmall: return "omega1";
    case ScenarioKind::FavorLarge: return "omega2";
  }
  return "?";
}

MarketEnvironment apply_scenario(const MarketEnvironment& env, const Scenario& scenario) {
  MarketEnvironment out = env;
  if (scenario.static_override) out.params = *scenario.static_override;
  switch (scenario.kind) {
    case ScenarioKind::Baseline: break;
    case ScenarioKind::NoCartel:
      out.params.cartel_effect_pre80 = 0.0;
      out.params.cartel_effect_80_83 = 0.0;
      break;
    case ScenarioKind::FavorSmall: out.allocation.kind = AllocationKind::FavorSmall; break;
    case ScenarioKind::FavorLarge: out.allocation.kind = AllocationKind::FavorLarge; break;
  }
  return out;
}

ScenarioRun run_scenario(const Scenario& scenario, const MarketEnvironment& env, const DynamicParams& params,
                         const SolverOptions& solver, const IndustryState& initial, int n_sims,
                         std::uint64_t base_seed) {
  MarketEnvironment patched = apply_scenario(env, scenario);
  const DynamicParams theta = scenario.dynamic_override.value_or(params);
  StaticTable statics(patched, solver.caps);
  PolicySolution policy = backward_induction(profit_table(statics), theta, solver);
  Ensemble ens = simulate_ensemble(policy, initial, patched.horizon, n_sims, base_seed, &statics, patched.first_year);
  return ScenarioRun{std::move(patched), theta, std::move(statics), std::move(policy), std::move(ens)};
}

std::vector<RegimeWindow> default_regime_windows() {
  return {{"1973-1979", 1973, 1979}, {"1980-1983", 1980, 1983}, {"1984-1990", 1984, 1990}};
}

WelfareReport welfare_by_regime(const std::vector<SimulatedPath>& paths, const MarketEnvironment& env,
                                const WelfareOptions& opt) {
  if (paths.empty()) throw DomainError("welfare_by_regime: no paths");
  WelfareReport rep;
  for (const auto& w : opt.windows) rep.rows.push_back({w.name, 0.0, 0.0, 0.0});
  for (const auto& path : paths) {
    for (const auto& y : path.years) {
      if (y.price.size() != env.routes.size())
        throw PreconditionError("welfare_by_regime: path lacks static outcomes for year " + std::to_string(y.year));
      double cs = 0.0;
      for (std::size_t r = 0; r < env.routes.size(); ++r)
        if (y.quantity[r] > 0.0)
          cs += consumer_surplus(y.price[r], env.routes[r].demand_state[y.t - 1], env.params.alpha1, opt.choke_price);
      double ps = y.producer_surplus;
      // Dynamic outlays are charged in years with a decision; the final year has none.
      if (opt.ps_mode == PsMode::NetOfDynamicCosts && y.t < static_cast<int>(path.years.size())) {
        double cost = 0.0;
        for (int l = 1; l <= kLevels; ++l) {
          const Actor a = incumbent(l);
          cost += y.tally.exits[l - 1] * per_period_cost(a, kExit, opt.dynamic) +
                  y.tally.builds[l - 1] * per_period_cost(a, kBuild, opt.dynamic) +
                  y.tally.keeps(y.state, l) * per_period_cost(a, kKeep, opt.dynamic);
        }
        cost += y.tally.entries * per_period_cost(Actor::Entrant, kEnter, opt.dynamic);
        ps -= cost * units::kUsdPerDynamicUnit;
      }
      const double disc = std::pow(opt.beta, y.year - opt.base_year);
      for (std::size_t k = 0; k < opt.windows.size(); ++k)
        if (y.year >= opt.windows[k].first_year && y.year <= opt.windows[k].last_year) {
          rep.rows[k].cs += disc * units::usd_to_welfare(cs);
          rep.rows[k].ps += disc * units::usd_to_welfare(ps);
        }
    }
  }
  for (auto& r : rep.rows) {
    r.cs /= static_cast<double>(paths.size());
    r.ps /= static_cast<double>(paths.size());
    r.sw = r.cs + r.ps;
  }
  return rep;
}

WelfareReport proportional_change(const WelfareReport& baseline, const WelfareReport& scenario) {
  if (baseline.rows.size() != scenario.rows.size()) throw DomainError("proportional_change: window mismatch");
  const auto rel = [](double b, double s) { return b != 0.0 ? (s - b) / b : std::numeric_limits<double>::quiet_NaN(); };
  WelfareReport out;
  for (std::size_t k = 0; k < baseline.rows.size(); ++k) {
    const auto& b = baseline.rows[k];
    const auto& s = scenario.rows[k];
    out.rows.push_back({b.window, rel(b.cs, s.cs), rel(b.ps, s.ps), rel(b.sw, s.sw)});
  }
  return out;
}

void write_mean_path_csv(const Ensemble& e, int first_year, std::ostream& out) {
  out << "year,mean_n1,mean_n2,mean_n3,mean_n4,median_n1,median_n2,median_n3,median_n4\n";
  for (std::size_t t = 0; t < e.mean_counts.size(); ++t) {
    out << first_year + static_cast<int>(t);
    for (double v : e.mean_counts[t]) out << ',' << fmt(v);
    for (double v : e.median_counts[t]) out << ',' << fmt(v);
    out << '\n';
  }
}

void write_paths_csv(const std::vector<SimulatedPath>& paths, std::ostream& out) {
  out << "run,seed,year,n1,n2,n3,n4,exits1,exits2,exits3,exits4,builds1,builds2,builds3,entries,entrant_quits,"
         "producer_surplus\n";
  for (std::size_t i = 0; i < paths.size(); ++i)
    for (const auto& y : paths[i].years) {
      out << i << ',' << paths[i].seed << ',' << y.year;
      for (int v : y.state.n) out << ',' << v;
      for (int v : y.tally.exits) out << ',' << v;
      for (int l = 0; l < 3; ++l) out << ',' << y.tally.builds[l];
      out << ',' << y.tally.entries << ',' << y.tally.entrant_quits << ',' << fmt(y.producer_surplus) << '\n';
    }
}

void write_welfare_csv(const WelfareReport& report, std::ostream& out, const WelfareReport* change) {
  out << "regime,cs,ps,sw";
  if (change) out << ",cs_change,ps_change,sw_change";
  out << '\n';
  for (std::size_t k = 0; k < report.rows.size(); ++k) {
    const auto& r = report.rows[k];
    out << r.window << ',' << fmt(r.cs) << ',' << fmt(r.ps) << ',' << fmt(r.sw);
    if (change) {
      const auto& c = change->rows.at(k);
      out << ',' << fmt(c.cs) << ',' << fmt(c.ps) << ',' << fmt(c.sw);
    }
    out << '\n';
  }
}

void write_plot_data(const Ensemble& e, int first_year, std::ostream& out) {
  out << "# year mean_n1 mean_n2 mean_n3 mean_n4\n";
  for (std::size_t t = 0; t < e.mean_counts.size(); ++t) {
    out << first_year + static_cast<int>(t);
    for (double v : e.mean_counts[t]) out << ' ' << fmt(v);
    out << '\n';
  }
}

}  // namespace liner
