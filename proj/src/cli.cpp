#include "liner/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <boost/version.hpp>
#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include "liner/data_io.hpp"
#include "liner/errors.hpp"
#include "liner/static_estimation.hpp"

namespace liner {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr const char* kEnvironmentHeader = "market,route,year,demand_state,gamma0";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError("config: '" + section + "' must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError("config: unknown key '" + (section.empty() ? k : section + "." + k) + "'");
}

template <class T>
void get(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: '" + section + "." + key + "' has the wrong type");
  }
}

std::string resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  const fs::path path(p);
  return (path.is_absolute() || base.empty()) ? p : (base / path).string();
}

}  // namespace

RunConfig parse_config(const std::string& text, const fs::path& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  check_keys(j, "", {"market", "first_year", "horizon", "static", "regimes", "environment_csv", "dynamic", "solver",
                     "simulation", "welfare", "data", "estimation", "ci", "synthetic", "output_dir"});
  RunConfig c;
  get(j, "market", c.market, "");
  parse_market(c.market);
  get(j, "first_year", c.first_year, "");
  get(j, "horizon", c.horizon, "");
  if (c.horizon < 1 || c.horizon > 200) throw ConfigError("config: horizon must lie in 1..200");
  std::string env_csv;
  get(j, "environment_csv", env_csv, "");
  c.environment_csv = resolve(base, env_csv);
  std::string out_dir = c.out_dir;
  get(j, "output_dir", out_dir, "");
  c.out_dir = resolve(base, out_dir);

  if (j.contains("static")) {
    const auto& s = j["static"];
    check_keys(s, "static", {"alpha1", "gamma1", "cartel_effect_pre80", "cartel_effect_80_83"});
    get(s, "alpha1", c.static_params.alpha1, "static");
    get(s, "gamma1", c.static_params.gamma1, "static");
    get(s, "cartel_effect_pre80", c.static_params.cartel_effect_pre80, "static");
    get(s, "cartel_effect_80_83", c.static_params.cartel_effect_80_83, "static");
    StaticParams probe = c.static_params;
    probe.gamma0 = 1.0;
    probe.validate();
  }
  if (j.contains("regimes")) {
    const auto& s = j["regimes"];
    check_keys(s, "regimes", {"collusive_last_year", "weak_collusive_last_year"});
    get(s, "collusive_last_year", c.calendar.collusive_last_year, "regimes");
    get(s, "weak_collusive_last_year", c.calendar.weak_collusive_last_year, "regimes");
    if (c.calendar.weak_collusive_last_year < c.calendar.collusive_last_year)
      throw ConfigError("config: regimes.weak_collusive_last_year precedes collusive_last_year");
  }
  c.dynamic = fixture_dynamic_params(parse_market(c.market));
  if (j.contains("dynamic")) {
    const auto& s = j["dynamic"];
    check_keys(s, "dynamic", {"psi", "phi", "kappa_e", "iota1", "iota2", "sigma", "beta"});
    c.dynamic_given = true;
    get(s, "psi", c.dynamic.exit_cost, "dynamic");
    get(s, "phi", c.dynamic.operation_cost, "dynamic");
    get(s, "kappa_e", c.dynamic.entry_cost, "dynamic");
    get(s, "iota1", c.dynamic.invest_cost_low, "dynamic");
    get(s, "iota2", c.dynamic.invest_cost_high, "dynamic");
    get(s, "sigma", c.dynamic.logit_scale, "dynamic");
    get(s, "beta", c.dynamic.discount, "dynamic");
    c.dynamic.validate();
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    check_keys(s, "solver", {"caps", "n_entrants", "tolerance", "max_iters", "top_build"});
    std::vector<int> caps;
    get(s, "caps", caps, "solver");
    if (s.contains("caps")) {
      if (caps.size() != kLevels) throw ConfigError("config: solver.caps needs four entries");
      for (int l = 0; l < kLevels; ++l) c.solver.caps[l] = caps[l];
    }
    get(s, "n_entrants", c.solver.n_entrants, "solver");
    get(s, "tolerance", c.solver.tolerance, "solver");
    get(s, "max_iters", c.solver.max_iters, "solver");
    std::string top = "zero";
    get(s, "top_build", top, "solver");
    if (top == "zero") c.solver.top_build = TopBuildMode::ZeroValue;
    else if (top == "exclude") c.solver.top_build = TopBuildMode::Exclude;
    else throw ConfigError("config: solver.top_build must be 'zero' or 'exclude'");
  }
  for (int cap : c.solver.caps)
    if (cap < 0 || cap > 30) throw ConfigError("config: solver.caps entries must lie in 0..30");
  if (c.solver.n_entrants < 0 || c.solver.n_entrants > 30) throw ConfigError("config: solver.n_entrants must lie in 0..30");
  if (!(c.solver.tolerance > 0.0)) throw ConfigError("config: solver.tolerance must be positive");
  if (c.solver.max_iters < 2) throw ConfigError("config: solver.max_iters must be at least 2");

  if (j.contains("simulation")) {
    const auto& s = j["simulation"];
    check_keys(s, "simulation", {"n_sims", "seed", "initial_state"});
    get(s, "n_sims", c.n_sims, "simulation");
    get(s, "seed", c.seed, "simulation");
    std::vector<int> init;
    get(s, "initial_state", init, "simulation");
    if (s.contains("initial_state")) {
      if (init.size() != kLevels) throw ConfigError("config: simulation.initial_state needs four entries");
      for (int l = 0; l < kLevels; ++l) c.initial_state.n[l] = init[l];
    }
  }
  if (c.n_sims < 1) throw ConfigError("config: simulation.n_sims must be at least 1");
  if (!StateSpace(c.solver.caps).contains(c.initial_state))
    throw ConfigError("config: simulation.initial_state exceeds solver.caps");

  if (j.contains("welfare")) {
    const auto& s = j["welfare"];
    check_keys(s, "welfare", {"choke_price", "choke_multiplier", "ps_mode", "paths", "windows"});
    get(s, "choke_price", c.choke_price, "welfare");
    get(s, "choke_multiplier", c.choke_multiplier, "welfare");
    std::string mode = "static";
    get(s, "ps_mode", mode, "welfare");
    if (mode == "static") c.ps_mode = PsMode::StaticProfits;
    else if (mode == "net") c.ps_mode = PsMode::NetOfDynamicCosts;
    else throw ConfigError("config: welfare.ps_mode must be 'static' or 'net'");
    std::string paths = "ensemble";
    get(s, "paths", paths, "welfare");
    if (paths != "ensemble" && paths != "data") throw ConfigError("config: welfare.paths must be 'ensemble' or 'data'");
    c.welfare_on_data = paths == "data";
    if (s.contains("windows")) {
      c.windows.clear();
      for (const auto& w : s["windows"]) {
        check_keys(w, "welfare.windows[]", {"name", "first_year", "last_year"});
        RegimeWindow rw;
        get(w, "name", rw.name, "welfare.windows[]");
        get(w, "first_year", rw.first_year, "welfare.windows[]");
        get(w, "last_year", rw.last_year, "welfare.windows[]");
        if (rw.last_year < rw.first_year) throw ConfigError("config: welfare window '" + rw.name + "' is empty");
        c.windows.push_back(rw);
      }
    }
  }
  if (c.choke_price < 0.0 || !(c.choke_multiplier > 1.0))
    throw ConfigError("config: welfare.choke_price must be >= 0 and choke_multiplier > 1");

  if (j.contains("data")) {
    const auto& s = j["data"];
    check_keys(s, "data", {"route_year_csv", "firm_csv"});
    get(s, "route_year_csv", c.route_year_csv, "data");
    get(s, "firm_csv", c.firm_csv, "data");
    c.route_year_csv = resolve(base, c.route_year_csv);
    c.firm_csv = resolve(base, c.firm_csv);
  }
  c.estimation.solver = c.solver;
  if (j.contains("estimation")) {
    const auto& s = j["estimation"];
    check_keys(s, "estimation", {"free", "max_evals"});
    std::vector<std::string> free;
    get(s, "free", free, "estimation");
    if (s.contains("free")) {
      c.estimation.free.fill(false);
      for (const auto& name : free) {
        const auto it = std::find(kDynamicParamNames.begin(), kDynamicParamNames.end(), name);
        if (it == kDynamicParamNames.end()) throw ConfigError("config: unknown parameter '" + name + "' in estimation.free");
        c.estimation.free[it - kDynamicParamNames.begin()] = true;
      }
    }
    get(s, "max_evals", c.estimation.nelder_mead.max_evals, "estimation");
    if (c.estimation.nelder_mead.max_evals < 1) throw ConfigError("config: estimation.max_evals must be positive");
  }
  if (j.contains("ci")) {
    const auto& s = j["ci"];
    check_keys(s, "ci", {"level", "refine"});
    get(s, "level", c.ci.level, "ci");
    get(s, "refine", c.ci.refine, "ci");
    if (!(c.ci.level > 0.0 && c.ci.level < 1.0)) throw ConfigError("config: ci.level must lie in (0, 1)");
  }
  if (j.contains("synthetic")) {
    const auto& s = j["synthetic"];
    check_keys(s, "synthetic", {"n_markets"});
    get(s, "n_markets", c.synthetic_markets, "synthetic");
    if (c.synthetic_markets < 1) throw ConfigError("config: synthetic.n_markets must be at least 1");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), fs::path(path).parent_path());
}

MarketEnvironment load_environment_csv(const std::string& path, const std::string& market, Market kind,
                                       int first_year, int horizon) {
  std::ifstream f(path);
  if (!f) throw LoadError("cannot open '" + path + "'", -1);
  std::string line;
  if (!std::getline(f, line) || (line.empty() ? line : (line.back() == '\r' ? line.substr(0, line.size() - 1) : line)) != kEnvironmentHeader)
    throw LoadError(std::string("environment header must be '") + kEnvironmentHeader + "'", -1);
  std::map<std::string, std::map<int, std::pair<double, double>>> rows;
  long row = 0;
  while (std::getline(f, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string m, r, y, d, g;
    if (!std::getline(ss, m, ',') || !std::getline(ss, r, ',') || !std::getline(ss, y, ',') ||
        !std::getline(ss, d, ',') || !std::getline(ss, g))
      throw LoadError("expected 5 columns", row);
    if (m != market) continue;
    try {
      std::size_t p1 = 0, p2 = 0, p3 = 0;
      const int year = std::stoi(y, &p1);
      const double ds = std::stod(d, &p2), g0 = std::stod(g, &p3);
      if (p1 != y.size() || p2 != d.size() || p3 != g.size()) throw std::invalid_argument("trailing");
      rows[r][year] = {ds, g0};
    } catch (const std::exception&) {
      throw LoadError("non-numeric cell", row);
    }
  }
  if (rows.empty()) throw ConfigError("environment file has no rows for market '" + market + "'");
  MarketEnvironment env = fixture_environment(kind, horizon, first_year);
  env.routes.clear();
  for (const auto& [route, years] : rows) {
    RouteEnvironment re;
    re.name = route;
    for (int t = 1; t <= horizon; ++t) {
      const auto it = years.find(first_year + t - 1);
      if (it == years.end())
        throw ConfigError("environment lacks " + market + "/" + route + " in " + std::to_string(first_year + t - 1));
      re.demand_state.push_back(it->second.first);
      re.gamma0.push_back(it->second.second);
    }
    env.routes.push_back(std::move(re));
  }
  return env;
}

void write_environment_csv(const MarketEnvironment& env, const std::string& market, std::ostream& out) {
  out << kEnvironmentHeader << '\n';
  for (const auto& r : env.routes)
    for (int t = 1; t <= env.horizon; ++t)
      out << market << ',' << r.name << ',' << env.year(t) << ',' << fmt(r.demand_state[t - 1]) << ','
          << fmt(r.gamma0[t - 1]) << '\n';
}

MarketEnvironment config_environment(const RunConfig& cfg) {
  const Market kind = parse_market(cfg.market);
  MarketEnvironment env = cfg.environment_csv.empty()
                              ? fixture_environment(kind, cfg.horizon, cfg.first_year)
                              : load_environment_csv(cfg.environment_csv, cfg.market, kind, cfg.first_year, cfg.horizon);
  env.params = cfg.static_params;
  env.params.gamma0 = env.routes.front().gamma0.front();
  env.calendar = cfg.calendar;
  env.validate();
  return env;
}

DynamicParams config_dynamic(const RunConfig& cfg) { return cfg.dynamic; }

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Collects output files and writes them plus the manifest.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}

  std::ostream& file(const std::string& name) {
    names_.push_back(name);
    streams_.emplace_back();
    return streams_.back();
  }

  void commit(const json& manifest_base) {
    fs::create_directories(dir_);
    json files = json::array();
    for (std::size_t i = 0; i < names_.size(); ++i) {
      const std::string bytes = streams_[i].str();
      std::ofstream f(dir_ / names_[i], std::ios::binary);
      if (!f) throw ConfigError("cannot write '" + (dir_ / names_[i]).string() + "'");
      f << bytes;
      files.push_back({{"file", names_[i]}, {"fnv1a64", hex(fnv1a64(bytes))}});
    }
    json m = manifest_base;
    m["outputs"] = files;
    std::ofstream f(dir_ / "manifest.json");
    f << m.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
  std::deque<std::ostringstream> streams_;
};

struct Flags {
  std::string config;
  std::string market;
  std::string scenario = "baseline";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int n_sims = 0;
  std::string out_dir;
};

void write_collusive_price_check(const StaticTable& base, const StaticTable& alt, const MarketEnvironment& env,
                           std::ostream& out) {
  out << "year,state_index,route,baseline_price,scenario_price\n";
  for (int t = 1; t <= base.horizon(); ++t) {
    if (!is_collusive(env.regime(t))) continue;
    for (int s = 0; s < base.space().size(); ++s) {
      const auto& a = base.at(t, s);
      if (a.empty) continue;
      for (std::size_t r = 0; r < a.price.size(); ++r)
        out << env.year(t) << ',' << s << ',' << env.routes[r].name << ',' << fmt(a.price[r]) << ','
            << fmt(alt.at(t, s).price[r]) << '\n';
    }
  }
}

ObservedTallies market_tallies(const RunConfig& cfg) {
  if (cfg.firm_csv.empty()) throw ConfigError("config: data.firm_csv is required for this command");
  const auto firms = load_firm_csv(cfg.firm_csv);
  ObservedTallies all = derive_tallies(firms, {cfg.first_year, cfg.horizon, {}});
  ObservedTallies out;
  for (auto& o : all)
    if (market_matches(o.market, cfg.market)) out.push_back(std::move(o));
  if (out.empty()) throw ConfigError("no firm observations for market '" + cfg.market + "'");
  return out;
}

void write_theta_csv(const DynamicParams& p, double ll, std::ostream& out) {
  out << "parameter,estimate\n";
  const auto a = to_array(p);
  for (int i = 0; i < kDynamicParams; ++i) out << kDynamicParamNames[i] << ',' << fmt(a[i]) << '\n';
  out << "beta," << fmt(p.discount) << '\n' << "log_likelihood," << fmt(ll) << '\n';
}

double resolve_choke(const RunConfig& cfg, const StaticTable& baseline) {
  if (cfg.choke_price > 0.0) return cfg.choke_price;
  const double m = baseline.max_price();
  if (!(m > 0.0)) throw ConfigError("cannot derive a choke price: baseline has no positive price");
  return cfg.choke_multiplier * m;
}

int dispatch(const std::string& cmd, const Flags& fl, std::ostream& out) {
  RunConfig cfg = load_config(fl.config);
  if (!fl.market.empty()) {
    parse_market(fl.market);
    cfg.market = fl.market;
    if (!cfg.dynamic_given) cfg.dynamic = fixture_dynamic_params(parse_market(cfg.market));
  }
  if (fl.seed_given) cfg.seed = fl.seed;
  if (fl.n_sims > 0) cfg.n_sims = fl.n_sims;
  if (!fl.out_dir.empty()) cfg.out_dir = fl.out_dir;
  const ScenarioKind scenario = parse_scenario(fl.scenario);

  std::ifstream cf(fl.config, std::ios::binary);
  std::stringstream cbytes;
  cbytes << cf.rdbuf();
  json manifest = {{"command", cmd},
                   {"config", fs::path(fl.config).filename().string()},
                   {"config_fnv1a64", hex(fnv1a64(cbytes.str()))},
                   {"market", cfg.market},
                   {"seed", cfg.seed},
                   {"scenario", to_string(scenario)},
                   {"n_sims", cfg.n_sims},
                   {"versions",
                    {{"liner", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"boost", BOOST_LIB_VERSION}}}};
  OutputSet outputs(cfg.out_dir);

  if (cmd == "synth") {
    SyntheticSpec spec;
    spec.env = config_environment(cfg);
    spec.theta = cfg.dynamic;
    spec.solver = cfg.solver;
    spec.n_markets = cfg.synthetic_markets;
    spec.seed = cfg.seed;
    const auto panel = generate_synthetic_panel(spec);
    write_route_year_csv(panel.routes, outputs.file("route_year.csv"));
    write_firm_csv(panel.firms, outputs.file("firms.csv"));
    out << "synthetic panel: " << panel.routes.size() << " route-years, " << panel.firms.size() << " firm rows, "
        << panel.tallies.size() << " market-years\n";
  } else if (cmd == "estimate-static") {
    if (cfg.route_year_csv.empty()) throw ConfigError("config: data.route_year_csv is required for estimate-static");
    const auto rows = load_route_year_csv(cfg.route_year_csv);
    const auto est = estimate_static(rows, cfg.calendar);
    write_static_estimates_csv(est, outputs.file("static_estimates.csv"));
    write_static_environment_csv(est, outputs.file("environment.csv"));
    out << "alpha1 = " << est.params.alpha1 << ", gamma1 = " << est.params.gamma1 << "\n";
    if (est.demand.weak_instruments || est.supply.weak_instruments) out << "warning: weak instruments (first-stage F < 10)\n";
  } else if (cmd == "solve") {
    const auto env = config_environment(cfg);
    const auto policy = backward_induction(build_profit_table(env, cfg.solver.caps), cfg.dynamic, cfg.solver);
    write_policy_csv(policy, outputs.file("policy.csv"));
    out << "solved " << policy.space().size() << " states x " << policy.horizon() << " periods\n";
  } else if (cmd == "estimate-dynamic") {
    const auto env = config_environment(cfg);
    const auto data = market_tallies(cfg);
    auto opts = cfg.estimation;
    opts.solver = cfg.solver;
    const auto est = estimate_dynamic(data, build_profit_table(env, cfg.solver.caps), cfg.dynamic, opts);
    write_theta_csv(est.theta, est.log_likelihood, outputs.file("dynamic_estimates.csv"));
    auto& tr = outputs.file("estimation_trace.csv");
    tr << "iteration,best_log_likelihood\n";
    for (std::size_t i = 0; i < est.trace.size(); ++i) tr << i << ',' << fmt(est.trace[i]) << '\n';
    manifest["evaluations"] = est.evaluations;
    manifest["converged"] = est.converged;
    if (!est.warning.empty()) out << "warning: " << est.warning << "\n";
    out << "log-likelihood " << est.log_likelihood << " after " << est.evaluations << " evaluations\n";
  } else if (cmd == "ci") {
    const auto env = config_environment(cfg);
    const auto data = market_tallies(cfg);
    const auto profits = build_profit_table(env, cfg.solver.caps);
    const auto ll = dynamic_log_likelihood(cfg.dynamic, data, profits, cfg.solver);
    if (ll.penalized) throw EstimationError("log-likelihood at the point estimate is not finite: " + ll.reason);
    const auto ivs = lr_confidence_intervals(cfg.dynamic, ll.value, data, profits, cfg.solver, cfg.ci);
    auto& f = outputs.file("confidence_intervals.csv");
    f << "parameter,estimate,lo,hi,level,degenerate,lo_at_grid_edge,hi_at_grid_edge\n";
    for (const auto& iv : ivs)
      f << iv.name << ',' << fmt(iv.estimate) << ',' << fmt(iv.lo) << ',' << fmt(iv.hi) << ',' << fmt(cfg.ci.level)
        << ',' << iv.degenerate << ',' << iv.lo_at_edge << ',' << iv.hi_at_edge << '\n';
  } else if (cmd == "simulate") {
    const auto env = config_environment(cfg);
    const auto run = run_scenario({scenario, {}, {}}, env, cfg.dynamic, cfg.solver, cfg.initial_state, cfg.n_sims, cfg.seed);
    write_mean_path_csv(run.ensemble, env.first_year, outputs.file("mean_path.csv"));
    write_paths_csv(run.ensemble.paths, outputs.file("paths.csv"));
    write_plot_data(run.ensemble, env.first_year, outputs.file("mean_path.dat"));
  } else if (cmd == "welfare" || cmd == "counterfactual") {
    const auto env = config_environment(cfg);
    const ScenarioKind kind = scenario == ScenarioKind::Baseline ? ScenarioKind::NoCartel : scenario;
    const auto alt_env = apply_scenario(env, {kind, {}, {}});
    // Ensemble mode re-solves and simulates both scenarios. Data mode holds the
    // observed states fixed, so the counterfactual is static.
    std::optional<ScenarioRun> base, alt;
    std::vector<SimulatedPath> data_base, data_alt;
    if (cfg.welfare_on_data) {
      const auto obs = market_tallies(cfg);
      data_base = observed_paths(obs, env);
      if (cmd == "counterfactual") data_alt = observed_paths(obs, alt_env);
    } else {
      base = run_scenario({ScenarioKind::Baseline, {}, {}}, env, cfg.dynamic, cfg.solver, cfg.initial_state,
                          cfg.n_sims, cfg.seed);
      if (cmd == "counterfactual")
        alt = run_scenario({kind, {}, {}}, env, cfg.dynamic, cfg.solver, cfg.initial_state, cfg.n_sims, cfg.seed);
    }
    const StaticTable base_statics = base ? base->statics : StaticTable(env, cfg.solver.caps);
    WelfareOptions wo;
    wo.windows = cfg.windows;
    wo.beta = cfg.dynamic.discount;
    wo.base_year = cfg.first_year;
    wo.choke_price = resolve_choke(cfg, base_statics);
    wo.ps_mode = cfg.ps_mode;
    wo.dynamic = cfg.dynamic;
    wo.n_entrants = cfg.solver.n_entrants;
    const auto wb = welfare_by_regime(base ? base->ensemble.paths : data_base, env, wo);
    manifest["choke_price"] = wo.choke_price;
    manifest["welfare_paths"] = cfg.welfare_on_data ? "data" : "ensemble";
    if (cmd == "welfare") {
      write_welfare_csv(wb, outputs.file("welfare.csv"));
    } else {
      manifest["scenario"] = to_string(kind);
      const auto wa = welfare_by_regime(alt ? alt->ensemble.paths : data_alt, alt_env, wo);
      const auto change = proportional_change(wb, wa);
      write_welfare_csv(wb, outputs.file("welfare_baseline.csv"));
      write_welfare_csv(wa, outputs.file("welfare_" + to_string(kind) + ".csv"), &change);
      if (base) {
        write_mean_path_csv(base->ensemble, env.first_year, outputs.file("mean_path_baseline.csv"));
        write_mean_path_csv(alt->ensemble, env.first_year, outputs.file("mean_path_" + to_string(kind) + ".csv"));
      }
      write_collusive_price_check(base_statics, alt ? alt->statics : StaticTable(alt_env, cfg.solver.caps), env,
                                  outputs.file("collusive_prices_" + to_string(kind) + ".csv"));
      for (const auto& r : change.rows)
        out << r.window << ": CS " << r.cs << ", PS " << r.ps << ", SW " << r.sw << " (proportional change)\n";
    }
  }
  outputs.commit(manifest);
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Liner shipping cartel model: static market, dynamic game, estimation and counterfactuals", "liner"};
  app.require_subcommand(1, 1);
  Flags fl;
  const std::vector<std::pair<const char*, const char*>> commands{
      {"estimate-static", "2SLS demand and supply estimation from route-year data"},
      {"solve", "Solve the dynamic game by backward induction and write CCPs"},
      {"estimate-dynamic", "Nested fixed point MLE of the dynamic parameters"},
      {"ci", "Likelihood-ratio confidence intervals at the configured parameters"},
      {"simulate", "Simulate an ensemble of equilibrium paths"},
      {"counterfactual", "Compare a scenario against the baseline"},
      {"welfare", "Discounted welfare by regime under the baseline"},
      {"synth", "Generate a synthetic panel in the input CSV schemas"}};
  for (const auto& [name, desc] : commands) {
    auto* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", fl.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--market", fl.market, "asia-europe, transpacific or transatlantic");
    sub->add_option("--scenario", fl.scenario, "baseline, no-cartel, omega1 or omega2")
        ->check(CLI::IsMember({"baseline", "no-cartel", "omega1", "omega2"}));
    sub->add_option("--seed", fl.seed, "base seed")->each([&](const std::string&) { fl.seed_given = true; });
    sub->add_option("--n-sims", fl.n_sims, "number of simulated paths")->check(CLI::PositiveNumber);
    sub->add_option("--out-dir", fl.out_dir, "output directory");
  }
  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return 1;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return dispatch(cmd, fl, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace liner
