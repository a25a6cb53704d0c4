#include "liner/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "liner/errors.hpp"

namespace liner {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

double parse_double(const std::string& s, const char* column, long row) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty() || !std::isfinite(v))
    throw LoadError(std::string("non-numeric ") + column + " '" + s + "'", row);
  return v;
}

int parse_int(const std::string& s, const char* column, long row) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw LoadError(std::string("malformed ") + column + " '" + s + "'", row);
  return v;
}

// Reads the header and yields (row number, cells) for each non-empty data line.
template <class F>
void read_rows(std::istream& in, const char* header, std::size_t n_cols, F&& on_row) {
  std::string line;
  if (!std::getline(in, line)) throw LoadError("missing header; expected '" + std::string(header) + "'", -1);
  strip_cr(line);
  if (line != header) throw LoadError("header mismatch: expected '" + std::string(header) + "', got '" + line + "'", -1);
  long row = 0;
  while (std::getline(in, line)) {
    strip_cr(line);
    ++row;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != n_cols)
      throw LoadError("expected " + std::to_string(n_cols) + " columns, got " + std::to_string(cells.size()), row);
    on_row(row, cells);
  }
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw LoadError("cannot open '" + path + "'", -1);
  return f;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  return f;
}

}  // namespace

std::vector<RouteYearRecord> read_route_year_csv(std::istream& in) {
  std::vector<RouteYearRecord> out;
  read_rows(in, kRouteYearHeader, 10, [&](long row, const std::vector<std::string>& c) {
    RouteYearRecord r;
    r.market = c[0];
    r.route = c[1];
    if (r.market.empty() || r.route.empty()) throw LoadError("empty market or route", row);
    r.year = parse_int(c[2], "year", row);
    r.price = parse_double(c[3], "price", row);
    r.quantity = parse_double(c[4], "quantity", row);
    r.total_tonnage = parse_double(c[5], "total_tonnage", row);
    r.log_gdp = parse_double(c[6], "log_gdp", row);
    r.avg_ship_age = parse_double(c[7], "avg_ship_age", row);
    r.share_old_ships = parse_double(c[8], "share_old_ships", row);
    r.avg_ship_size = parse_double(c[9], "avg_ship_size", row);
    if (!(r.price > 0.0)) throw LoadError("price must be positive", row);
    if (!(r.quantity > 0.0)) throw LoadError("quantity must be positive", row);
    if (!(r.total_tonnage > 0.0)) throw LoadError("total_tonnage must be positive", row);
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<FirmRecord> read_firm_csv(std::istream& in) {
  std::vector<FirmRecord> out;
  read_rows(in, kFirmHeader, 5, [&](long row, const std::vector<std::string>& c) {
    FirmRecord r;
    r.firm_id = c[0];
    r.market = c[1];
    if (r.firm_id.empty() || r.market.empty()) throw LoadError("empty firm_id or market", row);
    r.year = parse_int(c[2], "year", row);
    r.tonnage = parse_double(c[3], "tonnage", row);
    if (r.tonnage < 0.0) throw LoadError("negative tonnage", row);
    if (c[4].size() != 1 || std::string("xkbe").find(c[4][0]) == std::string::npos)
      throw LoadError("invalid action '" + c[4] + "' (expected x, k, b or e)", row);
    r.action = c[4][0];
    if (r.is_potential_entrant() && (r.action == 'k' || r.action == 'b'))
      throw LoadError("potential entrant (tonnage 0) with incumbent action '" + c[4] + "'", row);
    if (!r.is_potential_entrant() && r.action == 'e')
      throw LoadError("incumbent (positive tonnage) with entry action 'e'", row);
    out.push_back(std::move(r));
  });
  return out;
}

std::vector<RouteYearRecord> load_route_year_csv(const std::string& path) {
  auto f = open_in(path);
  return read_route_year_csv(f);
}

std::vector<FirmRecord> load_firm_csv(const std::string& path) {
  auto f = open_in(path);
  return read_firm_csv(f);
}

void write_route_year_csv(const std::vector<RouteYearRecord>& rows, std::ostream& out) {
  out << kRouteYearHeader << '\n';
  for (const auto& r : rows)
    out << r.market << ',' << r.route << ',' << r.year << ',' << fmt(r.price) << ',' << fmt(r.quantity) << ','
        << fmt(r.total_tonnage) << ',' << fmt(r.log_gdp) << ',' << fmt(r.avg_ship_age) << ','
        << fmt(r.share_old_ships) << ',' << fmt(r.avg_ship_size) << '\n';
}

void write_firm_csv(const std::vector<FirmRecord>& rows, std::ostream& out) {
  out << kFirmHeader << '\n';
  for (const auto& r : rows)
    out << r.firm_id << ',' << r.market << ',' << r.year << ',' << fmt(r.tonnage) << ',' << r.action << '\n';
}

void save_route_year_csv(const std::vector<RouteYearRecord>& rows, const std::string& path) {
  auto f = open_out(path);
  write_route_year_csv(rows, f);
}

void save_firm_csv(const std::vector<FirmRecord>& rows, const std::string& path) {
  auto f = open_out(path);
  write_firm_csv(rows, f);
}

ObservedTallies derive_tallies(const std::vector<FirmRecord>& firms, const TallyOptions& opt) {
  std::map<std::pair<std::string, int>, Observation> by_key;
  for (const auto& f : firms) {
    const int t = f.year - opt.first_year + 1;
    if (t < 1 || t >= opt.horizon) continue;  // no decision recorded outside 1..T-1
    auto& o = by_key[{f.market, f.year}];
    o.market = f.market;
    o.year = f.year;
    o.t = t;
    if (f.is_potential_entrant()) {
      (f.action == 'e' ? o.tally.entries : o.tally.entrant_quits)++;
      continue;
    }
    const int l = discretize_tonnage(f.tonnage, opt.cutoffs);
    o.state.n[l - 1] += 1;
    if (f.action == 'x') ++o.tally.exits[l - 1];
    else if (f.action == 'b') ++o.tally.builds[l - 1];
  }
  ObservedTallies out;
  out.reserve(by_key.size());
  for (auto& [k, o] : by_key) out.push_back(std::move(o));
  return out;
}

std::vector<SimulatedPath> observed_paths(const ObservedTallies& tallies, const MarketEnvironment& env) {
  std::map<std::string, std::map<int, const Observation*>> by_market;
  for (const auto& o : tallies) by_market[o.market][o.t] = &o;
  const Caps uncapped{1 << 20, 1 << 20, 1 << 20, 1 << 20};
  std::vector<SimulatedPath> out;
  for (const auto& [market, obs] : by_market) {
    SimulatedPath path;
    for (int t = 1; t <= env.horizon; ++t) {
      SimulatedYear y;
      y.t = t;
      y.year = env.year(t);
      if (const auto it = obs.find(t); it != obs.end()) {
        y.state = it->second->state;
        y.tally = it->second->tally;
      } else if (const auto prev = obs.find(t - 1); prev != obs.end() && t == env.horizon) {
        y.state = apply_transition(prev->second->state, prev->second->tally, uncapped);
      }
      const auto st = state_statics(env, t, y.state);
      y.price = st.price;
      y.quantity = st.quantity;
      y.producer_surplus = st.producer_surplus;
      path.years.push_back(std::move(y));
    }
    out.push_back(std::move(path));
  }
  return out;
}

bool market_matches(const std::string& market, const std::string& name) {
  return market == name || (market.size() > name.size() && market.compare(0, name.size(), name) == 0 &&
                            market[name.size()] == '-');
}

SyntheticPanel generate_synthetic_panel(const SyntheticSpec& spec) {
  if (spec.n_markets < 1) throw ConfigError("synthetic panel: n_markets must be at least 1");
  for (int l = 1; l <= kLevels; ++l)
    if (discretize_tonnage(std::exp(spec.log_tonnage[l - 1])) != l)
      throw ConfigError("synthetic panel: log tonnage for level " + std::to_string(l) + " falls in another level");
  spec.env.validate();
  const StaticTable statics(spec.env, spec.solver.caps);
  const PolicySolution policy = backward_induction(profit_table(statics), spec.theta, spec.solver);
  const int T = spec.env.horizon;
  const Caps& caps = spec.solver.caps;

  SyntheticPanel panel;
  SplitMix64 init_rng(spec.seed);
  for (int m = 0; m < spec.n_markets; ++m) {
    char name[64];
    std::snprintf(name, sizeof name, "%s-%02d", to_string(spec.env.market).c_str(), m + 1);
    IndustryState s0;
    for (int l = 0; l < kLevels; ++l)
      s0.n[l] = std::min(static_cast<int>(init_rng.uniform() * (caps[l] + 1)), caps[l]);
    auto path = simulate_path(policy, s0, T, spec.seed + 1 + static_cast<std::uint64_t>(m), &statics,
                              spec.env.first_year);

    // Firm identities: ids per level, oldest first. Within a level the first
    // firms exit, the next ones build, the rest keep.
    std::array<std::vector<std::string>, kLevels> ids;
    int next_id = 0;
    const auto new_id = [&] {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s-f%03d", name, ++next_id);
      return std::string(buf);
    };
    for (int l = 0; l < kLevels; ++l)
      for (int i = 0; i < s0.n[l]; ++i) ids[l].push_back(new_id());

    // Synthetic covariates: log GDP consistent with the demand-state trend, fleet
    // characteristics from the state plus noise.
    SplitMix64 cov_rng(spec.seed ^ (0x5851f42d4c957f2dULL * static_cast<std::uint64_t>(m + 1)));
    for (const auto& y : path.years) {
      double S = 0.0;
      for (int l = 1; l <= kLevels; ++l) S += y.state.count(l) * spec.env.tonnage.tonnage(l);
      const double age = 8.0 + 6.0 * cov_rng.uniform();
      const double old_share = 0.05 + 0.25 * cov_rng.uniform();
      if (y.state.total() > 0)
        for (std::size_t r = 0; r < spec.env.routes.size(); ++r)
          panel.routes.push_back({name, spec.env.routes[r].name, y.year, y.price[r], y.quantity[r], S,
                                  28.0 + 0.03 * (y.year - 1973), age, old_share, S / y.state.total()});

      if (y.t >= T) continue;
      panel.tallies.push_back({name, y.year, y.t, y.state, y.tally});
      std::array<std::vector<std::string>, kLevels> next_ids;
      std::vector<std::string> builders_into[kLevels];
      for (int l = 0; l < kLevels; ++l) {
        const double ton = std::exp(spec.log_tonnage[l]);
        const int ex = y.tally.exits[l], b = y.tally.builds[l];
        for (int i = 0; i < static_cast<int>(ids[l].size()); ++i) {
          const char a = i < ex ? 'x' : (i < ex + b ? 'b' : 'k');
          panel.firms.push_back({ids[l][i], name, y.year, ton, a});
          if (a == 'k' || (a == 'b' && l == kLevels - 1)) next_ids[l].push_back(ids[l][i]);
          if (a == 'b' && l < kLevels - 1) builders_into[l + 1].push_back(ids[l][i]);
        }
      }
      for (int i = 0; i < y.tally.entries + y.tally.entrant_quits; ++i) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%s-pe%d-%d", name, y.year, i + 1);
        const bool enters = i < y.tally.entries;
        panel.firms.push_back({buf, name, y.year, 0.0, enters ? 'e' : 'x'});
        if (enters) builders_into[0].push_back(new_id());
      }
      // Incoming firms queue behind the stayers; anything beyond the cap is dropped,
      // matching the clamp in apply_transition.
      for (int l = 0; l < kLevels; ++l) {
        for (auto& id : builders_into[l]) next_ids[l].push_back(std::move(id));
        if (static_cast<int>(next_ids[l].size()) > caps[l]) next_ids[l].resize(caps[l]);
        ids[l] = std::move(next_ids[l]);
      }
    }
    panel.paths.push_back(std::move(path));
  }
  std::stable_sort(panel.tallies.begin(), panel.tallies.end(),
                   [](const Observation& a, const Observation& b) { return std::tie(a.market, a.year) < std::tie(b.market, b.year); });
  return panel;
}

}  // namespace liner
