#include "liner/dynamic_game.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "liner/errors.hpp"
#include "liner/logit.hpp"

namespace liner {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMinStep = 1.0 / 1024.0;

ChoiceRow uniform_row(Actor a, TopBuildMode mode) {
  if (is_entrant(a)) return {0.5, 0.5, 0.0};
  if (a == Actor::L4 && mode == TopBuildMode::Exclude) return {0.5, 0.5, 0.0};
  return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
}

LevelCcps to_level_ccps(const std::array<ChoiceRow, kActors>& rows) {
  LevelCcps c;
  for (int l = 0; l < kLevels; ++l) c.incumbent[l] = rows[l];
  c.entrant = rows[4];
  return c;
}

constexpr std::array<Actor, kActors> kSweepOrder{Actor::L4, Actor::L3, Actor::L2, Actor::L1, Actor::Entrant};

}  // namespace

void DynamicParams::validate() const {
  for (double c : {exit_cost, operation_cost, entry_cost, invest_cost_low, invest_cost_high})
    if (!std::isfinite(c)) throw DomainError("DynamicParams: costs must be finite");
  if (!(logit_scale > 0.0) || !std::isfinite(logit_scale)) throw DomainError("DynamicParams: sigma must be positive");
  if (!(discount >= 0.0 && discount < 1.0)) throw DomainError("DynamicParams: beta must lie in [0, 1)");
}

std::string to_string(Actor a) {
  switch (a) {
    case Actor::L1: return "L1";
    case Actor::L2: return "L2";
    case Actor::L3: return "L3";
    case Actor::L4: return "L4";
    case Actor::Entrant: return "PE";
  }
  return "?";
}

int action_count(Actor a) { return is_entrant(a) ? 2 : 3; }

char action_code(Actor a, int action) {
  if (is_entrant(a)) {
    if (action == kQuit) return 'x';
    if (action == kEnter) return 'e';
  } else {
    if (action == kExit) return 'x';
    if (action == kKeep) return 'k';
    if (action == kBuild) return 'b';
  }
  throw DomainError("invalid action for " + to_string(a));
}

ProfitTable::ProfitTable(int horizon, Caps caps) : horizon_(horizon), space_(caps) {
  if (horizon < 1) throw DomainError("ProfitTable: horizon must be at least 1");
  data_.assign(static_cast<std::size_t>(horizon) * space_.size() * kLevels, 0.0);
}

void ProfitTable::add(double delta) {
  for (double& v : data_) v += delta;
}

double per_period_cost(Actor actor, int action, const DynamicParams& p) {
  if (is_entrant(actor)) {
    if (action == kQuit) return 0.0;
    if (action == kEnter) return p.entry_cost;
    throw DomainError("per_period_cost: invalid entrant action");
  }
  switch (action) {
    case kExit: return p.exit_cost;
    case kKeep: return p.operation_cost;
    case kBuild: {
      const int l = level_of(actor);
      if (l == 4) return p.operation_cost;
      return p.operation_cost + (l <= 2 ? p.invest_cost_low : p.invest_cost_high);
    }
    default: throw DomainError("per_period_cost: invalid incumbent action");
  }
}

double terminal_value(double profit, double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) throw DomainError("terminal_value: beta must lie in [0, 1)");
  return profit / (1.0 - beta);
}

double csvf(Actor actor, int action, double continuation, const DynamicParams& p, TopBuildMode mode) {
  if (is_entrant(actor)) {
    if (action == kQuit) return 0.0;
    if (action == kEnter) return -p.entry_cost + p.discount * continuation;
    throw DomainError("csvf: invalid entrant action");
  }
  if (action == kExit) return -p.exit_cost;
  if (action == kBuild && actor == Actor::L4) return mode == TopBuildMode::Exclude ? kNegInf : 0.0;
  if (action == kKeep || action == kBuild) return -per_period_cost(actor, action, p) + p.discount * continuation;
  throw DomainError("csvf: invalid incumbent action");
}

ContinuationValues::ContinuationValues(const StateSpace& space, std::vector<double> values)
    : values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(space.size()) * kLevels)
    throw PreconditionError("ContinuationValues: value table has the wrong size");
  const Caps& cap = space.caps();
  for (int l = 1; l <= kLevels; ++l) {
    auto& land = landing_[l - 1];
    land.assign(space.size(), 0.0);
    if (cap[l - 1] < 1) continue;
    for (int j = 0; j < space.size(); ++j) {
      IndustryState s = space.state(j);
      s.n[l - 1] = std::min(s.n[l - 1] + 1, cap[l - 1]);
      land[j] = value(space.index(s), l);
    }
  }
}

int next_level(Actor actor, int action) {
  if (is_entrant(actor)) return action == kEnter ? 1 : 0;
  const int l = level_of(actor);
  if (action == kKeep) return l;
  if (action == kBuild) return std::min(l + 1, kLevels);
  return 0;
}

double expected_continuation(std::span<const double> kernel, std::span<const double> landing_values) {
  if (kernel.size() != landing_values.size()) throw PreconditionError("expected_continuation: size mismatch");
  double ev = 0.0;
  for (std::size_t j = 0; j < kernel.size(); ++j) ev += kernel[j] * landing_values[j];
  return ev;
}

namespace {

IndustryState rivals_of(Actor a, const IndustryState& s) {
  IndustryState r = s;
  if (!is_entrant(a)) r.n[level_of(a) - 1] -= 1;
  return r;
}

// EV of keep/build (incumbents) or enter (entrants), sharing one pass over the rivals' kernel.
ChoiceRow actor_continuations(const StateSpace& space, Actor a, const IndustryState& state,
                              const ContinuationValues& next, const LevelCcps& ccps, int n_entrants,
                              KernelWorkspace& ws) {
  const IndustryState rivals = rivals_of(a, state);
  const int ne = is_entrant(a) ? n_entrants - 1 : n_entrants;
  ChoiceRow ev{0.0, 0.0, 0.0};
  if (is_entrant(a)) {
    const double* land = next.landing(1).data();
    double e = 0.0;
    for_each_next_state(space, rivals, ne, ccps, ws, [&](int j, double p) { e += p * land[j]; });
    ev[kEnter] = e;
    return ev;
  }
  const int l = level_of(a);
  const double* keep = next.landing(l).data();
  if (l == kLevels) {
    double k = 0.0;
    for_each_next_state(space, rivals, ne, ccps, ws, [&](int j, double p) { k += p * keep[j]; });
    ev[kKeep] = k;
    return ev;
  }
  const double* build = next.landing(l + 1).data();
  double k = 0.0, b = 0.0;
  for_each_next_state(space, rivals, ne, ccps, ws, [&](int j, double p) {
    k += p * keep[j];
    b += p * build[j];
  });
  ev[kKeep] = k;
  ev[kBuild] = b;
  return ev;
}

struct ActorUpdate {
  ChoiceRow ev{};
  ChoiceRow v{};
  ChoiceRow p{};
};

ActorUpdate evaluate_actor(const StateSpace& space, Actor a, const IndustryState& state, const ContinuationValues& next,
                           const DynamicParams& params, const SolverOptions& opt, const LevelCcps& ccps,
                           KernelWorkspace& ws) {
  ActorUpdate u;
  u.ev = actor_continuations(space, a, state, next, ccps, opt.n_entrants, ws);
  const int na = action_count(a);
  for (int k = 0; k < na; ++k) u.v[k] = csvf(a, k, u.ev[k], params, opt.top_build);
  const auto p = ccp_from_csvf(std::span<const double>(u.v.data(), na), params.logit_scale);
  for (int k = 0; k < na; ++k) u.p[k] = p[k];
  return u;
}

double row_gap(const ChoiceRow& a, const ChoiceRow& b) {
  return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
}

}  // namespace

double expected_continuation(const StateSpace& space, Actor actor, int action, const IndustryState& state,
                             const ContinuationValues& next, const LevelCcps& ccps, int n_entrants,
                             KernelWorkspace& ws) {
  if (!actor_present(actor, state, n_entrants))
    throw PreconditionError("expected_continuation: actor " + to_string(actor) + " absent at " + to_string(state));
  const int lvl = next_level(actor, action);
  if (lvl == 0) return 0.0;
  const IndustryState rivals = rivals_of(actor, state);
  const int ne = is_entrant(actor) ? n_entrants - 1 : n_entrants;
  const double* land = next.landing(lvl).data();
  double ev = 0.0;
  for_each_next_state(space, rivals, ne, ccps, ws, [&](int j, double p) { ev += p * land[j]; });
  return ev;
}

bool actor_present(Actor a, const IndustryState& s, int n_entrants) {
  return is_entrant(a) ? n_entrants > 0 : s.count(level_of(a)) > 0;
}

namespace {

struct SweepResult {
  double gap = 0.0;
  std::array<ChoiceRow, kActors> p{}, ev{}, v{};
};

// One pass L4 -> L1 -> entrants. Each row moves `step` of the way to its new
// response before the next actor is evaluated; step 0 leaves `rows` unchanged.
SweepResult sweep(const StateSpace& space, const IndustryState& state, const ContinuationValues& next,
                  const DynamicParams& params, const SolverOptions& opt, std::array<ChoiceRow, kActors>& rows,
                  double step, KernelWorkspace& ws) {
  SweepResult r;
  for (Actor a : kSweepOrder) {
    if (!actor_present(a, state, opt.n_entrants)) continue;
    const int i = static_cast<int>(a);
    const auto u = evaluate_actor(space, a, state, next, params, opt, to_level_ccps(rows), ws);
    r.gap += row_gap(u.p, rows[i]);
    for (int k = 0; k < 3; ++k) rows[i][k] += step * (u.p[k] - rows[i][k]);
    r.p[i] = u.p;
    r.ev[i] = u.ev;
    r.v[i] = u.v;
  }
  return r;
}

// Simultaneous-response residual in log-odds coordinates, for the Newton fallback.
// Each present row is parametrized by log(p_a / p_ref) with ref = keep (incumbents)
// or quit (entrants), so every point is an interior CCP and no bounds are needed.
class ReducedSystem {
 public:
  ReducedSystem(const StateSpace& space, const IndustryState& state, const ContinuationValues& next,
                const DynamicParams& params, const SolverOptions& opt, KernelWorkspace& ws)
      : space_(space), state_(state), next_(next), params_(params), opt_(opt), ws_(ws) {
    for (int a = 0; a < kActors; ++a) {
      const Actor actor = static_cast<Actor>(a);
      if (!actor_present(actor, state, opt.n_entrants)) continue;
      if (is_entrant(actor)) {
        coords_.push_back({a, kEnter});
        ref_[a] = kQuit;
      } else {
        coords_.push_back({a, kExit});
        if (!(actor == Actor::L4 && opt.top_build == TopBuildMode::Exclude)) coords_.push_back({a, kBuild});
        ref_[a] = kKeep;
      }
    }
  }

  int size() const { return static_cast<int>(coords_.size()); }

  Eigen::VectorXd pack(const std::array<ChoiceRow, kActors>& rows) const {
    constexpr double tiny = 1e-300;
    Eigen::VectorXd y(size());
    for (int j = 0; j < size(); ++j) {
      const auto [a, k] = coords_[j];
      y[j] = std::log(std::max(rows[a][k], tiny)) - std::log(std::max(rows[a][ref_[a]], tiny));
    }
    return y;
  }

  void unpack(const Eigen::VectorXd& y, std::array<ChoiceRow, kActors>& rows) const {
    std::array<double, kActors> top{};
    for (int a = 0; a < kActors; ++a) top[a] = 0.0;  // log-odds of the reference action
    for (int j = 0; j < size(); ++j) top[coords_[j].first] = std::max(top[coords_[j].first], y[j]);
    for (int a = 0; a < kActors; ++a)
      if (ref_[a] >= 0) {
        rows[a] = {0.0, 0.0, 0.0};
        rows[a][ref_[a]] = std::exp(-top[a]);
      }
    for (int j = 0; j < size(); ++j) rows[coords_[j].first][coords_[j].second] = std::exp(y[j] - top[coords_[j].first]);
    for (int a = 0; a < kActors; ++a)
      if (ref_[a] >= 0) {
        const double z = rows[a][0] + rows[a][1] + rows[a][2];
        for (double& x : rows[a]) x /= z;
      }
  }

  // Residual in log-odds; *gap receives the summed probability gap.
  Eigen::VectorXd residual(const Eigen::VectorXd& y, double* gap) const {
    std::array<ChoiceRow, kActors> rows{};
    unpack(y, rows);
    const LevelCcps c = to_level_ccps(rows);
    std::array<ActorUpdate, kActors> br{};
    double g = 0.0;
    for (int a = 0; a < kActors; ++a) {
      if (ref_[a] < 0) continue;
      br[a] = evaluate_actor(space_, static_cast<Actor>(a), state_, next_, params_, opt_, c, ws_);
      g += row_gap(br[a].p, rows[a]);
    }
    if (gap) *gap = g;
    Eigen::VectorXd f(size());
    for (int j = 0; j < size(); ++j) {
      const auto [a, k] = coords_[j];
      f[j] = (br[a].v[k] - br[a].v[ref_[a]]) / params_.logit_scale - y[j];
    }
    return f;
  }

 private:
  const StateSpace& space_;
  const IndustryState& state_;
  const ContinuationValues& next_;
  const DynamicParams& params_;
  const SolverOptions& opt_;
  KernelWorkspace& ws_;
  std::vector<std::pair<int, int>> coords_;
  std::array<int, kActors> ref_{-1, -1, -1, -1, -1};
};

// Damped Newton on the log-odds residual with a forward-difference Jacobian and backtracking.
// Returns true and overwrites `rows` when the probability gap falls below tol.
bool newton_fixed_point(const ReducedSystem& sys, std::array<ChoiceRow, kActors>& rows, double tol, int max_steps,
                        int& steps) {
  const int m = sys.size();
  if (m == 0) return true;
  Eigen::VectorXd y = sys.pack(rows);
  double gap = 0.0;
  Eigen::VectorXd f = sys.residual(y, &gap);
  Eigen::MatrixXd J(m, m);
  bool ok = false;
  for (int it = 0; it < max_steps; ++it) {
    ++steps;
    if (gap < tol) {
      ok = true;
      break;
    }
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd yh = y;
      const double h = 1e-6 * std::max(1.0, std::abs(y[j]));
      yh[j] += h;
      J.col(j) = (sys.residual(yh, nullptr) - f) / h;
    }
    const Eigen::VectorXd dy = J.colPivHouseholderQr().solve(-f);
    if (!dy.allFinite()) break;
    const double norm0 = f.squaredNorm();
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      const Eigen::VectorXd yt = y + t * dy;
      double g = 0.0;
      const Eigen::VectorXd ft = sys.residual(yt, &g);
      if (ft.allFinite() && ft.squaredNorm() < (1.0 - 1e-4 * t) * norm0) {
        y = yt;
        f = ft;
        gap = g;
        moved = true;
        break;
      }
    }
    if (!moved) {
      ok = gap < tol;
      break;
    }
  }
  if (gap < tol) ok = true;
  if (ok) sys.unpack(y, rows);
  return ok;
}

constexpr int kMidpointSweeps = 200;
constexpr int kNewtonSteps = 60;

}  // namespace

StateSolution solve_state_fixed_point(const StateSpace& space, const IndustryState& state,
                                      const ContinuationValues& next, const DynamicParams& params,
                                      const SolverOptions& opt, const LevelCcps& warm_start, KernelWorkspace& ws) {
  StateSolution sol;
  auto& rows = sol.iterate;
  for (int l = 0; l < kLevels; ++l) rows[l] = warm_start.incumbent[l];
  rows[4] = warm_start.entrant;
  for (int a = 0; a < kActors; ++a)
    if (!actor_present(static_cast<Actor>(a), state, opt.n_entrants))
      rows[a] = uniform_row(static_cast<Actor>(a), opt.top_build);
  if (opt.top_build == TopBuildMode::Exclude) rows[3] = {rows[3][0] / (rows[3][0] + rows[3][1]), rows[3][1] / (rows[3][0] + rows[3][1]), 0.0};

  auto finish = [&](const SweepResult& r) {
    sol.gap = r.gap;
    for (int a = 0; a < kActors; ++a) {
      if (actor_present(static_cast<Actor>(a), state, opt.n_entrants)) {
        sol.ccp[a] = r.p[a];
        sol.ev[a] = r.ev[a];
        sol.csvf[a] = r.v[a];
      } else {
        sol.ccp[a] = rows[a];
      }
    }
  };

  // Initialization pass: rows become the responses to the warm start.
  sweep(space, state, next, params, opt, rows, 1.0, ws);
  sol.sweeps = 1;

  // Midpoint updates, as in the reference algorithm.
  const int midpoint_budget = std::min(opt.max_iters, kMidpointSweeps);
  while (sol.sweeps < midpoint_budget) {
    const auto r = sweep(space, state, next, params, opt, rows, 0.5, ws);
    ++sol.sweeps;
    if (r.gap < opt.tolerance) {
      finish(r);
      return sol;
    }
  }

  // Steep responses (small sigma, large value gaps) can make the midpoint rule cycle.
  const ReducedSystem sys(space, state, next, params, opt, ws);
  auto trial = rows;
  int steps = 0;
  if (newton_fixed_point(sys, trial, 0.1 * opt.tolerance, kNewtonSteps, steps)) {
    rows = trial;
    sol.sweeps += steps;
    auto probe = rows;
    const auto r = sweep(space, state, next, params, opt, probe, 0.0, ws);
    ++sol.sweeps;
    if (r.gap < opt.tolerance) {
      finish(r);
      return sol;
    }
  } else {
    sol.sweeps += steps;
  }

  // Last resort: shrink the step whenever the gap grows.
  double step = 0.25;
  double prev = std::numeric_limits<double>::infinity();
  while (sol.sweeps < opt.max_iters) {
    const auto r = sweep(space, state, next, params, opt, rows, step, ws);
    ++sol.sweeps;
    if (r.gap < opt.tolerance) {
      finish(r);
      return sol;
    }
    if (r.gap > prev) step = std::max(0.5 * step, kMinStep);
    prev = r.gap;
    sol.gap = r.gap;
  }
  throw SolverError("CCP fixed point at " + to_string(state) + " did not converge; last gap " +
                    std::to_string(sol.gap));
}

double fixed_point_residual(const StateSpace& space, const IndustryState& state, const ContinuationValues& next,
                            const DynamicParams& params, const SolverOptions& opt, const StateSolution& current) {
  auto rows = current.iterate;
  const auto before = rows;
  KernelWorkspace ws;
  sweep(space, state, next, params, opt, rows, 0.5, ws);
  double worst = 0.0;
  for (int a = 0; a < kActors; ++a) worst = std::max(worst, row_gap(rows[a], before[a]));
  return worst;
}

PolicySolution::PolicySolution(int horizon, Caps caps, int n_entrants)
    : horizon_(horizon), n_entrants_(n_entrants), space_(caps) {
  const std::size_t n = static_cast<std::size_t>(horizon) * space_.size() * kActors;
  ccp_.assign(n, ChoiceRow{0.0, 0.0, 0.0});
  ev_.assign(n, ChoiceRow{0.0, 0.0, 0.0});
  value_.assign(n, 0.0);
}

LevelCcps PolicySolution::level_ccps(int t, int state) const {
  LevelCcps c;
  for (int l = 1; l <= kLevels; ++l) c.incumbent[l - 1] = ccp(t, state, incumbent(l));
  c.entrant = ccp(t, state, Actor::Entrant);
  return c;
}

namespace {

void check_solver_inputs(const ProfitTable& profits, const DynamicParams& params, const SolverOptions& opt) {
  params.validate();
  if (opt.n_entrants < 0) throw DomainError("backward_induction: negative number of potential entrants");
  if (!(opt.tolerance > 0.0) || opt.max_iters < 2) throw DomainError("backward_induction: invalid solver options");
  if (profits.space().caps() != opt.caps) throw PreconditionError("backward_induction: profit table caps differ from solver caps");
}

}  // namespace

void solve_period_fixed_point(int t, const ProfitTable& profits, const DynamicParams& params, const SolverOptions& opt,
                              PolicySolution& sol) {
  if (t < 1 || t >= sol.horizon()) throw DomainError("solve_period_fixed_point: t must lie in 1..T-1");
  const StateSpace& space = sol.space();
  const int S = space.size();
  std::vector<double> next_values(static_cast<std::size_t>(S) * kLevels);
  for (int s = 0; s < S; ++s)
    for (int l = 1; l <= kLevels; ++l) next_values[s * kLevels + l - 1] = sol.value(t + 1, s, incumbent(l));
  const ContinuationValues next(space, next_values);

  KernelWorkspace ws;
  for (int s = 0; s < S; ++s) {
    const IndustryState st = space.state(s);
    const LevelCcps warm = sol.level_ccps(t + 1, s);
    const StateSolution fp = solve_state_fixed_point(space, st, next, params, opt, warm, ws);
    sol.total_sweeps += fp.sweeps;
    for (int a = 0; a < kActors; ++a) {
      const Actor actor = static_cast<Actor>(a);
      if (!actor_present(actor, st, opt.n_entrants)) {
        sol.ccp(t, s, actor) = uniform_row(actor, opt.top_build);
        continue;
      }
      sol.ccp(t, s, actor) = fp.ccp[a];
      sol.ev(t, s, actor) = fp.ev[a];
      const int na = action_count(actor);
      const double iv = integrated_value(std::span<const double>(fp.csvf[a].data(), na), params.logit_scale);
      sol.value(t, s, actor) = is_entrant(actor) ? iv : profits.at(t, s, level_of(actor)) + iv;
      if (!std::isfinite(sol.value(t, s, actor)))
        throw SolverError("non-finite value at t=" + std::to_string(t) + ", state " + to_string(st));
    }
  }
}

PolicySolution backward_induction(const ProfitTable& profits, const DynamicParams& params, const SolverOptions& opt) {
  check_solver_inputs(profits, params, opt);
  const int T = profits.horizon();
  PolicySolution sol(T, opt.caps, opt.n_entrants);
  const StateSpace& space = sol.space();
  for (int s = 0; s < space.size(); ++s) {
    const IndustryState st = space.state(s);
    for (int a = 0; a < kActors; ++a) sol.ccp(T, s, static_cast<Actor>(a)) = uniform_row(static_cast<Actor>(a), opt.top_build);
    for (int l = 1; l <= kLevels; ++l)
      if (st.count(l) > 0) sol.value(T, s, incumbent(l)) = terminal_value(profits.at(T, s, l), params.discount);
  }
  for (int t = T - 1; t >= 1; --t) solve_period_fixed_point(t, profits, params, opt, sol);
  return sol;
}

void write_policy_csv(const PolicySolution& policy, std::ostream& out) {
  out << "t,state_index,n1,n2,n3,n4,actor,action,ccp,value\n";
  char buf[64];
  const auto& space = policy.space();
  for (int t = 1; t < policy.horizon(); ++t)
    for (int s = 0; s < space.size(); ++s) {
      const IndustryState st = space.state(s);
      for (int a = 0; a < kActors; ++a) {
        const Actor actor = static_cast<Actor>(a);
        if (!actor_present(actor, st, policy.n_entrants())) continue;
        for (int k = 0; k < action_count(actor); ++k) {
          out << t << ',' << s << ',' << st.n[0] << ',' << st.n[1] << ',' << st.n[2] << ',' << st.n[3] << ','
              << to_string(actor) << ',' << action_code(actor, k) << ',';
          std::snprintf(buf, sizeof buf, "%.17g", policy.ccp(t, s, actor)[k]);
          out << buf << ',';
          std::snprintf(buf, sizeof buf, "%.17g", policy.value(t, s, actor));
          out << buf << '\n';
        }
      }
    }
}

}  // namespace liner
