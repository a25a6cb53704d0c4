#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "liner/dynamic_game.hpp"
#include "liner/errors.hpp"
#include "oracles.hpp"
#include "solver_vs_oracle.hpp"

using namespace liner;
using namespace liner::testing;
using doctest::Approx;

namespace {

const DynamicParams kTranspacific{0.200, 0.103, 0.055, 0.152, 0.162, 0.101, 0.9};
constexpr double kEuler = 0.5772156649015329;

}  // namespace

TEST_CASE("per-period costs") {
  CHECK(per_period_cost(Actor::L1, kBuild, kTranspacific) == Approx(0.255));
  CHECK(per_period_cost(Actor::L2, kBuild, kTranspacific) == Approx(0.255));
  CHECK(per_period_cost(Actor::L3, kBuild, kTranspacific) == Approx(0.103 + 0.162));
  CHECK(per_period_cost(Actor::Entrant, kQuit, kTranspacific) == 0.0);
  CHECK(per_period_cost(Actor::Entrant, kEnter, kTranspacific) == 0.055);
  CHECK(per_period_cost(Actor::L4, kExit, kTranspacific) == 0.200);
  CHECK(per_period_cost(Actor::L2, kKeep, kTranspacific) == 0.103);
  CHECK_THROWS_AS(per_period_cost(Actor::Entrant, 2, kTranspacific), DomainError);
  CHECK_THROWS_AS(per_period_cost(Actor::L1, 3, kTranspacific), DomainError);
}

TEST_CASE("terminal value") {
  CHECK(terminal_value(1.0, 0.9) == Approx(10.0));
  CHECK(terminal_value(0.0, 0.9) == 0.0);
  CHECK(terminal_value(0.05, 0.96) == Approx(1.25));
  CHECK_THROWS_AS(terminal_value(1.0, 1.0), DomainError);
}

TEST_CASE("choice-specific values") {
  for (double ev : {-3.0, 0.0, 7.5}) CHECK(csvf(Actor::L2, kExit, ev, kTranspacific) == -0.200);
  CHECK(csvf(Actor::L4, kBuild, 123.0, kTranspacific) == 0.0);
  CHECK(csvf(Actor::L4, kBuild, 123.0, kTranspacific, TopBuildMode::Exclude) == -std::numeric_limits<double>::infinity());
  CHECK(csvf(Actor::L1, kKeep, 2.0, kTranspacific) == Approx(-0.103 + 0.9 * 2.0));
  CHECK(csvf(Actor::L1, kBuild, 2.0, kTranspacific) == Approx(-0.255 + 0.9 * 2.0));
  CHECK(csvf(Actor::Entrant, kEnter, 1.0, kTranspacific) == Approx(-0.055 + 0.9));
  CHECK(csvf(Actor::Entrant, kQuit, 1.0, kTranspacific) == 0.0);
}

TEST_CASE("expected continuation over a kernel row") {
  const std::vector<double> point{0.0, 1.0, 0.0};
  const std::vector<double> v{4.0, 9.0, -2.0};
  CHECK(expected_continuation(point, v) == 9.0);
  const std::vector<double> half{0.5, 0.5};
  const std::vector<double> w{0.0, 10.0};
  CHECK(expected_continuation(half, w) == 5.0);
  CHECK_THROWS_AS(expected_continuation(half, v), PreconditionError);
}

TEST_CASE("expected continuation matches joint enumeration") {
  const Caps caps{2, 2, 2, 2};
  const StateSpace space(caps);
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> values(space.size() * 4);
  for (double& x : values) x = u(gen);
  const ContinuationValues next(space, values);
  KernelWorkspace ws;
  for (const auto& s : space.states()) {
    if (s.total() > 3) continue;
    for (int ne = 0; ne <= 2; ++ne) {
      LevelCcps c;
      for (auto& r : c.incumbent) {
        const double a = u(gen) + 1.5, b = u(gen) + 1.5, d = u(gen) + 1.5;
        r = {a / (a + b + d), b / (a + b + d), d / (a + b + d)};
      }
      c.entrant = {0.3, 0.7, 0.0};
      for (int a = 0; a < kActors; ++a) {
        const Actor actor = static_cast<Actor>(a);
        if (!actor_present(actor, s, ne)) continue;
        for (int k = 0; k < action_count(actor); ++k) {
          const int own = next_level(actor, k);
          double ref = 0.0;
          if (own > 0) {
            oracle::Counts rivals = s.n;
            int rne = ne;
            if (is_entrant(actor)) --rne; else --rivals[a];
            const auto dist = oracle::brute_force_kernel(rivals, rne, c.incumbent, c.entrant, {99, 99, 99, 99});
            for (const auto& [cnt, p] : dist) {
              oracle::Counts n = cnt;
              n[own - 1] += 1;
              for (int l = 0; l < 4; ++l) n[l] = std::min(n[l], caps[l]);
              ref += p * values[space.index(IndustryState{n}) * 4 + own - 1];
            }
          }
          CHECK(expected_continuation(space, actor, k, s, next, c, ne, ws) == Approx(ref).epsilon(1e-13));
        }
      }
    }
  }
}

TEST_CASE("fixed point without continuation differences is myopic") {
  const Caps caps{2, 1, 1, 1};
  const StateSpace space(caps);
  const ContinuationValues next(space, std::vector<double>(space.size() * 4, 0.0));
  SolverOptions opt;
  opt.caps = caps;
  KernelWorkspace ws;
  LevelCcps warm;
  for (auto& r : warm.incumbent) r = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  warm.entrant = {0.5, 0.5, 0.0};
  const IndustryState s{{2, 1, 1, 1}};
  const auto fp = solve_state_fixed_point(space, s, next, kTranspacific, opt, warm, ws);
  CHECK(fp.sweeps <= 2);
  const double sig = kTranspacific.logit_scale;
  const double z1 = std::exp(-0.200 / sig) + std::exp(-0.103 / sig) + std::exp(-0.255 / sig);
  CHECK(fp.ccp[0][kExit] == Approx(std::exp(-0.200 / sig) / z1).epsilon(1e-14));
  CHECK(fp.ccp[0][kBuild] == Approx(std::exp(-0.255 / sig) / z1).epsilon(1e-14));
  const double z4 = std::exp(-0.200 / sig) + std::exp(-0.103 / sig) + 1.0;
  CHECK(fp.ccp[3][kBuild] == Approx(1.0 / z4).epsilon(1e-14));
  CHECK(fp.ccp[4][kEnter] == Approx(std::exp(-0.055 / sig) / (1.0 + std::exp(-0.055 / sig))).epsilon(1e-14));
}

TEST_CASE("single incumbent fixed point equals the single-agent solution") {
  const Caps caps{1, 1, 0, 0};
  const StateSpace space(caps);
  std::vector<double> values(space.size() * 4, 0.0);
  values[space.index(IndustryState{{1, 0, 0, 0}}) * 4 + 0] = 0.7;
  values[space.index(IndustryState{{0, 1, 0, 0}}) * 4 + 1] = 1.4;
  const ContinuationValues next(space, values);
  SolverOptions opt;
  opt.caps = caps;
  opt.n_entrants = 0;
  KernelWorkspace ws;
  const LevelCcps warm{};
  const auto fp = solve_state_fixed_point(space, IndustryState{{1, 0, 0, 0}}, next, kTranspacific, opt, warm, ws);
  const auto& p = kTranspacific;
  const std::vector<double> v{-p.exit_cost, -p.operation_cost + p.discount * 0.7,
                              -p.operation_cost - p.invest_cost_low + p.discount * 1.4};
  double z = 0.0;
  for (double x : v) z += std::exp(x / p.logit_scale);
  for (int k = 0; k < 3; ++k) CHECK(fp.ccp[0][k] == Approx(std::exp(v[k] / p.logit_scale) / z).epsilon(1e-13));
}

TEST_CASE("converged fixed point is idempotent") {
  const Caps caps{3, 2, 2, 1};
  const StateSpace space(caps);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> values(space.size() * 4);
  for (double& x : values) x = u(gen);
  const ContinuationValues next(space, values);
  SolverOptions opt;
  opt.caps = caps;
  KernelWorkspace ws;
  LevelCcps warm;
  for (auto& r : warm.incumbent) r = {0.2, 0.5, 0.3};
  warm.entrant = {0.9, 0.1, 0.0};
  for (const auto& s : space.states()) {
    const auto fp = solve_state_fixed_point(space, s, next, kTranspacific, opt, warm, ws);
    CHECK(fp.gap < opt.tolerance);
    CHECK(fixed_point_residual(space, s, next, kTranspacific, opt, fp) <= opt.tolerance);
  }
}

TEST_CASE("non-convergence raises a solver error") {
  const Caps caps{3, 2, 2, 1};
  const StateSpace space(caps);
  std::vector<double> values(space.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = (i % 7) * 0.3;
  const ContinuationValues next(space, values);
  SolverOptions opt;
  opt.caps = caps;
  opt.max_iters = 2;
  opt.tolerance = 1e-300;
  KernelWorkspace ws;
  LevelCcps warm;
  for (auto& r : warm.incumbent) r = {0.2, 0.5, 0.3};
  warm.entrant = {0.9, 0.1, 0.0};
  CHECK_THROWS_AS(solve_state_fixed_point(space, IndustryState{{3, 2, 2, 1}}, next, kTranspacific, opt, warm, ws),
                  SolverError);
}

TEST_CASE("two-period single firm closed form") {
  ProfitTable table(2, {1, 0, 0, 0});
  const int one = table.space().index(IndustryState{{1, 0, 0, 0}});
  table.set(1, one, 1, 0.04);
  table.set(2, one, 1, 0.05);
  SolverOptions opt;
  opt.caps = {1, 0, 0, 0};
  opt.n_entrants = 0;
  opt.tolerance = 1e-14;
  const auto& p = kTranspacific;
  const auto sol = backward_induction(table, p, opt);
  const double vT = 0.05 / (1.0 - 0.9);
  CHECK(sol.value(2, one, Actor::L1) == Approx(vT).epsilon(1e-15));
  // Level 2 has cap 0, so building leaves the enumerated industry with no continuation.
  const double vx = -p.exit_cost, vk = -p.operation_cost + 0.9 * vT, vb = -p.operation_cost - p.invest_cost_low;
  const double s = p.logit_scale;
  const double z = std::exp(vx / s) + std::exp(vk / s) + std::exp(vb / s);
  CHECK(sol.ccp(1, one, Actor::L1)[kKeep] == Approx(std::exp(vk / s) / z).epsilon(1e-12));
  CHECK(sol.value(1, one, Actor::L1) == Approx(0.04 + s * (kEuler + std::log(z))).epsilon(1e-12));
}

TEST_CASE("beta = 0 gives myopic choices") {
  auto p = kTranspacific;
  p.discount = 0.0;
  const auto table = random_profits(4, {2, 1, 1, 1}, 3);
  SolverOptions opt;
  opt.caps = {2, 1, 1, 1};
  const auto sol = backward_induction(table, p, opt);
  const double s = p.logit_scale;
  const double z = std::exp(-0.200 / s) + std::exp(-0.103 / s) + std::exp(-0.255 / s);
  for (int t = 1; t < 4; ++t)
    for (int i = 0; i < sol.space().size(); ++i)
      if (sol.space().state(i).n[0] > 0) CHECK(sol.ccp(t, i, Actor::L1)[kKeep] == Approx(std::exp(-0.103 / s) / z).epsilon(1e-12));
}

TEST_CASE("zero payoffs give uniform choices") {
  const DynamicParams p{0, 0, 0, 0, 0, 0.5, 0.9};
  ProfitTable table(3, {2, 1, 1, 1});
  SolverOptions opt;
  opt.caps = {2, 1, 1, 1};
  // With all values zero, continuation values still differ through the Euler term;
  // at T-1 continuation is pi_T/(1-beta) = 0, so every action has CSVF zero.
  const auto sol = backward_induction(table, p, opt);
  for (int i = 0; i < sol.space().size(); ++i) {
    const auto s = sol.space().state(i);
    for (int l = 1; l <= 4; ++l)
      if (s.count(l) > 0)
        for (int k = 0; k < 3; ++k) CHECK(sol.ccp(2, i, incumbent(l))[k] == Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(sol.ccp(2, i, Actor::Entrant)[kEnter] == Approx(0.5).epsilon(1e-13));
  }
}

TEST_CASE("backward induction matches exhaustive enumeration") {
  int seed = 0;
  for (Caps caps : {Caps{1, 1, 0, 0}, Caps{2, 0, 0, 0}, Caps{1, 0, 0, 1}, Caps{0, 1, 1, 0}, Caps{0, 0, 1, 1}})
    for (int T = 1; T <= 3; ++T)
      for (int ne = 0; ne <= 1; ++ne) {
        const auto table = random_profits(T, caps, ++seed);
        CHECK(compare_with_oracle(table, kTranspacific, ne) < 1e-10);
        auto p = kTranspacific;
        p.logit_scale = 0.5;
        p.entry_cost = -0.1;
        CHECK(compare_with_oracle(table, p, ne) < 1e-10);
      }
}

TEST_CASE("ccp rows sum to one and values are finite") {
  const Caps caps{4, 3, 2, 1};
  const auto table = random_profits(6, caps, 77);
  SolverOptions opt;
  opt.caps = caps;
  const auto sol = backward_induction(table, kTranspacific, opt);
  for (int t = 1; t <= 6; ++t)
    for (int i = 0; i < sol.space().size(); ++i)
      for (int a = 0; a < kActors; ++a) {
        const auto& r = sol.ccp(t, i, static_cast<Actor>(a));
        CHECK(std::abs(r[0] + r[1] + r[2] - 1.0) < 1e-12);
        CHECK(std::isfinite(sol.value(t, i, static_cast<Actor>(a))));
      }
}

TEST_CASE("exclude mode removes the top-level build") {
  const Caps caps{1, 1, 1, 1};
  const auto table = random_profits(3, caps, 5);
  SolverOptions opt;
  opt.caps = caps;
  opt.top_build = TopBuildMode::Exclude;
  const auto sol = backward_induction(table, kTranspacific, opt);
  for (int i = 0; i < sol.space().size(); ++i) CHECK(sol.ccp(1, i, Actor::L4)[kBuild] == 0.0);
}

TEST_CASE("values are monotone in profits") {
  const Caps caps{3, 2, 1, 1};
  const auto base = random_profits(5, caps, 12);
  auto raised = base;
  raised.add(0.05);
  SolverOptions opt;
  opt.caps = caps;
  opt.tolerance = 1e-12;
  const auto a = backward_induction(base, kTranspacific, opt);
  const auto b = backward_induction(raised, kTranspacific, opt);
  for (int t = 1; t <= 5; ++t)
    for (int i = 0; i < a.space().size(); ++i)
      for (int l = 1; l <= 4; ++l)
        if (a.space().state(i).count(l) > 0) CHECK(b.value(t, i, incumbent(l)) >= a.value(t, i, incumbent(l)) - 1e-12);
}

TEST_CASE("backward induction is deterministic") {
  const Caps caps{4, 3, 2, 1};
  const auto table = random_profits(5, caps, 21);
  SolverOptions opt;
  opt.caps = caps;
  const auto a = backward_induction(table, kTranspacific, opt);
  const auto b = backward_induction(table, kTranspacific, opt);
  std::ostringstream sa, sb;
  write_policy_csv(a, sa);
  write_policy_csv(b, sb);
  CHECK(sa.str() == sb.str());
  for (int t = 1; t <= 5; ++t)
    for (int i = 0; i < a.space().size(); ++i)
      for (int k = 0; k < kActors; ++k) CHECK(a.ccp(t, i, static_cast<Actor>(k)) == b.ccp(t, i, static_cast<Actor>(k)));
}

TEST_CASE("policy csv layout") {
  const auto table = random_profits(2, {1, 0, 0, 0}, 2);
  SolverOptions opt;
  opt.caps = {1, 0, 0, 0};
  opt.n_entrants = 1;
  const auto sol = backward_induction(table, kTranspacific, opt);
  std::ostringstream os;
  write_policy_csv(sol, os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,state_index,n1,n2,n3,n4,actor,action,ccp,value");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  // state (0,0,0,0): entrant 2 rows; state (1,0,0,0): L1 3 rows + entrant 2 rows
  CHECK(rows == 7);
}

TEST_CASE("parameter validation") {
  auto p = kTranspacific;
  p.logit_scale = 0.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = kTranspacific;
  p.discount = 1.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  ProfitTable table(2, {1, 0, 0, 0});
  SolverOptions opt;
  CHECK_THROWS_AS(backward_induction(table, kTranspacific, opt), PreconditionError);
}

TEST_CASE("period-by-period solution equals backward induction") {
  const auto table = random_profits(4, {2, 1, 1, 0}, 91);
  SolverOptions opt;
  opt.caps = {2, 1, 1, 0};
  opt.n_entrants = 2;
  const auto full = backward_induction(table, kTranspacific, opt);
  PolicySolution sol(4, opt.caps, opt.n_entrants);
  for (int s = 0; s < sol.space().size(); ++s)
    for (int l = 1; l <= 4; ++l) sol.value(4, s, incumbent(l)) = full.value(4, s, incumbent(l));
  for (int a = 0; a < kActors; ++a)
    for (int s = 0; s < sol.space().size(); ++s) sol.ccp(4, s, static_cast<Actor>(a)) = full.ccp(4, s, static_cast<Actor>(a));
  for (int t = 3; t >= 1; --t) solve_period_fixed_point(t, table, kTranspacific, opt, sol);
  for (int t = 1; t <= 3; ++t)
    for (int s = 0; s < sol.space().size(); ++s)
      for (int a = 0; a < kActors; ++a) {
        CHECK(sol.ccp(t, s, static_cast<Actor>(a)) == full.ccp(t, s, static_cast<Actor>(a)));
        CHECK(sol.value(t, s, static_cast<Actor>(a)) == full.value(t, s, static_cast<Actor>(a)));
      }
  CHECK_THROWS_AS(solve_period_fixed_point(4, table, kTranspacific, opt, sol), DomainError);
}
