#include "doctest.h"

#include <cmath>
#include <random>

#include "liner/data_io.hpp"
#include "liner/errors.hpp"
#include "liner/estimation.hpp"
#include "oracles.hpp"

using namespace liner;
using doctest::Approx;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<int> iota_groups(int n, int per) {
  std::vector<int> g(n);
  for (int i = 0; i < n; ++i) g[i] = i / per;
  return g;
}

const DynamicParams kTheta0{0.200, 0.103, 0.055, 0.152, 0.162, 0.101, 0.9};

SyntheticPanel small_panel(std::uint64_t seed, Caps caps, int horizon, int markets, const DynamicParams& theta) {
  SyntheticSpec spec;
  spec.env = fixture_environment(Market::Transpacific, horizon);
  spec.theta = theta;
  spec.solver.caps = caps;
  spec.n_markets = markets;
  spec.seed = seed;
  return generate_synthetic_panel(spec);
}

}  // namespace

// ---- OLS / 2SLS ----

TEST_CASE("OLS on an exact line") {
  VectorXd x(5), y(5);
  x << 1, 2, 3, 4, 5;
  y = 2.0 * x;
  const auto rep = ols_panel(y, x, {"x"}, {}, {0, 0, 1, 1, 2});
  CHECK(rep.coef(0) == Approx(2.0).epsilon(1e-14));
  CHECK(rep.se(0) == Approx(0.0).epsilon(1e-12));
  CHECK(rep.n_clusters == 3);
}

TEST_CASE("group-constant column is collinear with the fixed effects") {
  const int n = 12;
  MatrixXd x(n, 2);
  VectorXd y(n);
  std::mt19937_64 gen(3);
  std::normal_distribution<double> z;
  const auto g = iota_groups(n, 4);
  for (int i = 0; i < n; ++i) {
    x(i, 0) = z(gen);
    x(i, 1) = g[i] * 1.5;  // constant within group
    y(i) = z(gen);
  }
  try {
    ols_panel(y, x, {"slope", "group_level"}, g, g);
    FAIL("expected an estimation error");
  } catch (const EstimationError& e) {
    CHECK(std::string(e.what()).find("group_level") != std::string::npos);
    CHECK(std::string(e.what()).find("slope") == std::string::npos);
  }
}

TEST_CASE("OLS with fixed effects recovers the slope and the group effects") {
  const int n = 40;
  MatrixXd x(n, 1);
  VectorXd y(n);
  const auto g = iota_groups(n, 10);
  const double fe[4] = {1.0, -2.0, 0.5, 3.0};
  for (int i = 0; i < n; ++i) {
    x(i, 0) = std::sin(i * 0.7) + i * 0.1;
    y(i) = 1.7 * x(i, 0) + fe[g[i]];
  }
  const auto rep = ols_panel(y, x, {"x"}, g, g);
  CHECK(rep.coef(0) == Approx(1.7).epsilon(1e-12));
  for (int k = 0; k < 4; ++k) CHECK(rep.group_effects[k] == Approx(fe[k]).epsilon(1e-12));
}

TEST_CASE("clustered standard errors cover the truth in repeated samples") {
  // 6 clusters x 18 years, cluster-correlated errors and regressors.
  int covered = 0;
  const int reps = 200;
  for (int seed = 0; seed < reps; ++seed) {
    std::mt19937_64 gen(1000 + seed);
    std::normal_distribution<double> z;
    const int G = 6, T = 18, n = G * T;
    MatrixXd x(n, 2);
    VectorXd y(n);
    std::vector<int> cl(n);
    for (int g = 0; g < G; ++g) {
      const double cx = z(gen), cu = z(gen);
      for (int t = 0; t < T; ++t) {
        const int i = g * T + t;
        cl[i] = g;
        x(i, 0) = 1.0;
        x(i, 1) = cx + z(gen);
        y(i) = 0.5 + 1.3 * x(i, 1) + cu + z(gen);
      }
    }
    const auto rep = ols_panel(y, x, {"const", "x"}, {}, cl);
    if (std::abs(rep.coef(1) - 1.3) <= 3.0 * rep.se(1)) ++covered;
  }
  CHECK(covered >= 190);
}

TEST_CASE("2SLS with the regressors as instruments reproduces OLS") {
  const int n = 60;
  std::mt19937_64 gen(11);
  std::normal_distribution<double> z;
  MatrixXd en(n, 1), ex(n, 2);
  VectorXd y(n);
  std::vector<int> cl(n);
  for (int i = 0; i < n; ++i) {
    en(i, 0) = z(gen);
    ex(i, 0) = 1.0;
    ex(i, 1) = z(gen);
    y(i) = 0.3 * en(i, 0) - 0.8 * ex(i, 1) + 0.1 + z(gen);
    cl[i] = i % 5;
  }
  const auto iv = tsls_panel(y, en, ex, en, {"e", "c", "w"}, {}, cl);
  MatrixXd x(n, 3);
  x << en, ex;
  const auto ols = ols_panel(y, x, {"e", "c", "w"}, {}, cl);
  for (int k = 0; k < 3; ++k) {
    CHECK(iv.coef(k) == Approx(ols.coef(k)).epsilon(1e-10));
    CHECK(iv.se(k) == Approx(ols.se(k)).epsilon(1e-8));
  }
}

TEST_CASE("exactly identified 2SLS equals the Wald ratio cov(z,y)/cov(z,x)") {
  const int n = 7;
  VectorXd y(n);
  MatrixXd x(n, 1), zc(n, 1), c(n, 1);
  const double zs[n] = {1, 3, 2, 5, 4, 6, 8}, xs[n] = {2, 3, 3, 6, 4, 7, 9}, ys[n] = {1, 4, 2, 5, 6, 6, 10};
  for (int i = 0; i < n; ++i) {
    zc(i, 0) = zs[i];
    x(i, 0) = xs[i];
    y(i) = ys[i];
    c(i, 0) = 1.0;
  }
  const double mz = zc.mean(), mx = x.mean(), my = y.mean();
  double czy = 0, czx = 0;
  for (int i = 0; i < n; ++i) {
    czy += (zs[i] - mz) * (ys[i] - my);
    czx += (zs[i] - mz) * (xs[i] - mx);
  }
  const auto rep = tsls_panel(y, x, c, zc, {"x", "const"}, {}, {0, 0, 1, 1, 2, 2, 2});
  CHECK(rep.coef(0) == Approx(czy / czx).epsilon(1e-12));
}

TEST_CASE("2SLS recovers a negative demand elasticity from a simultaneous system") {
  // log Q = a1 log P + u;  log P = 0.5 log Q + w + v, w an observed cost shifter.
  int within = 0;
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 gen(500 + seed);
    std::normal_distribution<double> z;
    const int n = 400;
    const double a1 = -0.869;
    VectorXd lq(n);
    MatrixXd lp(n, 1), w(n, 1), c(n, 1);
    std::vector<int> cl(n);
    for (int i = 0; i < n; ++i) {
      const double u = 0.3 * z(gen), v = 0.3 * z(gen);
      w(i, 0) = z(gen);
      // Solve the two equations jointly.
      const double p = (0.5 * u + w(i, 0) + v) / (1.0 - 0.5 * a1);
      lp(i, 0) = p;
      lq(i) = a1 * p + u;
      c(i, 0) = 1.0;
      cl[i] = i % 20;
    }
    const auto rep = tsls_panel(lq, lp, c, w, {"log_price", "const"}, {}, cl);
    CHECK_FALSE(rep.weak_instruments);
    if (std::abs(rep.coef(0) - a1) <= 3.0 * rep.se(0)) ++within;
  }
  CHECK(within >= 18);
}

TEST_CASE("irrelevant instruments are flagged, too few are rejected") {
  const int n = 200;
  std::mt19937_64 gen(8);
  std::normal_distribution<double> z;
  MatrixXd en(n, 1), ex(n, 1), inst(n, 1), two(n, 2);
  VectorXd y(n);
  std::vector<int> cl(n);
  for (int i = 0; i < n; ++i) {
    en(i, 0) = z(gen);
    ex(i, 0) = 1.0;
    inst(i, 0) = z(gen);
    y(i) = en(i, 0) + z(gen);
    cl[i] = i % 10;
    two(i, 0) = z(gen);
    two(i, 1) = z(gen);
  }
  const auto rep = tsls_panel(y, en, ex, inst, {"e", "c"}, {}, cl);
  CHECK(rep.weak_instruments);
  REQUIRE(rep.first_stage_f.size() == 1);
  CHECK(rep.first_stage_f[0] < kWeakInstrumentF);
  CHECK_THROWS_AS(tsls_panel(y, two, ex, inst, {"a", "b", "c"}, {}, cl), EstimationError);
}

TEST_CASE("demand state and supply intercept") {
  EstimateReport d;
  d.names = {"log_price", kLogGdp, kRegime79, kRegime83};
  d.coef.resize(4);
  d.coef << -0.869, 0.434, 0.396, 0.095;
  CHECK(demand_state(d, 28.0, 1975, 0.0) == Approx(0.434 * 28 + 0.396));
  CHECK(demand_state(d, 28.0, 1975, 0.0) == Approx(12.548));
  CHECK(demand_state(d, 0.0, 1985, 0.0) == 0.0);
  CHECK(demand_state(d, 0.0, 1981, 0.0) == Approx(0.095));
  CHECK(demand_state(d, 1.0, 1990, 2.0) == Approx(2.434));
  EstimateReport missing;
  missing.names = {kLogGdp};
  missing.coef.resize(1);
  missing.coef << 0.4;
  CHECK_THROWS_AS(demand_state(missing, 28.0, 1975, 0.0), ConfigError);

  EstimateReport s;
  s.names = {"age", "old"};
  s.coef.resize(2);
  s.coef << 12.0, -300.0;
  CHECK(supply_intercept(s, {{"age", 0.0}, {"old", 0.0}}, 1500.0) == 1500.0);
  CHECK(supply_intercept(s, {{"age", 2.0}, {"old", 0.5}}, 1500.0) == Approx(1500.0 + 24.0 - 150.0));
  CHECK_THROWS_AS(supply_intercept(s, {{"fuel", 1.0}}, 0.0), ConfigError);
}

// ---- likelihood ----

TEST_CASE("single-term log-likelihood") {
  Observation o;
  o.t = 1;
  o.state = IndustryState{{1, 0, 0, 0}};
  LevelCcps c;
  c.incumbent[0] = {0.25, 0.5, 0.25};
  c.entrant = {1.0, 0.0, 0.0};
  CHECK(observation_log_prob(o, c, 0) == Approx(std::log(0.5)).epsilon(1e-15));
  o.tally.exits[0] = 1;
  CHECK(observation_log_prob(o, c, 0) == Approx(std::log(0.25)).epsilon(1e-15));
}

TEST_CASE("likelihood of a solved single-firm game is the log of its CCP") {
  ProfitTable table(2, {1, 0, 0, 0});
  table.set(1, 1, 1, 0.05);
  table.set(2, 1, 1, 0.07);
  SolverOptions opt;
  opt.caps = {1, 0, 0, 0};
  opt.n_entrants = 0;
  const auto pol = backward_induction(table, kTheta0, opt);
  Observation o;
  o.t = 1;
  o.state = IndustryState{{1, 0, 0, 0}};
  const auto ll = dynamic_log_likelihood(kTheta0, {o}, table, opt);
  CHECK_FALSE(ll.penalized);
  CHECK(ll.value == Approx(std::log(pol.ccp(1, 1, Actor::L1)[kKeep])).epsilon(1e-14));
  CHECK(dynamic_log_likelihood(kTheta0, {}, table, opt).value == 0.0);
}

TEST_CASE("likelihood terms match brute-force profile enumeration and add up") {
  const auto panel = small_panel(5, {3, 2, 1, 1}, 6, 4, kTheta0);
  const auto table = build_profit_table(fixture_environment(Market::Transpacific, 6), {3, 2, 1, 1});
  SolverOptions opt;
  opt.caps = {3, 2, 1, 1};
  const auto pol = backward_induction(table, kTheta0, opt);
  const auto ll = dynamic_log_likelihood(kTheta0, panel.tallies, table, opt);
  REQUIRE(ll.terms.size() == panel.tallies.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < ll.terms.size(); ++i) {
    const auto& o = panel.tallies[i];
    const auto c = pol.level_ccps(o.t, pol.space().index(o.state));
    // Enumerate ordered individual choices, keep those matching the tally.
    double p = 1.0;
    for (int l = 0; l < 4; ++l) {
      const int n = o.state.n[l];
      double pl = 0.0;
      int combos = 1;
      for (int k = 0; k < n; ++k) combos *= 3;
      for (int code = 0; code < combos; ++code) {
        int c0 = code, ex = 0, b = 0;
        double q = 1.0;
        for (int k = 0; k < n; ++k, c0 /= 3) {
          q *= c.incumbent[l][c0 % 3];
          ex += c0 % 3 == 0;
          b += c0 % 3 == 2;
        }
        if (ex == o.tally.exits[l] && b == o.tally.builds[l]) pl += q;
      }
      p *= pl;
    }
    double pe = 0.0;
    for (int code = 0; code < 16; ++code) {
      int entries = 0;
      double q = 1.0;
      for (int k = 0; k < 4; ++k) {
        const bool e = (code >> k) & 1;
        entries += e;
        q *= e ? c.entrant[kEnter] : c.entrant[kQuit];
      }
      if (entries == o.tally.entries) pe += q;
    }
    CHECK(ll.terms[i] == Approx(std::log(p * pe)).epsilon(1e-12));
    sum += ll.terms[i];
  }
  CHECK(ll.value == Approx(sum).epsilon(1e-14));
}

TEST_CASE("invalid parameters and impossible data are penalized, malformed data rejected") {
  ProfitTable table(3, {1, 1, 0, 0});
  SolverOptions opt;
  opt.caps = {1, 1, 0, 0};
  opt.n_entrants = 1;
  Observation o;
  o.t = 1;
  o.state = IndustryState{{1, 0, 0, 0}};
  o.tally.entrant_quits = 1;
  DynamicParams bad = kTheta0;
  bad.logit_scale = -0.1;
  const auto r = dynamic_log_likelihood(bad, {o}, table, opt);
  CHECK(r.penalized);
  CHECK(r.value == kLikelihoodPenalty);

  Observation late = o;
  late.t = 3;
  CHECK_THROWS_AS(dynamic_log_likelihood(kTheta0, {late}, table, opt), ConfigError);
  Observation outside = o;
  outside.state = IndustryState{{2, 0, 0, 0}};
  CHECK_THROWS_AS(dynamic_log_likelihood(kTheta0, {outside}, table, opt), ConfigError);
  Observation wrong_pe = o;
  wrong_pe.tally.entrant_quits = 0;
  CHECK_THROWS_AS(dynamic_log_likelihood(kTheta0, {wrong_pe}, table, opt), ConsistencyError);
}

TEST_CASE("with zero profits the likelihood is invariant to a common scaling of costs and sigma") {
  // Values are homogeneous of degree one in (costs, sigma) once profits vanish, so
  // only the profit terms pin down the overall scale.
  const Caps caps{2, 2, 1, 1};
  const auto panel = small_panel(9, caps, 6, 6, kTheta0);
  const ProfitTable zero(6, caps);
  SolverOptions opt;
  opt.caps = caps;
  opt.tolerance = 1e-12;
  const double base = dynamic_log_likelihood(kTheta0, panel.tallies, zero, opt).value;
  for (double c : {0.5, 2.0, 5.0}) {
    auto a = to_array(kTheta0);
    for (auto& x : a) x *= c;
    CHECK(dynamic_log_likelihood(from_array(a, 0.9), panel.tallies, zero, opt).value == Approx(base).epsilon(1e-8));
  }
}

TEST_CASE("data simulated at theta0 favour theta0 over large perturbations on average") {
  const Caps caps{2, 2, 1, 1};
  const int T = 8;
  const auto table = build_profit_table(fixture_environment(Market::Transpacific, T), caps);
  SolverOptions opt;
  opt.caps = caps;
  double mean_gap = 0.0;
  int wins = 0;
  const int seeds = 50;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto panel = small_panel(100 + seed, caps, T, 5, kTheta0);
    const double l0 = dynamic_log_likelihood(kTheta0, panel.tallies, table, opt).value;
    DynamicParams p = kTheta0;
    p.operation_cost *= 1.5;
    p.exit_cost *= 0.7;
    const double l1 = dynamic_log_likelihood(p, panel.tallies, table, opt).value;
    mean_gap += (l0 - l1) / seeds;
    wins += l0 >= l1;
  }
  CHECK(mean_gap > 0.0);
  CHECK(wins >= seeds * 8 / 10);
}

// ---- Nelder-Mead ----

TEST_CASE("Nelder-Mead minimizes Rosenbrock and a shifted quadratic") {
  const auto rosen = [](const std::vector<double>& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  NelderMeadOptions o;
  o.max_evals = 5000;
  const auto r = nelder_mead(rosen, {-1.2, 1.0}, o);
  CHECK(r.converged);
  CHECK(r.x[0] == Approx(1.0).epsilon(1e-3));
  CHECK(r.x[1] == Approx(1.0).epsilon(1e-3));
  const auto quad = [](const std::vector<double>& x) {
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (i + 1.0) * std::pow(x[i] - 0.5 * i, 2);
    return s;
  };
  const auto q = nelder_mead(quad, {1, 1, 1, 1});
  CHECK(q.converged);
  for (std::size_t i = 0; i < 4; ++i) CHECK(q.x[i] == Approx(0.5 * i).epsilon(1e-4));
  // Trace is monotone non-increasing.
  for (std::size_t i = 1; i < q.trace.size(); ++i) CHECK(q.trace[i] <= q.trace[i - 1]);
}

TEST_CASE("Nelder-Mead started at the optimum stays within the simplex tolerance") {
  const auto quad = [](const std::vector<double>& x) { return std::pow(x[0] - 2.0, 2) + std::pow(x[1] + 1.0, 2); };
  const auto r = nelder_mead(quad, {2.0, -1.0});
  CHECK(r.converged);
  CHECK(std::abs(r.x[0] - 2.0) < 1e-5);
  CHECK(std::abs(r.x[1] + 1.0) < 1e-5);
  CHECK(r.value <= 1e-10);
}

TEST_CASE("Nelder-Mead reports an exhausted budget") {
  const auto rosen = [](const std::vector<double>& x) {
    return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
  };
  NelderMeadOptions o;
  o.max_evals = 30;
  const auto r = nelder_mead(rosen, {-1.2, 1.0}, o);
  CHECK_FALSE(r.converged);
  CHECK(r.evaluations <= 30 + 2);
}

// ---- dynamic MLE ----

TEST_CASE("one free parameter: operation cost recovered from synthetic data") {
  const Caps caps{3, 2, 1, 1};
  const int T = 10;
  const auto panel = small_panel(2024, caps, T, 30, kTheta0);
  const auto table = build_profit_table(fixture_environment(Market::Transpacific, T), caps);
  DynamicEstimateOptions opt;
  opt.solver.caps = caps;
  opt.free = {false, true, false, false, false, false};
  DynamicParams start = kTheta0;
  start.operation_cost = 0.14;
  const auto est = estimate_dynamic(panel.tallies, table, start, opt);
  CHECK(est.converged);
  CHECK(est.theta.operation_cost == Approx(0.103).epsilon(0.10));
  CHECK(est.theta.exit_cost == kTheta0.exit_cost);
  CHECK(est.theta.logit_scale == Approx(kTheta0.logit_scale).epsilon(1e-15));
  const double at_truth = dynamic_log_likelihood(kTheta0, panel.tallies, table, opt.solver).value;
  CHECK(est.log_likelihood >= at_truth - 1e-9);
}

TEST_CASE("transpacific fixture start evaluates finitely") {
  const Caps caps{2, 2, 1, 1};
  const auto panel = small_panel(3, caps, 6, 3, kTheta0);
  const auto table = build_profit_table(fixture_environment(Market::Transpacific, 6), caps);
  DynamicEstimateOptions opt;
  opt.solver.caps = caps;
  opt.nelder_mead.max_evals = 40;
  const auto est = estimate_dynamic(panel.tallies, table, kTheta0, opt);
  CHECK(std::isfinite(est.log_likelihood));
  CHECK(est.log_likelihood > kLikelihoodPenalty);
  CHECK(est.evaluations <= 42);
  CHECK_FALSE(est.warning.empty());
}

// ---- LR intervals ----

TEST_CASE("chi-square critical values") {
  CHECK(chi_square_critical(0.90) == Approx(2.705543).epsilon(1e-6));
  CHECK(chi_square_critical(0.95) == Approx(3.841459).epsilon(1e-6));
  CHECK_THROWS_AS(chi_square_critical(1.0), DomainError);
}

TEST_CASE("LR interval of a quadratic log-likelihood inverts in closed form") {
  const auto ll = [](int, double v) { return -(v - 1.0) * (v - 1.0); };
  const double h = std::sqrt(chi_square_critical(0.90) / 2.0);
  LrOptions o;
  // The default +-50% grid truncates this interval at the grid edge.
  const auto narrow = lr_intervals(ll, {1.0}, {"x"}, 0.0, o);
  CHECK(narrow[0].lo == Approx(0.5));
  CHECK(narrow[0].hi == Approx(1.5));
  CHECK(narrow[0].lo_at_edge);
  CHECK(narrow[0].hi_at_edge);
  o.rel_half_width = 2.0;  // grid step 0.4
  const auto iv = lr_intervals(ll, {1.0}, {"x"}, 0.0, o);
  const double step = 0.4;
  CHECK(std::abs(iv[0].lo - (1.0 - h)) <= step / 4096 + 1e-12);
  CHECK(std::abs(iv[0].hi - (1.0 + h)) <= step / 4096 + 1e-12);
  CHECK(iv[0].lo >= 1.0 - h - 1e-12);  // refinement keeps an accepted endpoint
  CHECK_FALSE(iv[0].lo_at_edge);
  o.refine = false;
  const auto grid = lr_intervals(ll, {1.0}, {"x"}, 0.0, o);
  CHECK(grid[0].lo == Approx(0.2));  // 1 -+ 0.8 accepted, 1 -+ 1.2 rejected
  CHECK(grid[0].hi == Approx(1.8));
}

TEST_CASE("flat likelihood spans the whole grid; sharp one is degenerate") {
  const auto flat = [](int, double) { return -3.0; };
  const auto iv = lr_intervals(flat, {0.2, 0.004}, {"a", "b"}, -3.0, {});
  CHECK(iv[0].lo == Approx(0.1));
  CHECK(iv[0].hi == Approx(0.3));
  CHECK(iv[0].lo_at_edge);
  CHECK(iv[0].hi_at_edge);
  CHECK(iv[1].lo == Approx(0.004 - 0.01));  // absolute floor on the half-width
  const auto sharp = [](int, double v) { return -1e6 * (v - 1.0) * (v - 1.0); };
  LrOptions o;
  o.refine = false;
  const auto d = lr_intervals(sharp, {1.0}, {"x"}, 0.0, o);
  CHECK(d[0].degenerate);
  CHECK(d[0].lo == 1.0);
  CHECK(d[0].hi == 1.0);
}

TEST_CASE("LR intervals contain the estimate and widen with the confidence level") {
  const auto ll = [](int i, double v) { return -std::pow(v - 0.3, 2) * (i + 1) * 40.0 - 0.2 * std::pow(v - 0.3, 3); };
  LrOptions o90, o95;
  o95.level = 0.95;
  const std::vector<double> est{0.3, 0.3};
  const auto a = lr_intervals(ll, est, {"a", "b"}, ll(0, 0.3), o90);
  const auto b = lr_intervals(ll, est, {"a", "b"}, ll(0, 0.3), o95);
  for (int i = 0; i < 2; ++i) {
    CHECK(a[i].lo <= 0.3);
    CHECK(a[i].hi >= 0.3);
    CHECK(b[i].lo <= a[i].lo);
    CHECK(b[i].hi >= a[i].hi);
  }
}
