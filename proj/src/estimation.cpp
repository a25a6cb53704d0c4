#include "liner/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>

#include "liner/errors.hpp"

namespace liner {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

int count_groups(const std::vector<int>& g) {
  if (g.empty()) return 0;
  const int mx = *std::max_element(g.begin(), g.end());
  if (*std::min_element(g.begin(), g.end()) < 0) throw DomainError("group ids must be non-negative");
  return mx + 1;
}

// Subtract group means in place.
void demean(MatrixXd& m, const std::vector<int>& group, int n_groups) {
  if (group.empty()) return;
  MatrixXd sums = MatrixXd::Zero(n_groups, m.cols());
  std::vector<int> counts(n_groups, 0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    sums.row(group[i]) += m.row(i);
    ++counts[group[i]];
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) -= sums.row(group[i]) / counts[group[i]];
}

void check_inputs(Eigen::Index n, Eigen::Index k, const std::vector<std::string>& names,
                  const std::vector<int>& fe, const std::vector<int>& cluster) {
  if (n == 0) throw EstimationError("regression: no observations");
  if (static_cast<Eigen::Index>(names.size()) != k) throw DomainError("regression: names do not match columns");
  if (!fe.empty() && static_cast<Eigen::Index>(fe.size()) != n) throw DomainError("regression: fixed-effect ids length mismatch");
  if (static_cast<Eigen::Index>(cluster.size()) != n) throw DomainError("regression: cluster ids length mismatch");
}

// Columns that add nothing to the span of the ones before them.
void require_full_rank(const MatrixXd& x, const std::vector<std::string>& names, const char* what) {
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  std::vector<std::string> bad;
  MatrixXd kept(x.rows(), 0);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    MatrixXd trial(x.rows(), kept.cols() + 1);
    trial << kept, x.col(j);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(trial);
    qr.setThreshold(1e-10);
    if (x.col(j).norm() <= 1e-12 * scale * std::sqrt(double(x.rows())) || qr.rank() < trial.cols()) {
      bad.push_back(names[j]);
    } else {
      kept = trial;
    }
  }
  if (!bad.empty()) {
    std::string msg = std::string(what) + ": collinear columns after within-transformation:";
    for (const auto& b : bad) msg += " " + b;
    throw EstimationError(msg);
  }
}

MatrixXd cluster_meat(const MatrixXd& x, const VectorXd& u, const std::vector<int>& cluster, int n_clusters) {
  MatrixXd scores = MatrixXd::Zero(n_clusters, x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) scores.row(cluster[i]) += u(i) * x.row(i);
  return scores.transpose() * scores;
}

double small_sample_factor(int g, Eigen::Index n, Eigen::Index k) {
  if (g < 2) throw EstimationError("clustered covariance needs at least two clusters");
  if (n <= k) throw EstimationError("clustered covariance needs more observations than regressors");
  return double(g) / (g - 1) * double(n - 1) / double(n - k);
}

int used_clusters(const std::vector<int>& cluster) {
  std::vector<int> c(cluster);
  std::sort(c.begin(), c.end());
  return static_cast<int>(std::unique(c.begin(), c.end()) - c.begin());
}

std::vector<double> group_effects(const VectorXd& y, const MatrixXd& x, const VectorXd& b, const std::vector<int>& g,
                                  int n_groups) {
  std::vector<double> eff;
  if (g.empty()) return eff;
  eff.assign(n_groups, 0.0);
  std::vector<int> cnt(n_groups, 0);
  const VectorXd r = y - x * b;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    eff[g[i]] += r(i);
    ++cnt[g[i]];
  }
  for (int j = 0; j < n_groups; ++j)
    if (cnt[j] > 0) eff[j] /= cnt[j];
  return eff;
}

double r_squared(const VectorXd& y_within, const VectorXd& resid, bool centered) {
  const double mean = centered ? y_within.mean() : 0.0;
  const double tss = (y_within.array() - mean).square().sum();
  return tss > 0.0 ? 1.0 - resid.squaredNorm() / tss : 0.0;
}

}  // namespace

bool EstimateReport::has(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

double EstimateReport::coefficient(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ConfigError("estimate report has no coefficient '" + name + "'");
  return coef(it - names.begin());
}

EstimateReport ols_panel(const VectorXd& y, const MatrixXd& x, const std::vector<std::string>& names,
                         const std::vector<int>& fixed_effect_group, const std::vector<int>& cluster_group) {
  check_inputs(y.size(), x.cols(), names, fixed_effect_group, cluster_group);
  if (x.rows() != y.size()) throw DomainError("ols_panel: row mismatch");
  const int n_fe = count_groups(fixed_effect_group);
  const int n_cl = count_groups(cluster_group);

  MatrixXd xw = x;
  MatrixXd yw = y;
  demean(xw, fixed_effect_group, n_fe);
  demean(yw, fixed_effect_group, n_fe);
  require_full_rank(xw, names, "ols_panel");

  EstimateReport rep;
  rep.names = names;
  const MatrixXd xtx_inv = (xw.transpose() * xw).inverse();
  rep.coef = xtx_inv * (xw.transpose() * yw.col(0));
  const VectorXd u = yw.col(0) - xw * rep.coef;
  rep.n_obs = static_cast<int>(y.size());
  rep.n_clusters = used_clusters(cluster_group);
  rep.cov = small_sample_factor(rep.n_clusters, y.size(), x.cols()) * xtx_inv *
            cluster_meat(xw, u, cluster_group, n_cl) * xtx_inv;
  rep.se = rep.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  rep.r2 = r_squared(yw.col(0), u, fixed_effect_group.empty());
  rep.group_effects = group_effects(y, x, rep.coef, fixed_effect_group, n_fe);
  return rep;
}

EstimateReport tsls_panel(const VectorXd& y, const MatrixXd& endogenous, const MatrixXd& exogenous,
                          const MatrixXd& instruments, const std::vector<std::string>& names,
                          const std::vector<int>& fixed_effect_group, const std::vector<int>& cluster_group) {
  const Eigen::Index n = y.size();
  const Eigen::Index ke = endogenous.cols(), kx = exogenous.cols(), kz = instruments.cols();
  if (endogenous.rows() != n || exogenous.rows() != n || instruments.rows() != n)
    throw DomainError("tsls_panel: row mismatch");
  if (kz < ke) throw EstimationError("tsls_panel: fewer instruments than endogenous regressors");
  check_inputs(n, ke + kx, names, fixed_effect_group, cluster_group);
  const int n_fe = count_groups(fixed_effect_group);
  const int n_cl = count_groups(cluster_group);

  MatrixXd x(n, ke + kx), z(n, kz + kx);
  x << endogenous, exogenous;
  z << instruments, exogenous;
  MatrixXd xw = x, zw = z, yw = y;
  demean(xw, fixed_effect_group, n_fe);
  demean(zw, fixed_effect_group, n_fe);
  demean(yw, fixed_effect_group, n_fe);
  require_full_rank(xw, names, "tsls_panel");
  std::vector<std::string> znames;
  for (Eigen::Index j = 0; j < kz; ++j) znames.push_back("instrument_" + std::to_string(j));
  for (Eigen::Index j = 0; j < kx; ++j) znames.push_back(names[ke + j]);
  require_full_rank(zw, znames, "tsls_panel instruments");

  EstimateReport rep;
  rep.names = names;

  // First stages: F on the excluded instruments, homoskedastic form.
  const auto rss_on = [&](const MatrixXd& m, const VectorXd& v) {
    if (m.cols() == 0) return v.squaredNorm();
    const VectorXd b = m.colPivHouseholderQr().solve(v);
    return (v - m * b).squaredNorm();
  };
  const MatrixXd exog_w = zw.rightCols(kx);
  const Eigen::Index dof = n - (kz + kx) - (fixed_effect_group.empty() ? 0 : n_fe);
  for (Eigen::Index j = 0; j < ke; ++j) {
    const VectorXd v = xw.col(j);
    const double rss_u = rss_on(zw, v);
    const double rss_r = rss_on(exog_w, v);
    double f = std::numeric_limits<double>::infinity();
    if (dof > 0 && rss_u > 0.0) f = ((rss_r - rss_u) / double(kz)) / (rss_u / double(dof));
    rep.first_stage_f.push_back(f);
    if (!(f >= kWeakInstrumentF)) rep.weak_instruments = true;
  }

  const MatrixXd pz = zw * (zw.transpose() * zw).inverse() * zw.transpose();
  const MatrixXd xhat = pz * xw;
  require_full_rank(xhat, names, "tsls_panel projected regressors");
  const MatrixXd a_inv = (xhat.transpose() * xw).inverse();
  rep.coef = a_inv * (xhat.transpose() * yw.col(0));
  const VectorXd u = yw.col(0) - xw * rep.coef;
  rep.n_obs = static_cast<int>(n);
  rep.n_clusters = used_clusters(cluster_group);
  rep.cov = small_sample_factor(rep.n_clusters, n, ke + kx) * a_inv * cluster_meat(xhat, u, cluster_group, n_cl) *
            a_inv.transpose();
  rep.se = rep.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  rep.r2 = r_squared(yw.col(0), u, fixed_effect_group.empty());
  rep.group_effects = group_effects(y, x, rep.coef, fixed_effect_group, n_fe);
  return rep;
}

double demand_state(const EstimateReport& demand, double log_gdp, int year, double route_effect,
                    const RegimeCalendar& calendar) {
  double d = demand.coefficient(kLogGdp) * log_gdp + route_effect;
  const double a3 = demand.coefficient(kRegime79);
  const double a4 = demand.coefficient(kRegime83);
  switch (calendar.regime(year)) {
    case Regime::Collusive79: d += a3; break;
    case Regime::Collusive83: d += a4; break;
    case Regime::Competitive: break;
  }
  return d;
}

double supply_intercept(const EstimateReport& supply, const std::vector<std::pair<std::string, double>>& shifters,
                        double route_effect) {
  double g = route_effect;
  for (const auto& [name, value] : shifters) g += supply.coefficient(name) * value;
  return g;
}

// ---- likelihood ----

void validate_tallies(const ObservedTallies& data, const ProfitTable& profits, int n_entrants) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& o = data[i];
    const std::string where = " (observation " + std::to_string(i) + ", " + o.market + " " + std::to_string(o.year) + ")";
    if (o.t < 1 || o.t >= profits.horizon()) throw ConfigError("tally period outside 1..T-1" + where);
    if (!profits.space().contains(o.state)) throw ConfigError("state " + to_string(o.state) + " exceeds the caps" + where);
    if (!tally_consistent(o.state, o.tally)) throw ConsistencyError("tally inconsistent with state" + where);
    if (o.tally.entries + o.tally.entrant_quits != n_entrants)
      throw ConsistencyError("entrant tally does not add up to the number of potential entrants" + where);
  }
}

double observation_log_prob(const Observation& obs, const LevelCcps& ccps, int n_entrants) {
  double lp = std::log(entrant_profile_probability(n_entrants, obs.tally.entrant_quits, ccps.entrant));
  for (int l = 1; l <= kLevels; ++l)
    lp += std::log(level_profile_probability(obs.state.count(l), obs.tally.exits[l - 1], obs.tally.builds[l - 1],
                                             ccps.incumbent[l - 1]));
  return lp;
}

LikelihoodResult dynamic_log_likelihood(const DynamicParams& theta, const ObservedTallies& data,
                                        const ProfitTable& profits, const SolverOptions& options) {
  validate_tallies(data, profits, options.n_entrants);
  LikelihoodResult res;
  const auto penalize = [&](std::string why) {
    res.value = kLikelihoodPenalty;
    res.penalized = true;
    res.reason = std::move(why);
    return res;
  };
  if (data.empty()) return res;
  try {
    theta.validate();
  } catch (const ValidationError& e) {
    return penalize(e.what());
  }
  std::optional<PolicySolution> policy;
  try {
    policy.emplace(backward_induction(profits, theta, options));
  } catch (const SolverError& e) {
    return penalize(e.what());
  }
  res.terms.reserve(data.size());
  double total = 0.0;
  for (const auto& o : data) {
    const double lp = observation_log_prob(o, policy->level_ccps(o.t, policy->space().index(o.state)), options.n_entrants);
    res.terms.push_back(lp);
    total += lp;
  }
  if (!std::isfinite(total)) return penalize("non-finite log-likelihood");
  res.value = total;
  return res;
}

// ---- Nelder-Mead ----

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                             const NelderMeadOptions& opt) {
  const std::size_t n = x0.size();
  NelderMeadResult res;
  const auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    const double v = f(x);
    return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
  };
  if (n == 0) {
    res.x = x0;
    res.value = eval(x0);
    res.converged = true;
    return res;
  }

  std::vector<std::vector<double>> pts{x0};
  for (std::size_t i = 0; i < n; ++i) {
    auto p = x0;
    p[i] += std::max(opt.rel_step * std::abs(x0[i]), opt.abs_floor);
    pts.push_back(std::move(p));
  }
  std::vector<double> vals;
  for (const auto& p : pts) vals.push_back(eval(p));

  std::vector<std::size_t> order(n + 1);
  const auto combine = [&](const std::vector<double>& c, const std::vector<double>& p, double coef) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = c[i] + coef * (p[i] - c[i]);
    return out;
  };

  while (true) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
    res.trace.push_back(vals[best]);

    double diam = 0.0;
    for (const auto& p : pts)
      for (std::size_t i = 0; i < n; ++i) diam = std::max(diam, std::abs(p[i] - pts[best][i]));
    const double spread = vals[worst] - vals[best];
    if (diam < opt.x_tol && spread < opt.f_tol) {
      res.converged = true;
      break;
    }
    if (res.evaluations >= opt.max_evals) break;
    ++res.iterations;

    std::vector<double> c(n, 0.0);
    for (std::size_t k = 0; k <= n; ++k)
      if (k != worst)
        for (std::size_t i = 0; i < n; ++i) c[i] += pts[k][i] / double(n);

    const auto xr = combine(c, pts[worst], -1.0);
    const double fr = eval(xr);
    if (fr < vals[best]) {
      const auto xe = combine(c, pts[worst], -2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const auto xc = outside ? combine(c, xr, 0.5) : combine(c, pts[worst], 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t k = 0; k <= n; ++k) {
      if (k == best) continue;
      pts[k] = combine(pts[best], pts[k], 0.5);
      vals[k] = eval(pts[k]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  res.x = pts[best];
  res.value = vals[best];
  return res;
}

// ---- dynamic MLE ----

std::array<double, kDynamicParams> to_array(const DynamicParams& p) {
  return {p.exit_cost, p.operation_cost, p.entry_cost, p.invest_cost_low, p.invest_cost_high, p.logit_scale};
}

DynamicParams from_array(const std::array<double, kDynamicParams>& a, double discount) {
  DynamicParams p;
  p.exit_cost = a[0];
  p.operation_cost = a[1];
  p.entry_cost = a[2];
  p.invest_cost_low = a[3];
  p.invest_cost_high = a[4];
  p.logit_scale = a[5];
  p.discount = discount;
  return p;
}

DynamicEstimate estimate_dynamic(const ObservedTallies& data, const ProfitTable& profits, const DynamicParams& init,
                                 const DynamicEstimateOptions& options) {
  init.validate();
  validate_tallies(data, profits, options.solver.n_entrants);
  auto base = to_array(init);
  base[5] = std::log(base[5]);
  std::vector<int> free_idx;
  std::vector<double> x0;
  for (int i = 0; i < kDynamicParams; ++i)
    if (options.free[i]) {
      free_idx.push_back(i);
      x0.push_back(base[i]);
    }
  const auto unpack = [&](const std::vector<double>& x) {
    auto a = base;
    for (std::size_t k = 0; k < free_idx.size(); ++k) a[free_idx[k]] = x[k];
    a[5] = std::exp(a[5]);
    return from_array(a, init.discount);
  };
  const auto objective = [&](const std::vector<double>& x) {
    return -dynamic_log_likelihood(unpack(x), data, profits, options.solver).value;
  };
  const auto nm = nelder_mead(objective, x0, options.nelder_mead);

  DynamicEstimate out;
  out.theta = unpack(nm.x);
  out.log_likelihood = -nm.value;
  out.evaluations = nm.evaluations;
  out.converged = nm.converged;
  if (!nm.converged) out.warning = "evaluation budget exhausted; returning the best vertex";
  for (double v : nm.trace) out.trace.push_back(-v);
  return out;
}

// ---- likelihood-ratio intervals ----

double chi_square_critical(double level, int dof) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
  return boost::math::quantile(boost::math::chi_squared(dof), level);
}

std::vector<LrInterval> lr_intervals(const std::function<double(int, double)>& ll, const std::vector<double>& estimate,
                                     const std::vector<std::string>& names, double ll_hat, const LrOptions& opt) {
  if (opt.grid_points < 3 || opt.grid_points % 2 == 0) throw DomainError("LR grid needs an odd number of points >= 3");
  if (names.size() != estimate.size()) throw DomainError("LR: names do not match parameters");
  const double crit = chi_square_critical(opt.level);
  const auto accepted = [&](double v) { return 2.0 * (ll_hat - v) <= crit; };
  const int half = opt.grid_points / 2;

  std::vector<LrInterval> out;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    LrInterval iv;
    iv.name = names[i];
    iv.estimate = estimate[i];
    const double w = std::max(opt.rel_half_width * std::abs(estimate[i]), opt.abs_floor);
    const double step = w / half;
    // Walk outward from the estimate on each side until the first rejected point.
    const auto side = [&](double dir, bool& at_edge, bool& first_rejected) {
      double last = estimate[i];
      for (int k = 1; k <= half; ++k) {
        const double x = estimate[i] + dir * k * step;
        if (!accepted(ll(static_cast<int>(i), x))) {
          first_rejected = k == 1;
          if (!opt.refine) return last;
          double a = last, b = x;  // a accepted, b rejected
          for (int r = 0; r < opt.refine_steps; ++r) {
            const double m = 0.5 * (a + b);
            (accepted(ll(static_cast<int>(i), m)) ? a : b) = m;
          }
          return a;
        }
        last = x;
      }
      at_edge = true;
      return last;
    };
    bool lo_rejected = false, hi_rejected = false;
    iv.lo = side(-1.0, iv.lo_at_edge, lo_rejected);
    iv.hi = side(+1.0, iv.hi_at_edge, hi_rejected);
    iv.degenerate = lo_rejected && hi_rejected;
    out.push_back(iv);
  }
  return out;
}

std::vector<LrInterval> lr_confidence_intervals(const DynamicParams& theta_hat, double ll_hat,
                                                const ObservedTallies& data, const ProfitTable& profits,
                                                const SolverOptions& solver, const LrOptions& options) {
  const auto base = to_array(theta_hat);
  const auto ll = [&](int i, double v) {
    auto a = base;
    a[i] = v;
    return dynamic_log_likelihood(from_array(a, theta_hat.discount), data, profits, solver).value;
  };
  return lr_intervals(ll, std::vector<double>(base.begin(), base.end()),
                      std::vector<std::string>(kDynamicParamNames.begin(), kDynamicParamNames.end()), ll_hat, options);
}

}  // namespace liner
