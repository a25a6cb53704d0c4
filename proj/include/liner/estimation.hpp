#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "liner/dynamic_game.hpp"
#include "liner/static_market.hpp"

namespace liner {

// ---- static panel regressions ----

struct EstimateReport {
  std::vector<std::string> names;
  Eigen::VectorXd coef;
  Eigen::VectorXd se;  // cluster-robust
  Eigen::MatrixXd cov;
  double r2 = 0.0;     // within R^2 when fixed effects are absorbed
  int n_obs = 0;
  int n_clusters = 0;
  std::vector<double> group_effects;  // recovered fixed effects, indexed by group id
  // 2SLS only: first-stage F on the excluded instruments, one per endogenous regressor.
  std::vector<double> first_stage_f;
  bool weak_instruments = false;

  double coefficient(const std::string& name) const;  // ConfigError if absent
  bool has(const std::string& name) const;
};

// Group ids are 0-based; an empty fixed_effect_group means no absorption.
// Clustered sandwich with the G/(G-1) (N-1)/(N-K) correction.
EstimateReport ols_panel(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, const std::vector<std::string>& names,
                         const std::vector<int>& fixed_effect_group, const std::vector<int>& cluster_group);

// Regressor order in the report: endogenous columns, then exogenous.
inline constexpr double kWeakInstrumentF = 10.0;
EstimateReport tsls_panel(const Eigen::VectorXd& y, const Eigen::MatrixXd& endogenous, const Eigen::MatrixXd& exogenous,
                          const Eigen::MatrixXd& instruments, const std::vector<std::string>& names,
                          const std::vector<int>& fixed_effect_group, const std::vector<int>& cluster_group);

// Coefficient names expected by the two helpers below.
inline constexpr const char* kLogGdp = "log_gdp";
inline constexpr const char* kRegime79 = "regime_1973_1979";
inline constexpr const char* kRegime83 = "regime_1980_1983";

// alpha_2 X + alpha_3 1(year <= 1979) + alpha_4 1(1980..1983) + alpha_r, price term excluded.
double demand_state(const EstimateReport& demand, double log_gdp, int year, double route_effect,
                    const RegimeCalendar& calendar = {});

// gamma_r + sum_k gamma_k Y_k over the named cost shifters.
double supply_intercept(const EstimateReport& supply, const std::vector<std::pair<std::string, double>>& shifters,
                        double route_effect);

// ---- dynamic likelihood ----

// One market-year transition: the state at period t and the realized actions.
struct Observation {
  std::string market;
  int year = 0;
  int t = 0;  // decision period, 1..T-1
  IndustryState state;
  ActionTally tally;
};
using ObservedTallies = std::vector<Observation>;

inline constexpr double kLikelihoodPenalty = -1e12;

struct LikelihoodResult {
  double value = 0.0;
  std::vector<double> terms;  // per observation, same order as the input
  bool penalized = false;
  std::string reason;
};

// Log-probability of one observed tally at solved CCPs.
double observation_log_prob(const Observation& obs, const LevelCcps& ccps, int n_entrants);

// Solves the game at theta and sums log[P^pe * prod_l P^l] over observations.
// Solver failure or a non-finite total yields kLikelihoodPenalty with penalized set.
LikelihoodResult dynamic_log_likelihood(const DynamicParams& theta, const ObservedTallies& data,
                                        const ProfitTable& profits, const SolverOptions& options);

void validate_tallies(const ObservedTallies& data, const ProfitTable& profits, int n_entrants);

// ---- Nelder-Mead ----

struct NelderMeadOptions {
  double rel_step = 0.10;
  double abs_floor = 0.01;
  double x_tol = 1e-5;  // simplex diameter
  double f_tol = 1e-7;  // value spread
  int max_evals = 2000;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;  // minimized value
  int evaluations = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // best value after each iteration
};

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x0,
                             const NelderMeadOptions& options = {});

// ---- dynamic MLE ----

// Parameter order used for vectors, masks and reports.
inline constexpr int kDynamicParams = 6;
inline constexpr std::array<const char*, kDynamicParams> kDynamicParamNames{"psi", "phi", "kappa_e", "iota1", "iota2",
                                                                            "sigma"};
std::array<double, kDynamicParams> to_array(const DynamicParams& p);
DynamicParams from_array(const std::array<double, kDynamicParams>& a, double discount);

struct DynamicEstimateOptions {
  std::array<bool, kDynamicParams> free{true, true, true, true, true, true};
  NelderMeadOptions nelder_mead;
  SolverOptions solver;
};

struct DynamicEstimate {
  DynamicParams theta;
  double log_likelihood = 0.0;
  int evaluations = 0;
  bool converged = false;
  std::string warning;
  std::vector<double> trace;  // best log-likelihood per iteration
};

// Maximizes over the free coordinates of (psi, phi, kappa_e, iota1, iota2, log sigma); beta is fixed.
DynamicEstimate estimate_dynamic(const ObservedTallies& data, const ProfitTable& profits, const DynamicParams& init,
                                 const DynamicEstimateOptions& options);

// ---- likelihood-ratio intervals ----

struct LrOptions {
  double level = 0.90;
  int grid_points = 11;
  double rel_half_width = 0.5;
  double abs_floor = 0.01;
  bool refine = true;  // bisect between the last accepted and first rejected grid point
  int refine_steps = 12;
};

struct LrInterval {
  std::string name;
  double estimate = 0.0;
  double lo = 0.0, hi = 0.0;
  bool degenerate = false;  // no grid point other than the estimate accepted
  bool lo_at_edge = false, hi_at_edge = false;  // reached the end of the grid
};

double chi_square_critical(double level, int dof = 1);

// Generic version: ll(i, value) evaluates the log-likelihood with coordinate i set to value.
std::vector<LrInterval> lr_intervals(const std::function<double(int, double)>& ll, const std::vector<double>& estimate,
                                     const std::vector<std::string>& names, double ll_hat, const LrOptions& options);

std::vector<LrInterval> lr_confidence_intervals(const DynamicParams& theta_hat, double ll_hat,
                                                const ObservedTallies& data, const ProfitTable& profits,
                                                const SolverOptions& solver, const LrOptions& options = {});

}  // namespace liner
