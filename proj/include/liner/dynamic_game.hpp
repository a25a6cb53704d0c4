#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "liner/state_space.hpp"

namespace liner {

// Costs in 100 billion USD.
struct DynamicParams {
  double exit_cost = 0.0;         // psi
  double operation_cost = 0.0;    // phi
  double entry_cost = 0.0;        // kappa^e
  double invest_cost_low = 0.0;   // iota_1, levels 1-2
  double invest_cost_high = 0.0;  // iota_2, level 3
  double logit_scale = 1.0;       // sigma
  double discount = 0.9;          // beta

  void validate() const;
};

enum class Actor : int { L1 = 0, L2 = 1, L3 = 2, L4 = 3, Entrant = 4 };
inline constexpr int kActors = 5;

inline Actor incumbent(int level) { return static_cast<Actor>(level - 1); }
inline int level_of(Actor a) { return static_cast<int>(a) + 1; }
inline bool is_entrant(Actor a) { return a == Actor::Entrant; }
std::string to_string(Actor a);
int action_count(Actor a);
char action_code(Actor a, int action);

// How the top level's build action is treated: the default keeps it with a
// deterministic value of exactly zero; Exclude removes it from the choice set.
enum class TopBuildMode { ZeroValue, Exclude };

struct SolverOptions {
  Caps caps = kDefaultCaps;
  int n_entrants = 4;
  double tolerance = 1e-6;  // summed absolute CCP gap per state
  int max_iters = 10000;
  TopBuildMode top_build = TopBuildMode::ZeroValue;
};

// Static profit of a level-l incumbent, pi[t][state][l], in 100 billion USD. Periods are 1-based.
class ProfitTable {
 public:
  ProfitTable(int horizon, Caps caps);

  int horizon() const { return horizon_; }
  const StateSpace& space() const { return space_; }
  double at(int t, int state, int level) const { return data_[offset(t, state, level)]; }
  void set(int t, int state, int level, double v) { data_[offset(t, state, level)] = v; }
  void add(double delta);

 private:
  std::size_t offset(int t, int state, int level) const {
    return (static_cast<std::size_t>(t - 1) * space_.size() + state) * kLevels + (level - 1);
  }
  int horizon_;
  StateSpace space_;
  std::vector<double> data_;
};

// Per-period cost of an action (positive = outlay).
double per_period_cost(Actor actor, int action, const DynamicParams& params);

double terminal_value(double profit, double beta);

// Deterministic choice-specific value given the expected next-period value of the action.
double csvf(Actor actor, int action, double continuation, const DynamicParams& params,
            TopBuildMode mode = TopBuildMode::ZeroValue);

// Value of period t+1 indexed by (state, level), plus, for each landing level, the
// value a firm receives when the rivals' next state is j and it lands at that level.
class ContinuationValues {
 public:
  ContinuationValues(const StateSpace& space, std::vector<double> values);

  double value(int state, int level) const { return values_[state * kLevels + level - 1]; }
  // V(level, clamp(state_j + e_level)); zero when the level has cap 0.
  const std::vector<double>& landing(int level) const { return landing_[level - 1]; }

 private:
  std::vector<double> values_;
  std::array<std::vector<double>, kLevels> landing_;
};

// Own next level: keep -> level, build -> level+1, entry -> 1. 0 for exit/quit.
int next_level(Actor actor, int action);

double expected_continuation(std::span<const double> kernel, std::span<const double> landing_values);

// Expected next value for `actor` taking `action` at `state`, integrating over the
// rivals' joint transition under `ccps`.
double expected_continuation(const StateSpace& space, Actor actor, int action, const IndustryState& state,
                             const ContinuationValues& next, const LevelCcps& ccps, int n_entrants,
                             KernelWorkspace& ws);

struct StateSolution {
  std::array<ChoiceRow, kActors> ccp{};
  std::array<ChoiceRow, kActors> ev{};     // expected continuation per action
  std::array<ChoiceRow, kActors> csvf{};   // deterministic choice-specific values
  std::array<ChoiceRow, kActors> iterate{};  // damped iterate after the last sweep
  int sweeps = 0;
  double gap = 0.0;
};

bool actor_present(Actor a, const IndustryState& s, int n_entrants);

// CCP fixed point at one state. Sweeps levels 4 -> 1, then entrants, moving each row
// to the midpoint of old and new; if that has not converged after a fixed budget,
// switches to damped Newton on the simultaneous-response residual, then to
// sweeps with a shrinking step. Returned rows are the responses of the last sweep.
StateSolution solve_state_fixed_point(const StateSpace& space, const IndustryState& state,
                                      const ContinuationValues& next, const DynamicParams& params,
                                      const SolverOptions& options, const LevelCcps& warm_start,
                                      KernelWorkspace& ws);

// Largest change (summed over actions) any row undergoes in one more midpoint
// sweep started from `current.iterate`.
double fixed_point_residual(const StateSpace& space, const IndustryState& state, const ContinuationValues& next,
                            const DynamicParams& params, const SolverOptions& options, const StateSolution& current);

class PolicySolution {
 public:
  PolicySolution(int horizon, Caps caps, int n_entrants);

  int horizon() const { return horizon_; }
  int n_entrants() const { return n_entrants_; }
  const StateSpace& space() const { return space_; }

  // Decision periods are 1..T-1; values cover 1..T.
  const ChoiceRow& ccp(int t, int state, Actor a) const { return ccp_[slot(t, state, a)]; }
  ChoiceRow& ccp(int t, int state, Actor a) { return ccp_[slot(t, state, a)]; }
  const ChoiceRow& ev(int t, int state, Actor a) const { return ev_[slot(t, state, a)]; }
  ChoiceRow& ev(int t, int state, Actor a) { return ev_[slot(t, state, a)]; }
  double value(int t, int state, Actor a) const { return value_[slot(t, state, a)]; }
  double& value(int t, int state, Actor a) { return value_[slot(t, state, a)]; }
  LevelCcps level_ccps(int t, int state) const;

  int total_sweeps = 0;

 private:
  std::size_t slot(int t, int state, Actor a) const {
    return (static_cast<std::size_t>(t - 1) * space_.size() + state) * kActors + static_cast<int>(a);
  }
  int horizon_;
  int n_entrants_;
  StateSpace space_;
  std::vector<ChoiceRow> ccp_;
  std::vector<ChoiceRow> ev_;
  std::vector<double> value_;
};

// Fills CCPs, expected continuations and values of period t (1..T-1) at every
// state, given period t+1 in `policy`. Absent actors get uniform rows.
void solve_period_fixed_point(int t, const ProfitTable& profits, const DynamicParams& params,
                              const SolverOptions& options, PolicySolution& policy);

PolicySolution backward_induction(const ProfitTable& profits, const DynamicParams& params,
                                  const SolverOptions& options);

// CSV columns: t,state_index,n1,n2,n3,n4,actor,action,ccp,value
void write_policy_csv(const PolicySolution& policy, std::ostream& out);

}  // namespace liner
