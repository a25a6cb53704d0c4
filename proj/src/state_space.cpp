#include "liner/state_space.hpp"

#include <algorithm>
#include <cmath>

#include "liner/errors.hpp"

namespace liner {

int discretize_tonnage(double tonnage, const LevelCutoffs& cutoffs) {
  if (!(tonnage > 0.0)) throw DomainError("discretize_tonnage: tonnage must be positive");
  for (int l = 0; l < 3; ++l)
    if (tonnage <= std::exp(cutoffs.log_bounds[l])) return l + 1;
  return 4;
}

Market parse_market(const std::string& name) {
  if (name == "asia-europe" || name == "asia_europe" || name == "AsiaEurope") return Market::AsiaEurope;
  if (name == "transpacific" || name == "Transpacific") return Market::Transpacific;
  if (name == "transatlantic" || name == "Transatlantic") return Market::Transatlantic;
  throw ConfigError("unknown market '" + name + "'");
}

std::string to_string(Market m) {
  switch (m) {
    case Market::AsiaEurope: return "asia-europe";
    case Market::Transpacific: return "transpacific";
    case Market::Transatlantic: return "transatlantic";
  }
  return "?";
}

RepresentativeTonnage RepresentativeTonnage::for_market(Market m) {
  switch (m) {
    case Market::AsiaEurope: return {{8.0, 9.0, 10.0, 10.5}};
    case Market::Transpacific: return {{8.0, 8.5, 9.5, 10.5}};
    case Market::Transatlantic: return {{7.2, 9.2, 10.1, 12.1}};
  }
  throw ConfigError("unknown market");
}

double RepresentativeTonnage::tonnage(int level) const {
  if (level < 1 || level > kLevels) throw DomainError("representative_tonnage: level out of range");
  return std::exp(log_values[level - 1]);
}

double representative_tonnage(int level, Market market) {
  return RepresentativeTonnage::for_market(market).tonnage(level);
}

std::string to_string(const IndustryState& s) {
  return "(" + std::to_string(s.n[0]) + "," + std::to_string(s.n[1]) + "," + std::to_string(s.n[2]) + "," +
         std::to_string(s.n[3]) + ")";
}

StateSpace::StateSpace(Caps caps) : caps_(caps) {
  int stride = 1;
  for (int l = kLevels - 1; l >= 0; --l) {
    if (caps_[l] < 0) throw DomainError("StateSpace: caps must be non-negative");
    stride_[l] = stride;
    stride *= caps_[l] + 1;
  }
  size_ = stride;
}

bool StateSpace::contains(const IndustryState& s) const {
  for (int l = 0; l < kLevels; ++l)
    if (s.n[l] < 0 || s.n[l] > caps_[l]) return false;
  return true;
}

int StateSpace::index(const IndustryState& s) const {
  if (!contains(s)) throw DomainError("state " + to_string(s) + " outside the enumerated space");
  int idx = 0;
  for (int l = 0; l < kLevels; ++l) idx += s.n[l] * stride_[l];
  return idx;
}

IndustryState StateSpace::state(int index) const {
  if (index < 0 || index >= size_) throw DomainError("state index out of range");
  IndustryState s;
  for (int l = 0; l < kLevels; ++l) {
    s.n[l] = index / stride_[l];
    index %= stride_[l];
  }
  return s;
}

std::vector<IndustryState> StateSpace::states() const {
  std::vector<IndustryState> out;
  out.reserve(size_);
  for (int i = 0; i < size_; ++i) out.push_back(state(i));
  return out;
}

std::vector<IndustryState> enumerate_states(const Caps& caps) { return StateSpace(caps).states(); }

bool tally_consistent(const IndustryState& s, const ActionTally& tally) {
  for (int l = 0; l < kLevels; ++l) {
    if (tally.exits[l] < 0 || tally.builds[l] < 0) return false;
    if (tally.exits[l] + tally.builds[l] > s.n[l]) return false;
  }
  return tally.entrant_quits >= 0 && tally.entries >= 0;
}

IndustryState apply_transition(const IndustryState& s, const ActionTally& t, const Caps& caps) {
  if (!tally_consistent(s, t)) throw PreconditionError("apply_transition: tally inconsistent with state " + to_string(s));
  IndustryState next;
  next.n[0] = s.n[0] + t.entries - t.builds[0] - t.exits[0];
  next.n[1] = s.n[1] + t.builds[0] - t.builds[1] - t.exits[1];
  next.n[2] = s.n[2] + t.builds[1] - t.builds[2] - t.exits[2];
  next.n[3] = s.n[3] + t.builds[2] - t.exits[3];
  for (int l = 0; l < kLevels; ++l) next.n[l] = std::min(next.n[l], caps[l]);
  return next;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

double level_profile_probability(int n, int exits, int builds, const ChoiceRow& row) {
  const int keeps = n - exits - builds;
  if (exits < 0 || builds < 0 || keeps < 0) return 0.0;
  return binomial(n, exits) * binomial(n - exits, builds) * detail::ipow(row[kExit], exits) * detail::ipow(row[kKeep], keeps) *
         detail::ipow(row[kBuild], builds);
}

double entrant_profile_probability(int n, int quits, const ChoiceRow& row) {
  if (quits < 0 || quits > n) return 0.0;
  return binomial(n, quits) * detail::ipow(row[kQuit], quits) * detail::ipow(row[kEnter], n - quits);
}

std::vector<ProfileOutcome> level_profile_prob(int n, const ChoiceRow& row) {
  std::vector<ProfileOutcome> out;
  for (int ex = 0; ex <= n; ++ex)
    for (int b = 0; ex + b <= n; ++b) out.push_back({ex, b, level_profile_probability(n, ex, b, row)});
  return out;
}

std::vector<ProfileOutcome> entrant_profile_prob(int n, const ChoiceRow& row) {
  std::vector<ProfileOutcome> out;
  for (int q = 0; q <= n; ++q) out.push_back({q, n - q, entrant_profile_probability(n, q, row)});
  return out;
}

double TransitionDistribution::total() const {
  double t = 0.0;
  for (const auto& [s, p] : entries) t += p;
  return t;
}

double TransitionDistribution::prob(const IndustryState& s) const {
  for (const auto& [state, p] : entries)
    if (state == s) return p;
  return 0.0;
}

void next_state_kernel(const StateSpace& space, const IndustryState& counts, int n_entrants, const LevelCcps& ccps,
                       KernelWorkspace& ws, std::vector<double>& out) {
  out.assign(space.size(), 0.0);
  for_each_next_state(space, counts, n_entrants, ccps, ws, [&](int idx, double p) { out[idx] += p; });
}

TransitionDistribution transition_distribution(const IndustryState& s, const LevelCcps& ccps, int n_entrants,
                                               const Caps& caps) {
  const StateSpace space(caps);
  if (!space.contains(s)) throw DomainError("transition_distribution: state " + to_string(s) + " exceeds caps");
  KernelWorkspace ws;
  std::vector<double> dense;
  next_state_kernel(space, s, n_entrants, ccps, ws, dense);
  TransitionDistribution dist;
  for (int i = 0; i < space.size(); ++i)
    if (dense[i] > 0.0) dist.entries.emplace_back(space.state(i), dense[i]);
  return dist;
}

}  // namespace liner
