#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <string>
#include <vector>

namespace liner {

inline constexpr int kLevels = 4;

// Upper tonnage bounds (log TEU) of levels 1..3; level 4 is open above.
struct LevelCutoffs {
  std::array<double, 3> log_bounds{8.5, 9.5, 10.5};
};

int discretize_tonnage(double tonnage, const LevelCutoffs& cutoffs = {});

enum class Market { AsiaEurope, Transpacific, Transatlantic };

Market parse_market(const std::string& name);
std::string to_string(Market m);

// Log-TEU tonnage used to stand in for a level-l firm in the static market.
struct RepresentativeTonnage {
  std::array<double, kLevels> log_values{};

  static RepresentativeTonnage for_market(Market m);
  double tonnage(int level) const;
};

double representative_tonnage(int level, Market market);

struct IndustryState {
  std::array<int, kLevels> n{};  // n[l-1] = number of level-l incumbents

  int count(int level) const { return n[level - 1]; }
  int total() const { return n[0] + n[1] + n[2] + n[3]; }
  auto operator<=>(const IndustryState&) const = default;
};

std::string to_string(const IndustryState& s);

using Caps = std::array<int, kLevels>;

inline constexpr Caps kDefaultCaps{10, 10, 10, 10};

// Lexicographic enumeration of all states with n[l] <= caps[l] (N1 most significant).
class StateSpace {
 public:
  explicit StateSpace(Caps caps);

  const Caps& caps() const { return caps_; }
  int size() const { return size_; }
  bool contains(const IndustryState& s) const;
  int index(const IndustryState& s) const;
  IndustryState state(int index) const;
  std::vector<IndustryState> states() const;

 private:
  Caps caps_;
  std::array<int, kLevels> stride_{};
  int size_ = 0;
};

std::vector<IndustryState> enumerate_states(const Caps& caps);

// Realized actions of one market-year.
struct ActionTally {
  std::array<int, kLevels> exits{};
  std::array<int, kLevels> builds{};
  int entrant_quits = 0;
  int entries = 0;

  int keeps(const IndustryState& s, int level) const {
    return s.count(level) - exits[level - 1] - builds[level - 1];
  }
  auto operator<=>(const ActionTally&) const = default;
};

bool tally_consistent(const IndustryState& s, const ActionTally& tally);

IndustryState apply_transition(const IndustryState& s, const ActionTally& tally, const Caps& caps = kDefaultCaps);

// Choice probabilities of one actor type. Incumbents use {exit, keep, build};
// potential entrants use {quit, enter} and leave the last slot at zero.
using ChoiceRow = std::array<double, 3>;

inline constexpr int kExit = 0;
inline constexpr int kKeep = 1;
inline constexpr int kBuild = 2;
inline constexpr int kQuit = 0;
inline constexpr int kEnter = 1;

struct ProfileOutcome {
  int exits = 0;
  int builds = 0;  // entries for potential entrants
  double prob = 0.0;
};

double binomial(int n, int k);

// C(n,ex) C(n-ex,b) px^ex pk^(n-ex-b) pb^b
double level_profile_probability(int n, int exits, int builds, const ChoiceRow& row);
// C(n,quits) pq^quits pe^(n-quits)
double entrant_profile_probability(int n, int quits, const ChoiceRow& row);

std::vector<ProfileOutcome> level_profile_prob(int n, const ChoiceRow& row);
std::vector<ProfileOutcome> entrant_profile_prob(int n, const ChoiceRow& row);

struct LevelCcps {
  std::array<ChoiceRow, kLevels> incumbent{};
  ChoiceRow entrant{};
};

struct TransitionDistribution {
  std::vector<std::pair<IndustryState, double>> entries;

  double total() const;
  double prob(const IndustryState& s) const;
};

// Scratch buffers for the staged convolution below; reuse across calls.
struct KernelWorkspace {
  std::vector<double> a, b;
  std::vector<ProfileOutcome> outcomes;
};

namespace detail {

inline double ipow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

inline void fill_level_outcomes(int n, const ChoiceRow& row, std::vector<ProfileOutcome>& out) {
  out.clear();
  for (int ex = 0; ex <= n; ++ex)
    for (int b = 0; ex + b <= n; ++b) {
      const double p = level_profile_probability(n, ex, b, row);
      if (p > 0.0) out.push_back({ex, b, p});
    }
}

}  // namespace detail

// Staged convolution, top level first. Each stage finalizes the count of the
// level above it (which only receives builders from the current level) and
// carries the survivors that stay at the current level. Clamping a carry
// early is exact because later stages only add to it before the final clamp.
// Buffers are sized by the reachable ranges, not by the caps.
// emit(state_index, prob) may be called more than once per index.
template <class Emit>
void for_each_next_state(const StateSpace& space, const IndustryState& counts, int n_entrants, const LevelCcps& ccps,
                         KernelWorkspace& ws, Emit&& emit) {
  const Caps& cap = space.caps();
  const auto& n = counts.n;
  auto& A = ws.a;
  auto& B = ws.b;
  auto& outcomes = ws.outcomes;

  // Level 4: exits leave, keepers and builders stay.
  const int a4 = std::min(n[3], cap[3]) + 1;
  A.assign(a4, 0.0);
  {
    const double px = ccps.incumbent[3][kExit];
    const double ps = ccps.incumbent[3][kKeep] + ccps.incumbent[3][kBuild];
    for (int ex = 0; ex <= n[3]; ++ex) {
      const double p = binomial(n[3], ex) * detail::ipow(px, ex) * detail::ipow(ps, n[3] - ex);
      if (p > 0.0) A[std::min(n[3] - ex, cap[3])] += p;
    }
  }

  // Level 3 -> B[n4'][c3].
  const int d4 = std::min(n[3] + n[2], cap[3]) + 1;
  const int c3d = std::min(n[2], cap[2]) + 1;
  B.assign(static_cast<std::size_t>(d4) * c3d, 0.0);
  detail::fill_level_outcomes(n[2], ccps.incumbent[2], outcomes);
  for (int m4 = 0; m4 < a4; ++m4) {
    const double pa = A[m4];
    if (pa == 0.0) continue;
    for (const auto& o : outcomes) {
      const int n4 = std::min(m4 + o.builds, cap[3]);
      const int c3 = std::min(n[2] - o.exits - o.builds, cap[2]);
      B[n4 * c3d + c3] += pa * o.prob;
    }
  }

  // Level 2 -> A[n4'][n3'][c2].
  const int d3 = std::min(n[2] + n[1], cap[2]) + 1;
  const int c2d = std::min(n[1], cap[1]) + 1;
  A.assign(static_cast<std::size_t>(d4) * d3 * c2d, 0.0);
  detail::fill_level_outcomes(n[1], ccps.incumbent[1], outcomes);
  for (int m4 = 0; m4 < d4; ++m4)
    for (int c3 = 0; c3 < c3d; ++c3) {
      const double pb = B[m4 * c3d + c3];
      if (pb == 0.0) continue;
      for (const auto& o : outcomes) {
        const int n3 = std::min(c3 + o.builds, cap[2]);
        const int c2 = std::min(n[1] - o.exits - o.builds, cap[1]);
        A[(m4 * d3 + n3) * c2d + c2] += pb * o.prob;
      }
    }

  // Level 1 -> B[n4'][n3'][n2'][c1].
  const int d2 = std::min(n[1] + n[0], cap[1]) + 1;
  const int c1d = std::min(n[0], cap[0]) + 1;
  B.assign(static_cast<std::size_t>(d4) * d3 * d2 * c1d, 0.0);
  detail::fill_level_outcomes(n[0], ccps.incumbent[0], outcomes);
  for (int m4 = 0; m4 < d4; ++m4)
    for (int m3 = 0; m3 < d3; ++m3)
      for (int c2 = 0; c2 < c2d; ++c2) {
        const double pa = A[(m4 * d3 + m3) * c2d + c2];
        if (pa == 0.0) continue;
        for (const auto& o : outcomes) {
          const int n2 = std::min(c2 + o.builds, cap[1]);
          const int c1 = std::min(n[0] - o.exits - o.builds, cap[0]);
          B[((m4 * d3 + m3) * d2 + n2) * c1d + c1] += pa * o.prob;
        }
      }

  // Entrants land at level 1.
  outcomes.clear();
  for (int q = 0; q <= n_entrants; ++q) {
    const double p = entrant_profile_probability(n_entrants, q, ccps.entrant);
    if (p > 0.0) outcomes.push_back({q, n_entrants - q, p});
  }
  const int s3 = cap[3] + 1;  // lexicographic strides, N1 most significant
  const int s2 = s3 * (cap[2] + 1);
  const int s1 = s2 * (cap[1] + 1);
  for (int m4 = 0; m4 < d4; ++m4)
    for (int m3 = 0; m3 < d3; ++m3)
      for (int m2 = 0; m2 < d2; ++m2)
        for (int c1 = 0; c1 < c1d; ++c1) {
          const double pb = B[((m4 * d3 + m3) * d2 + m2) * c1d + c1];
          if (pb == 0.0) continue;
          const int base = m2 * s2 + m3 * s3 + m4;
          for (const auto& o : outcomes) emit(std::min(c1 + o.builds, cap[0]) * s1 + base, pb * o.prob);
        }
}

// Next-state distribution over space.states() when `counts` incumbents and
// `n_entrants` potential entrants act independently according to `ccps`.
// `out` is resized to space.size(). Overflowing coordinates are clamped to caps.
void next_state_kernel(const StateSpace& space, const IndustryState& counts, int n_entrants, const LevelCcps& ccps,
                       KernelWorkspace& ws, std::vector<double>& out);

TransitionDistribution transition_distribution(const IndustryState& s, const LevelCcps& ccps, int n_entrants,
                                               const Caps& caps = kDefaultCaps);

}  // namespace liner
