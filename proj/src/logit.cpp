#include "liner/logit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "liner/errors.hpp"
#include "liner/units.hpp"

namespace liner {

double integrated_value(std::span<const double> csvfs, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("integrated_value: sigma must be positive");
  if (csvfs.empty()) throw DomainError("integrated_value: no actions");
  const double m = *std::max_element(csvfs.begin(), csvfs.end());
  if (m == -std::numeric_limits<double>::infinity()) return m;
  double sum = 0.0;
  for (double v : csvfs) sum += std::exp((v - m) / sigma);
  return m + sigma * (units::kEulerGamma + std::log(sum));
}

std::vector<double> ccp_from_csvf(std::span<const double> csvfs, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("ccp_from_csvf: sigma must be positive");
  if (csvfs.empty()) throw DomainError("ccp_from_csvf: no actions");
  const double m = *std::max_element(csvfs.begin(), csvfs.end());
  if (m == -std::numeric_limits<double>::infinity()) throw DomainError("ccp_from_csvf: all values are -inf");
  std::vector<double> p(csvfs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < csvfs.size(); ++i) {
    p[i] = std::exp((csvfs[i] - m) / sigma);
    sum += p[i];
  }
  for (double& x : p) x /= sum;
  return p;
}

}  // namespace liner
