#pragma once

#include <span>
#include <vector>

namespace liner {

// sigma * (gamma_E + log sum_a exp(v_a / sigma)): expected maximum of v_a + sigma * eps_a
// with eps_a i.i.d. type-one extreme value. Max-subtracted, so it cannot overflow.
double integrated_value(std::span<const double> csvfs, double sigma);

// softmax(v / sigma). Throws DomainError if sigma <= 0 or every input is -inf.
std::vector<double> ccp_from_csvf(std::span<const double> csvfs, double sigma);

}  // namespace liner
