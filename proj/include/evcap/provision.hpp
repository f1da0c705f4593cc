#ifndef EVCAP_PROVISION_HPP_
#define EVCAP_PROVISION_HPP_

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "evcap/model.hpp"

namespace evcap {

// phi(y) / Phi(y) for the standard normal density phi and cdf Phi. Stays
// finite for very negative y, where it behaves like -y.
double normal_hazard(double y);

// Inverse of normal_hazard: the y with phi(y)/Phi(y) = x. Strictly
// decreasing in x. Throws std::invalid_argument for x <= 0.
double psi(double x);

struct AsymptoticCapacity {
  double capacity = 0.0;
  double x_star = 0.0;
  std::size_t dominant = 0;  // argmin_j delta_j / b_j, zero-based
};

// Square-root provisioning rule
//   C = E[S] + psi(min_j (delta_j / b_j) sqrt(var S)) sqrt(var S)
// with E[S] = sum b_j q_j and var S = sum b_j^2 q_j.
AsymptoticCapacity capacity_asymptotic(const std::vector<CustomerClass>& classes,
                                       const QosTargets& targets);

struct ProvisioningResult {
  double capacity_asymptotic = 0.0;
  int capacity_exact = 0;
  std::size_t dominant_class = 0;
  double x_star = 0.0;
};

// Raised when no capacity up to the search ceiling meets the targets.
class UnreachableTargets : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCapacityCeiling = 100'000'000;

// Smallest integer C with lolp(C) <= delta for every class. The search is
// seeded by the asymptotic rule and bracketed upward; every capacity below
// the bracket is then checked, since per-class blocking need not be
// monotone in C for mixed demands.
ProvisioningResult capacity_exact(const std::vector<CustomerClass>& classes,
                                  const QosTargets& targets,
                                  int ceiling = kCapacityCeiling);

// 100 * (1 - C(targets) / C(strict_delta for every class)).
double savings_vs_strict(const std::vector<CustomerClass>& classes,
                         const QosTargets& targets, double strict_delta);

}  // namespace evcap

#endif  // EVCAP_PROVISION_HPP_
