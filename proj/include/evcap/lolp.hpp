#ifndef EVCAP_LOLP_HPP_
#define EVCAP_LOLP_HPP_

#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "evcap/model.hpp"

namespace evcap {

// alpha[c] = P{c power units in use}, c = 0..C.
struct OccupancyDistribution {
  std::vector<double> alpha;

  int capacity() const { return static_cast<int>(alpha.size()) - 1; }
};

// Per-class loss-of-load probabilities beta_j.
struct LolpVector {
  std::vector<double> beta;

  std::size_t size() const { return beta.size(); }
  double operator[](std::size_t j) const { return beta[j]; }
};

// Entry (j, k) = d beta_j / d q_k. Symmetric.
struct LolpJacobian {
  Eigen::MatrixXd d_beta_d_q;
};

// second[j](k, l) = d^2 beta_j / (d q_k d q_l).
struct LolpHessian {
  std::vector<Eigen::MatrixXd> second;
};

// Raised by lolp_exact when the product of per-class occupancy maxima is too
// large to enumerate.
class StateSpaceTooLarge : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Unnormalized Kaufman-Roberts occupancy weights g(0..n) for a fixed set of
// classes. The recursion does not depend on the capacity, so one table
// answers every capacity up to its size; it grows on demand.
//
// g is kept in a floating scale: whenever a value exceeds 1e250 the whole
// table is divided by it. Only ratios are ever reported.
class OccupancyTable {
 public:
  explicit OccupancyTable(const std::vector<CustomerClass>& classes);

  void extend_to(int max_capacity);
  int max_capacity() const { return static_cast<int>(g_.size()) - 1; }

  OccupancyDistribution occupancy(int capacity) const;
  LolpVector lolp(int capacity) const;

 private:
  std::vector<int> demand_;  // every class, in input order
  std::vector<int> b_;       // loaded classes only
  std::vector<double> bq_;
  std::vector<double> g_;
  std::vector<double> cum_;  // cum_[c] = g(0) + ... + g(c)
};

// Occupancy distribution by the Kaufman-Roberts recursion, O(C J).
OccupancyDistribution occupancy(const Scenario& scenario);

// beta_j = alpha(C - b_j + 1) + ... + alpha(C).
LolpVector lolp(const Scenario& scenario);
LolpVector lolp_from_occupancy(const OccupancyDistribution& occ,
                               const std::vector<CustomerClass>& classes);

// Exact blocking by enumerating every admissible state of the product-form
// distribution. Refuses state spaces above `max_states` (product of
// per-class maxima).
LolpVector lolp_exact(const Scenario& scenario, double max_states = 1e7);

// Sensitivities of beta with respect to the offered loads q.
LolpJacobian lolp_derivatives(const Scenario& scenario);
LolpHessian lolp_hessian(const Scenario& scenario);

struct LolpAnalysis {
  LolpVector beta;
  LolpJacobian jacobian;
  std::optional<LolpHessian> hessian;
};

// beta, its Jacobian and optionally its Hessian from a single occupancy pass.
LolpAnalysis analyze_lolp(const Scenario& scenario, bool with_hessian = false);

}  // namespace evcap

#endif  // EVCAP_LOLP_HPP_
