#ifndef EVCAP_PRICING_HPP_
#define EVCAP_PRICING_HPP_

#include <optional>
#include <vector>

#include "evcap/lolp.hpp"
#include "evcap/model.hpp"

namespace evcap {

// Logarithmic utility weights: class j contributes
//   omega_j log(1 + lambda_j) - theta_j log(1 + beta_j).
// An empty system (every lambda_j = 0) has zero utility.
struct UtilityWeights {
  std::vector<double> omega;
  std::vector<double> theta;
};

void require_valid(const UtilityWeights& weights, std::size_t num_classes);

// Which aggregate the solver maximizes.
//
// net_of_charges: gross utility minus the congestion charges customers pay,
//   sum_j p_j(lambda) lambda_j (1 - beta_j), with p evaluated at the same
//   rates. This is the welfare value reported for a priced station.
// gross_utility: the bare utility sum; its maximizer is the rate vector a
//   price-taking customer reproduces when shown the optimal prices.
enum class WelfareObjective { net_of_charges, gross_utility };

struct SolverOptions {
  WelfareObjective objective = WelfareObjective::net_of_charges;
  double tolerance = 1e-6;  // on the projected-gradient norm
  int max_iterations = 10'000;
  double initial_step = 1.0;
  double backtrack = 0.5;
  double armijo = 1e-4;
};

struct EquilibriumResult {
  std::vector<double> lambda_star;
  std::vector<double> prices;
  LolpVector beta_star;
  double welfare = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;

  // Rates of each of `customers` identical customers.
  std::vector<double> per_customer_rates(int customers) const;
};

// Scenario with the class arrival rates replaced by `lambdas`.
Scenario with_rates(const Scenario& scenario, const std::vector<double>& lambdas);

double gross_utility(const Scenario& scenario, const UtilityWeights& weights,
                     const std::vector<double>& lambdas);
std::vector<double> gross_utility_gradient(const Scenario& scenario,
                                           const UtilityWeights& weights,
                                           const std::vector<double>& lambdas);

// Utility net of congestion charges (see WelfareObjective::net_of_charges).
double welfare(const Scenario& scenario, const UtilityWeights& weights,
               const std::vector<double>& lambdas);

// Exact gradient of welfare(); uses second derivatives of beta because the
// prices themselves move with the rates. At lambda_j = 0 this is the
// one-sided derivative from the interior.
std::vector<double> welfare_gradient(const Scenario& scenario, const UtilityWeights& weights,
                                     const std::vector<double>& lambdas);

// Congestion prices
//   p_j = (1 - beta_j)^{-1} sum_s theta_s / (1 + beta_s) * d beta_s / d lambda_j.
// Throws std::domain_error naming the class when some beta_j = 1.
std::vector<double> optimal_prices(const Scenario& scenario, const UtilityWeights& weights,
                                   const std::vector<double>& lambdas);

// Rates a price taker picks when it treats beta as fixed:
//   lambda_j = max(0, omega_j / (p_j (1 - beta_j)) - 1).
std::vector<double> local_best_response(const std::vector<double>& prices,
                                        const UtilityWeights& weights,
                                        const LolpVector& beta);

// Projected gradient ascent with Armijo backtracking, restarted from several
// deterministic points (plus `init` when given). The best converged end point
// wins; if no start converges, the best iterate is returned with
// converged = false.
//
// The logarithmic utility keeps growing as rates go to infinity while the
// LoLP penalty stays bounded, so the result is a local maximum.
EquilibriumResult solve_equilibrium(const Scenario& scenario, const UtilityWeights& weights,
                                    const std::optional<std::vector<double>>& init = {},
                                    const SolverOptions& options = {});

}  // namespace evcap

#endif  // EVCAP_PRICING_HPP_
