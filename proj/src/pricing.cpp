#include "evcap/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace evcap {

namespace {

// g_j = sum_s theta_s / (1 + beta_s) * d beta_s / d lambda_j, i.e. the
// marginal LoLP disutility of class-j traffic; equals p_j (1 - beta_j).
std::vector<double> marginal_congestion(const Scenario& s, const UtilityWeights& w,
                                        const LolpAnalysis& an) {
  const std::size_t nc = s.classes.size();
  std::vector<double> g(nc, 0.0);
  for (std::size_t j = 0; j < nc; ++j) {
    for (std::size_t i = 0; i < nc; ++i) {
      g[j] += w.theta[i] / (1.0 + an.beta[i]) * an.jacobian.d_beta_d_q(i, j) / s.classes[j].mu;
    }
  }
  return g;
}

double utility_from(const UtilityWeights& w, const std::vector<double>& lambdas,
                    const LolpVector& beta) {
  if (std::all_of(lambdas.begin(), lambdas.end(), [](double l) { return l == 0.0; })) {
    return 0.0;
  }
  double u = 0.0;
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    u += w.omega[j] * std::log1p(lambdas[j]) - w.theta[j] * std::log1p(beta[j]);
  }
  return u;
}

void require_rates(const std::vector<double>& lambdas, std::size_t nc) {
  if (lambdas.size() != nc) {
    throw std::invalid_argument("expected " + std::to_string(nc) + " arrival rates, got " +
                                std::to_string(lambdas.size()));
  }
  for (double l : lambdas) {
    if (!(l >= 0.0) || !std::isfinite(l)) {
      throw std::invalid_argument("arrival rates must be nonnegative and finite");
    }
  }
}

double objective_value(const Scenario& s, const UtilityWeights& w,
                       const std::vector<double>& lambdas, WelfareObjective obj) {
  return obj == WelfareObjective::net_of_charges ? welfare(s, w, lambdas)
                                                 : gross_utility(s, w, lambdas);
}

std::vector<double> objective_gradient(const Scenario& s, const UtilityWeights& w,
                                       const std::vector<double>& lambdas,
                                       WelfareObjective obj) {
  return obj == WelfareObjective::net_of_charges ? welfare_gradient(s, w, lambdas)
                                                 : gross_utility_gradient(s, w, lambdas);
}

struct Ascent {
  std::vector<double> x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
};

std::vector<double> project(std::vector<double> x) {
  for (auto& v : x) v = std::max(0.0, v);
  return x;
}

Ascent ascend(const Scenario& s, const UtilityWeights& w, std::vector<double> x,
              const SolverOptions& opt) {
  Ascent out;
  x = project(std::move(x));
  double f = objective_value(s, w, x, opt.objective);
  const std::size_t n = x.size();

  for (out.iterations = 0; out.iterations < opt.max_iterations; ++out.iterations) {
    const auto grad = objective_gradient(s, w, x, opt.objective);
    double pg = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = std::max(0.0, x[j] + grad[j]) - x[j];
      pg += d * d;
    }
    out.gradient_norm = std::sqrt(pg);
    if (out.gradient_norm < opt.tolerance) {
      out.converged = true;
      break;
    }

    double t = opt.initial_step;
    bool accepted = false;
    std::vector<double> trial(n);
    while (t > 1e-20) {
      double slope = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        trial[j] = std::max(0.0, x[j] + t * grad[j]);
        slope += grad[j] * (trial[j] - x[j]);
      }
      const double ft = objective_value(s, w, trial, opt.objective);
      if (ft >= f + opt.armijo * slope) {
        x = trial;
        f = ft;
        accepted = true;
        break;
      }
      t *= opt.backtrack;
    }
    if (!accepted) break;  // no ascent direction at machine precision
  }
  out.x = std::move(x);
  out.value = f;
  return out;
}

std::vector<std::vector<double>> starting_points(const Scenario& s) {
  const std::size_t nc = s.classes.size();
  std::vector<std::vector<double>> starts;
  starts.emplace_back(nc, 0.0);
  starts.emplace_back(nc, 1e-3);
  // Rates whose offered load fills the capacity, split equally by class.
  std::vector<double> fill(nc);
  for (std::size_t j = 0; j < nc; ++j) {
    const auto& c = s.classes[j];
    fill[j] = c.mu * s.capacity / (static_cast<double>(nc) * c.b);
  }
  starts.push_back(fill);
  for (double v : {0.1, 1.0, 10.0}) starts.emplace_back(nc, v);
  return starts;
}

}  // namespace

void require_valid(const UtilityWeights& weights, std::size_t num_classes) {
  if (weights.omega.size() != num_classes || weights.theta.size() != num_classes) {
    throw std::invalid_argument("utility weights need one omega and one theta per class");
  }
  for (std::size_t j = 0; j < num_classes; ++j) {
    if (!(weights.omega[j] >= 0.0) || !(weights.theta[j] >= 0.0) ||
        !std::isfinite(weights.omega[j]) || !std::isfinite(weights.theta[j])) {
      throw std::invalid_argument("utility weights must be nonnegative and finite (class " +
                                  std::to_string(j + 1) + ")");
    }
  }
}

std::vector<double> EquilibriumResult::per_customer_rates(int customers) const {
  if (customers < 1) throw std::invalid_argument("customer count must be positive");
  std::vector<double> out = lambda_star;
  for (auto& v : out) v /= customers;
  return out;
}

Scenario with_rates(const Scenario& scenario, const std::vector<double>& lambdas) {
  require_rates(lambdas, scenario.classes.size());
  Scenario s = scenario;
  for (std::size_t j = 0; j < lambdas.size(); ++j) s.classes[j].lambda = lambdas[j];
  return s;
}

double gross_utility(const Scenario& scenario, const UtilityWeights& weights,
                     const std::vector<double>& lambdas) {
  require_valid(weights, scenario.classes.size());
  const auto s = with_rates(scenario, lambdas);
  return utility_from(weights, lambdas, lolp(s));
}

std::vector<double> gross_utility_gradient(const Scenario& scenario,
                                           const UtilityWeights& weights,
                                           const std::vector<double>& lambdas) {
  require_valid(weights, scenario.classes.size());
  const auto s = with_rates(scenario, lambdas);
  const auto an = analyze_lolp(s);
  const auto g = marginal_congestion(s, weights, an);
  std::vector<double> out(lambdas.size());
  for (std::size_t j = 0; j < lambdas.size(); ++j) {
    out[j] = weights.omega[j] / (1.0 + lambdas[j]) - g[j];
  }
  return out;
}

double welfare(const Scenario& scenario, const UtilityWeights& weights,
               const std::vector<double>& lambdas) {
  require_valid(weights, scenario.classes.size());
  const auto s = with_rates(scenario, lambdas);
  const auto an = analyze_lolp(s);
  const auto g = marginal_congestion(s, weights, an);
  double r = utility_from(weights, lambdas, an.beta);
  for (std::size_t j = 0; j < lambdas.size(); ++j) r -= lambdas[j] * g[j];
  return r;
}

std::vector<double> welfare_gradient(const Scenario& scenario, const UtilityWeights& weights,
                                     const std::vector<double>& lambdas) {
  require_valid(weights, scenario.classes.size());
  const auto s = with_rates(scenario, lambdas);
  const auto an = analyze_lolp(s, true);
  const auto& jq = an.jacobian.d_beta_d_q;
  const auto& hq = an.hessian->second;
  const std::size_t nc = lambdas.size();
  const auto g = marginal_congestion(s, weights, an);

  std::vector<double> mu(nc);
  for (std::size_t j = 0; j < nc; ++j) mu[j] = s.classes[j].mu;

  std::vector<double> out(nc);
  for (std::size_t k = 0; k < nc; ++k) {
    // d/d lambda_k of sum_j lambda_j g_j beyond the g_k term.
    double spill = 0.0;
    for (std::size_t j = 0; j < nc; ++j) {
      if (lambdas[j] == 0.0) continue;
      double dg = 0.0;
      for (std::size_t i = 0; i < nc; ++i) {
        const double th = weights.theta[i];
        const double bi = an.beta[i];
        const double dbi_dk = jq(i, k) / mu[k];
        const double dbi_dj = jq(i, j) / mu[j];
        dg += -th / ((1.0 + bi) * (1.0 + bi)) * dbi_dk * dbi_dj +
              th / (1.0 + bi) * hq[i](j, k) / (mu[j] * mu[k]);
      }
      spill += lambdas[j] * dg;
    }
    out[k] = weights.omega[k] / (1.0 + lambdas[k]) - 2.0 * g[k] - spill;
  }
  return out;
}

std::vector<double> optimal_prices(const Scenario& scenario, const UtilityWeights& weights,
                                   const std::vector<double>& lambdas) {
  require_valid(weights, scenario.classes.size());
  const auto s = with_rates(scenario, lambdas);
  const auto an = analyze_lolp(s);
  const auto g = marginal_congestion(s, weights, an);
  std::vector<double> p(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (an.beta[j] >= 1.0) {
      throw std::domain_error("class " + std::to_string(j + 1) +
                              " is always blocked (beta = 1); its price is undefined");
    }
    p[j] = g[j] / (1.0 - an.beta[j]);
  }
  return p;
}

std::vector<double> local_best_response(const std::vector<double>& prices,
                                        const UtilityWeights& weights,
                                        const LolpVector& beta) {
  const std::size_t nc = prices.size();
  require_valid(weights, nc);
  if (beta.size() != nc) throw std::invalid_argument("beta and prices differ in length");
  std::vector<double> out(nc);
  for (std::size_t j = 0; j < nc; ++j) {
    if (!(beta[j] >= 0.0 && beta[j] < 1.0)) {
      throw std::invalid_argument("best response needs beta in [0,1) for class " +
                                  std::to_string(j + 1));
    }
    if (!(prices[j] >= 0.0)) {
      throw std::invalid_argument("prices must be nonnegative");
    }
    const double unit_cost = prices[j] * (1.0 - beta[j]);
    if (unit_cost == 0.0) {
      if (weights.omega[j] > 0.0) {
        throw std::domain_error("class " + std::to_string(j + 1) +
                                " has zero price and positive utility: demand is unbounded");
      }
      out[j] = 0.0;
      continue;
    }
    out[j] = std::max(0.0, weights.omega[j] / unit_cost - 1.0);
  }
  return out;
}

EquilibriumResult solve_equilibrium(const Scenario& scenario, const UtilityWeights& weights,
                                    const std::optional<std::vector<double>>& init,
                                    const SolverOptions& options) {
  require_valid(scenario);
  require_valid(weights, scenario.classes.size());

  auto starts = starting_points(scenario);
  if (init) {
    require_rates(*init, scenario.classes.size());
    starts.insert(starts.begin(), *init);
  }

  std::optional<Ascent> best;
  for (const auto& x0 : starts) {
    auto run = ascend(scenario, weights, x0, options);
    // A stationary point beats any unfinished run: the objective can grow
    // without bound as rates go to infinity, so a run that never settles may
    // still carry the larger value.
    const bool better = !best || (run.converged && !best->converged) ||
                        (run.converged == best->converged && run.value > best->value);
    if (better) best = std::move(run);
  }

  EquilibriumResult out;
  out.lambda_star = best->x;
  out.welfare = best->value;
  out.converged = best->converged;
  out.iterations = best->iterations;
  out.gradient_norm = best->gradient_norm;
  out.beta_star = lolp(with_rates(scenario, out.lambda_star));
  out.prices = optimal_prices(scenario, weights, out.lambda_star);
  return out;
}

}  // namespace evcap
