#include "evcap/lolp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace evcap {

namespace {

constexpr double kRescaleThreshold = 1e250;

void require_finite_loads(const std::vector<CustomerClass>& classes) {
  for (std::size_t j = 0; j < classes.size(); ++j) {
    const double q = traffic_intensity(classes[j]);
    if (!std::isfinite(q) || q < 0.0) {
      throw std::invalid_argument("class " + std::to_string(j + 1) +
                                  " has a non-finite or negative offered load");
    }
  }
}

// T(s) = P{occupancy > C - s} = alpha(C-s+1) + ... + alpha(C), for
// s = 0..max_shift. T(s) = 1 once s > C.
std::vector<double> tail_sums(const OccupancyDistribution& occ, int max_shift) {
  const int cap = occ.capacity();
  std::vector<double> t(static_cast<std::size_t>(max_shift) + 1, 0.0);
  for (int s = 1; s <= max_shift; ++s) {
    const int idx = cap - s + 1;
    t[s] = idx >= 0 ? t[s - 1] + occ.alpha[idx] : 1.0;
  }
  return t;
}

}  // namespace

OccupancyTable::OccupancyTable(const std::vector<CustomerClass>& classes) {
  require_finite_loads(classes);
  for (const auto& c : classes) {
    if (c.b < 1) throw std::invalid_argument("class demand b must be >= 1");
    demand_.push_back(c.b);
    // Classes with no load add nothing to the recursion.
    const double q = traffic_intensity(c);
    if (q > 0.0) {
      b_.push_back(c.b);
      bq_.push_back(static_cast<double>(c.b) * q);
    }
  }
  g_.push_back(1.0);
  cum_.push_back(1.0);
}

void OccupancyTable::extend_to(int max_capacity) {
  if (max_capacity < 0) throw std::invalid_argument("capacity must be nonnegative");
  const auto target = static_cast<std::size_t>(max_capacity) + 1;
  if (g_.size() >= target) return;
  g_.reserve(target);
  cum_.reserve(target);
  for (std::size_t c = g_.size(); c < target; ++c) {
    double acc = 0.0;
    for (std::size_t j = 0; j < b_.size(); ++j) {
      const auto bj = static_cast<std::size_t>(b_[j]);
      if (bj <= c) acc += bq_[j] * g_[c - bj];
    }
    const double gc = acc / static_cast<double>(c);
    g_.push_back(gc);
    cum_.push_back(cum_.back() + gc);
    if (gc > kRescaleThreshold) {
      const double inv = 1.0 / gc;
      for (auto& v : g_) v *= inv;
      for (auto& v : cum_) v *= inv;
    }
  }
}

OccupancyDistribution OccupancyTable::occupancy(int capacity) const {
  if (capacity < 0 || capacity > max_capacity()) {
    throw std::out_of_range("capacity outside the occupancy table");
  }
  const double total = cum_[capacity];
  OccupancyDistribution occ;
  occ.alpha.resize(static_cast<std::size_t>(capacity) + 1);
  for (int c = 0; c <= capacity; ++c) occ.alpha[c] = g_[c] / total;
  return occ;
}

LolpVector OccupancyTable::lolp(int capacity) const {
  if (capacity < 0 || capacity > max_capacity()) {
    throw std::out_of_range("capacity outside the occupancy table");
  }
  const double total = cum_[capacity];
  LolpVector out;
  out.beta.reserve(demand_.size());
  for (int bj : demand_) {
    const int lo = std::max(0, capacity - bj + 1);
    double s = 0.0;
    for (int i = lo; i <= capacity; ++i) s += g_[i];
    out.beta.push_back(std::min(1.0, s / total));
  }
  return out;
}

OccupancyDistribution occupancy(const Scenario& scenario) {
  require_valid(scenario);
  OccupancyTable table(scenario.classes);
  table.extend_to(scenario.capacity);
  return table.occupancy(scenario.capacity);
}

LolpVector lolp_from_occupancy(const OccupancyDistribution& occ,
                               const std::vector<CustomerClass>& classes) {
  const int cap = occ.capacity();
  LolpVector out;
  out.beta.reserve(classes.size());
  for (const auto& c : classes) {
    const int lo = std::max(0, cap - c.b + 1);
    double s = 0.0;
    for (int i = lo; i <= cap; ++i) s += occ.alpha[i];
    out.beta.push_back(std::clamp(s, 0.0, 1.0));
  }
  return out;
}

LolpVector lolp(const Scenario& scenario) {
  return lolp_from_occupancy(occupancy(scenario), scenario.classes);
}

LolpVector lolp_exact(const Scenario& scenario, double max_states) {
  require_valid(scenario);
  const auto& classes = scenario.classes;
  const int cap = scenario.capacity;
  const std::size_t nc = classes.size();

  std::vector<int> maxq(nc);
  double states = 1.0;
  for (std::size_t j = 0; j < nc; ++j) {
    const bool idle = traffic_intensity(classes[j]) == 0.0;
    maxq[j] = idle ? 0 : cap / classes[j].b;
    states *= static_cast<double>(maxq[j]) + 1.0;
  }
  if (states > max_states) {
    throw StateSpaceTooLarge("state space of " + std::to_string(states) +
                             " states exceeds the enumeration bound of " +
                             std::to_string(max_states));
  }

  // log(q_j^n / n!) for every reachable count n.
  std::vector<std::vector<double>> logterm(nc);
  for (std::size_t j = 0; j < nc; ++j) {
    const double q = traffic_intensity(classes[j]);
    logterm[j].resize(static_cast<std::size_t>(maxq[j]) + 1);
    for (int n = 0; n <= maxq[j]; ++n) {
      logterm[j][n] = n == 0 ? 0.0 : n * std::log(q) - std::lgamma(n + 1.0);
    }
  }

  // Two sweeps over the admissible states: the first finds the largest log
  // weight so the second can sum without overflow.
  auto for_each_state = [&](auto&& visit) {
    std::vector<int> n(nc, 0);
    int used = 0;
    while (true) {
      double logw = 0.0;
      for (std::size_t j = 0; j < nc; ++j) logw += logterm[j][n[j]];
      visit(used, logw);
      std::size_t j = 0;
      for (; j < nc; ++j) {
        if (n[j] < maxq[j] && used + classes[j].b <= cap) {
          ++n[j];
          used += classes[j].b;
          break;
        }
        used -= n[j] * classes[j].b;
        n[j] = 0;
      }
      if (j == nc) break;
    }
  };

  double max_logw = 0.0;
  for_each_state([&](int, double lw) { max_logw = std::max(max_logw, lw); });

  double total = 0.0;
  std::vector<double> blocked(nc, 0.0);
  for_each_state([&](int used, double lw) {
    const double w = std::exp(lw - max_logw);
    total += w;
    for (std::size_t j = 0; j < nc; ++j) {
      if (used > cap - classes[j].b) blocked[j] += w;
    }
  });

  LolpVector out;
  for (std::size_t j = 0; j < nc; ++j) out.beta.push_back(blocked[j] / total);
  return out;
}

// With H(c) the normalizing sum over states using at most c units,
// dH(c)/dq_k = H(c - b_k). Writing a(s) = H(C - s)/H(C) = 1 - T(s) gives
//   d beta_j / d q_k = T(b_j+b_k) - T(b_j) - T(b_k) + T(b_j) T(b_k)
// and the same shift rule once more yields the second derivatives.
namespace {

Eigen::MatrixXd jacobian_from_tails(const std::vector<double>& t,
                                    const std::vector<CustomerClass>& classes) {
  const auto nc = static_cast<Eigen::Index>(classes.size());
  Eigen::MatrixXd m(nc, nc);
  for (Eigen::Index j = 0; j < nc; ++j) {
    for (Eigen::Index k = 0; k < nc; ++k) {
      const int bj = classes[j].b;
      const int bk = classes[k].b;
      m(j, k) = t[bj + bk] - t[bj] - t[bk] + t[bj] * t[bk];
    }
  }
  return m;
}

LolpHessian hessian_from_tails(const std::vector<double>& t,
                               const std::vector<CustomerClass>& classes) {
  const auto nc = static_cast<Eigen::Index>(classes.size());
  auto a = [&](int s) { return 1.0 - t[s]; };
  // d a(s) / d q_l for a class with demand bl.
  auto da = [&](int s, int bl) { return t[s] + t[bl] - t[s + bl] - t[s] * t[bl]; };

  LolpHessian h;
  h.second.assign(classes.size(), Eigen::MatrixXd::Zero(nc, nc));
  for (Eigen::Index j = 0; j < nc; ++j) {
    const int bj = classes[j].b;
    for (Eigen::Index k = 0; k < nc; ++k) {
      const int bk = classes[k].b;
      for (Eigen::Index l = 0; l < nc; ++l) {
        const int bl = classes[l].b;
        h.second[j](k, l) = -da(bj + bk, bl) + da(bj, bl) * a(bk) + a(bj) * da(bk, bl);
      }
    }
  }
  return h;
}

}  // namespace

LolpJacobian lolp_derivatives(const Scenario& scenario) {
  const auto occ = occupancy(scenario);
  const auto t = tail_sums(occ, 2 * scenario.max_demand());
  return {jacobian_from_tails(t, scenario.classes)};
}

LolpHessian lolp_hessian(const Scenario& scenario) {
  const auto occ = occupancy(scenario);
  const auto t = tail_sums(occ, 3 * scenario.max_demand());
  return hessian_from_tails(t, scenario.classes);
}

LolpAnalysis analyze_lolp(const Scenario& scenario, bool with_hessian) {
  const auto occ = occupancy(scenario);
  const int depth = (with_hessian ? 3 : 2) * scenario.max_demand();
  const auto t = tail_sums(occ, depth);
  LolpAnalysis out;
  out.beta = lolp_from_occupancy(occ, scenario.classes);
  out.jacobian.d_beta_d_q = jacobian_from_tails(t, scenario.classes);
  if (with_hessian) out.hessian = hessian_from_tails(t, scenario.classes);
  return out;
}

}  // namespace evcap
