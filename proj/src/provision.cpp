#include "evcap/provision.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "evcap/lolp.hpp"

namespace evcap {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343818684758586311649;

double normal_pdf(double y) { return kInvSqrt2Pi * std::exp(-0.5 * y * y); }

// (1 - Phi(t)) / phi(t) by its continued fraction; accurate for t >= 8.
double mills_ratio(double t) {
  double f = t;
  for (int k = 120; k >= 1; --k) f = t + k / f;
  return 1.0 / f;
}

}  // namespace

double normal_hazard(double y) {
  if (y < -8.0) return 1.0 / mills_ratio(-y);
  const double cdf = 0.5 * std::erfc(-y / std::numbers::sqrt2);
  return normal_pdf(y) / cdf;
}

double psi(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    std::ostringstream os;
    os << "psi is defined for positive finite arguments, got " << x;
    throw std::invalid_argument(os.str());
  }
  // normal_hazard(y) > -y, so the root lies above -(x + 1).
  double lo = std::min(-40.0, -(x + 1.0));
  double hi = 40.0;
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    mid = 0.5 * (lo + hi);
    const double r = normal_hazard(mid) - x;
    if (std::abs(r) < 1e-12 || mid == lo || mid == hi) break;
    if (r > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return mid;
}

AsymptoticCapacity capacity_asymptotic(const std::vector<CustomerClass>& classes,
                                       const QosTargets& targets) {
  require_valid(targets, classes.size());
  const auto stats = offered_load_stats(classes);
  if (!(stats.variance > 0.0)) {
    throw std::invalid_argument("asymptotic provisioning needs at least one loaded class");
  }
  AsymptoticCapacity out;
  double best = targets.delta[0] / classes[0].b;
  for (std::size_t j = 1; j < classes.size(); ++j) {
    const double r = targets.delta[j] / classes[j].b;
    if (r < best) {
      best = r;
      out.dominant = j;
    }
  }
  const double sd = std::sqrt(stats.variance);
  out.x_star = psi(best * sd);
  out.capacity = stats.mean + out.x_star * sd;
  return out;
}

ProvisioningResult capacity_exact(const std::vector<CustomerClass>& classes,
                                  const QosTargets& targets, int ceiling) {
  require_valid(Scenario{0, classes});
  const auto asym = capacity_asymptotic(classes, targets);

  ProvisioningResult out;
  out.capacity_asymptotic = asym.capacity;
  out.x_star = asym.x_star;
  out.dominant_class = asym.dominant;

  int bmax = 0;
  for (const auto& c : classes) bmax = std::max(bmax, c.b);

  OccupancyTable table(classes);
  auto feasible = [&](int cap) {
    table.extend_to(cap);
    const auto beta = table.lolp(cap);
    for (std::size_t j = 0; j < beta.size(); ++j) {
      if (beta[j] > targets.delta[j]) return false;
    }
    return true;
  };
  auto unreachable = [&] {
    return UnreachableTargets("QoS targets cannot be met with capacity up to " +
                              std::to_string(ceiling));
  };

  const double seed_real = std::clamp(std::round(asym.capacity), 0.0,
                                      static_cast<double>(ceiling));
  int hi = std::max(bmax, static_cast<int>(seed_real));
  if (hi > ceiling) throw unreachable();
  for (long step = 1; !feasible(hi); step *= 2) {
    if (hi >= ceiling) throw unreachable();
    hi = static_cast<int>(std::min<long>(ceiling, hi + step));
  }

  // Below bmax the largest class is always blocked.
  int cap = bmax;
  while (!feasible(cap)) ++cap;
  out.capacity_exact = cap;
  return out;
}

double savings_vs_strict(const std::vector<CustomerClass>& classes,
                         const QosTargets& targets, double strict_delta) {
  if (!(strict_delta > 0.0)) {
    throw std::invalid_argument("strict_delta must be positive");
  }
  const QosTargets strict{std::vector<double>(classes.size(), strict_delta)};
  const double loose_cap = capacity_exact(classes, targets).capacity_exact;
  const double strict_cap = capacity_exact(classes, strict).capacity_exact;
  return 100.0 * (1.0 - loose_cap / strict_cap);
}

}  // namespace evcap
