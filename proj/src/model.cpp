#include "evcap/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace evcap {

int Scenario::max_demand() const {
  int m = 0;
  for (const auto& c : classes) m = std::max(m, c.b);
  return m;
}

double traffic_intensity(const CustomerClass& c) { return c.lambda / c.mu; }

std::vector<double> traffic_intensities(const std::vector<CustomerClass>& classes) {
  std::vector<double> q;
  q.reserve(classes.size());
  for (const auto& c : classes) q.push_back(traffic_intensity(c));
  return q;
}

LoadStats offered_load_stats(const std::vector<CustomerClass>& classes) {
  LoadStats s;
  for (const auto& c : classes) {
    const double q = traffic_intensity(c);
    const double b = static_cast<double>(c.b);
    s.mean += b * q;
    s.variance += b * b * q;
  }
  return s;
}

LoadStats offered_load_stats(const Scenario& scenario) {
  return offered_load_stats(scenario.classes);
}

std::vector<std::string> validate_scenario(const Scenario& scenario) {
  std::vector<std::string> out;
  if (scenario.classes.empty()) {
    out.emplace_back("scenario has no customer classes");
    return out;
  }
  if (scenario.capacity < 0) {
    out.emplace_back("capacity must be nonnegative, got " +
                     std::to_string(scenario.capacity));
  }
  for (std::size_t j = 0; j < scenario.classes.size(); ++j) {
    const auto& c = scenario.classes[j];
    const std::string name = "class " + std::to_string(j + 1);
    if (c.b < 1) {
      out.push_back(name + ": demand b must be a positive integer, got " +
                    std::to_string(c.b));
    }
    if (!(c.mu > 0.0) || !std::isfinite(c.mu)) {
      std::ostringstream os;
      os << name << ": service rate mu must be positive and finite, got " << c.mu;
      out.push_back(os.str());
    }
    if (!(c.lambda >= 0.0) || !std::isfinite(c.lambda)) {
      std::ostringstream os;
      os << name << ": arrival rate lambda must be nonnegative and finite, got "
         << c.lambda;
      out.push_back(os.str());
    }
    if (c.b >= 1 && scenario.capacity >= 0 && c.b > scenario.capacity) {
      out.push_back(name + " can never be served (b=" + std::to_string(c.b) +
                    " exceeds capacity " + std::to_string(scenario.capacity) + ")");
    }
  }
  return out;
}

namespace {

[[noreturn]] void throw_diagnostics(const std::vector<std::string>& diags) {
  std::string msg = "invalid scenario:";
  for (const auto& d : diags) msg += "\n  " + d;
  throw std::invalid_argument(msg);
}

}  // namespace

void require_valid(const Scenario& scenario) {
  auto diags = validate_scenario(scenario);
  // An unservable class is still a well-defined input: its blocking is 1.
  std::erase_if(diags, [](const std::string& d) {
    return d.find("can never be served") != std::string::npos;
  });
  if (!diags.empty()) throw_diagnostics(diags);
}

void require_valid(const QosTargets& targets, std::size_t num_classes) {
  if (targets.delta.size() != num_classes) {
    throw std::invalid_argument("expected " + std::to_string(num_classes) +
                                " QoS targets, got " +
                                std::to_string(targets.delta.size()));
  }
  for (std::size_t j = 0; j < targets.delta.size(); ++j) {
    const double d = targets.delta[j];
    if (!(d > 0.0 && d < 1.0)) {
      std::ostringstream os;
      os << "QoS target for class " << j + 1 << " must lie in (0,1), got " << d;
      throw std::invalid_argument(os.str());
    }
  }
}

Scenario merge_period(const std::vector<CustomerClass>& classes,
                      const ProfilePeriod& period) {
  Scenario s{period.capacity, classes};
  if (period.lambdas) {
    if (period.lambdas->size() != classes.size()) {
      throw std::invalid_argument("profile period has " +
                                  std::to_string(period.lambdas->size()) +
                                  " arrival rates for " +
                                  std::to_string(classes.size()) + " classes");
    }
    for (std::size_t j = 0; j < classes.size(); ++j) {
      s.classes[j].lambda = (*period.lambdas)[j];
    }
  }
  return s;
}

std::vector<std::string> validate_profile(const std::vector<CustomerClass>& classes,
                                          const TimeProfile& profile) {
  std::vector<std::string> out;
  if (profile.periods.empty()) out.emplace_back("profile has no periods");
  for (std::size_t k = 0; k < profile.periods.size(); ++k) {
    const auto& p = profile.periods[k];
    if (p.lambdas && p.lambdas->size() != classes.size()) {
      out.push_back("period " + std::to_string(k) + ": expected " +
                    std::to_string(classes.size()) + " arrival rates");
      continue;
    }
    for (const auto& d : validate_scenario(merge_period(classes, p))) {
      out.push_back("period " + std::to_string(k) + ": " + d);
    }
  }
  return out;
}

}  // namespace evcap
