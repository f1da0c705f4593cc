#ifndef EVCAP_MODEL_HPP_
#define EVCAP_MODEL_HPP_

#include <optional>
#include <string>
#include <vector>

namespace evcap {

// One customer class of the shared charging pool.
//
// A class-j customer holds `b` power units for an exponentially
// distributed charging time with mean 1/mu. Requests arrive as a
// Poisson stream of rate `lambda`.
struct CustomerClass {
  int b = 1;
  double mu = 1.0;
  double lambda = 0.0;

  bool operator==(const CustomerClass&) const = default;
};

// Capacity plus classes: the unit of every analysis. Class order is kept
// exactly as given.
struct Scenario {
  int capacity = 0;
  std::vector<CustomerClass> classes;

  std::size_t num_classes() const { return classes.size(); }
  int max_demand() const;

  bool operator==(const Scenario&) const = default;
};

// Per-class loss-of-load upper bounds, each in (0,1).
struct QosTargets {
  std::vector<double> delta;

  bool operator==(const QosTargets&) const = default;
};

struct ProfilePeriod {
  int capacity = 0;
  // Replaces the base arrival rates for this period when present.
  std::optional<std::vector<double>> lambdas;

  bool operator==(const ProfilePeriod&) const = default;
};

// Equal-length slots; each slot merged with the base classes must form a
// valid Scenario.
struct TimeProfile {
  std::vector<ProfilePeriod> periods;

  bool operator==(const TimeProfile&) const = default;
};

// q_j = lambda_j / mu_j, the offered load in Erlangs.
double traffic_intensity(const CustomerClass& c);

std::vector<double> traffic_intensities(const std::vector<CustomerClass>& classes);

struct LoadStats {
  double mean = 0.0;
  double variance = 0.0;
};

// Mean and variance of the unconstrained demand S = sum_j b_j Q_j with
// independent Poisson Q_j: (sum b_j q_j, sum b_j^2 q_j).
LoadStats offered_load_stats(const std::vector<CustomerClass>& classes);
LoadStats offered_load_stats(const Scenario& scenario);

// Human-readable problems with the scenario; empty when valid.
std::vector<std::string> validate_scenario(const Scenario& scenario);

// Throws std::invalid_argument listing every diagnostic.
void require_valid(const Scenario& scenario);

void require_valid(const QosTargets& targets, std::size_t num_classes);

// Scenario for one profile period: base classes with the period's capacity
// and, if present, its arrival-rate overrides.
Scenario merge_period(const std::vector<CustomerClass>& classes,
                      const ProfilePeriod& period);

std::vector<std::string> validate_profile(const std::vector<CustomerClass>& classes,
                                          const TimeProfile& profile);

}  // namespace evcap

#endif  // EVCAP_MODEL_HPP_
