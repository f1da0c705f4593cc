#ifndef EVCAP_SIM_HPP_
#define EVCAP_SIM_HPP_

#include <cstdint>
#include <vector>

#include "evcap/model.hpp"

namespace evcap {

enum class ServiceDistribution { exponential, deterministic };

struct SimConfig {
  double horizon = 1e4;  // for profiles: the length of each period
  double warmup = 0.0;
  std::uint64_t seed = 1;
  int replications = 10;
  ServiceDistribution service = ServiceDistribution::exponential;
};

void require_valid(const SimConfig& config);

struct SimResult {
  // Blocked / offered arrivals after warmup, averaged over replications.
  std::vector<double> beta_hat;
  std::vector<double> std_error;  // across replications; NaN for a single one
  // Fraction of time fewer than b_j units were free (time-average view of
  // the same event, equal to beta_hat for Poisson arrivals).
  std::vector<double> time_blocking;
  std::vector<double> time_blocking_std_error;
  double utilization = 0.0;  // mean units in use / C
  std::vector<std::uint64_t> arrivals;
  std::vector<std::uint64_t> blocked;
};

// Seed of the random stream for one class in one replication. Streams are
// independent of how many classes exist, so adding a class leaves the others
// untouched.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t replication,
                          std::uint64_t class_index);

// Event-driven loss-station simulation: Poisson arrivals per class, service
// holding b_j units, admission iff at least b_j units are free, blocked
// arrivals lost. Deterministic for a given seed.
SimResult simulate(const Scenario& scenario, const SimConfig& config);

// Piecewise-stationary run over the profile periods, one result per period.
// Customers in service carry over period boundaries; a capacity drop never
// preempts anyone, it only blocks new arrivals until occupancy drains.
std::vector<SimResult> simulate_profile(const std::vector<CustomerClass>& classes,
                                        const TimeProfile& profile, const SimConfig& config);

}  // namespace evcap

#endif  // EVCAP_SIM_HPP_
