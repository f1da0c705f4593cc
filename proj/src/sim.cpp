#include "evcap/sim.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>
#include <thread>

namespace evcap {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : rng_(seed) {}

  // Uniform on [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

 private:
  std::mt19937_64 rng_;
};

struct Departure {
  double time;
  std::uint64_t seq;
  int units;

  bool operator>(const Departure& o) const {
    return time != o.time ? time > o.time : seq > o.seq;
  }
};

struct Segment {
  Scenario scenario;
  double duration;
  int tally;  // -1: warmup, not recorded
};

struct Tally {
  std::vector<std::uint64_t> arrivals;
  std::vector<std::uint64_t> blocked;
  std::vector<double> short_time;  // time with fewer than b_j free units
  double busy_integral = 0.0;
  double duration = 0.0;
  int capacity = 0;
};

std::vector<Tally> run_replication(const std::vector<Segment>& segments, int num_tallies,
                                   const SimConfig& config, std::uint64_t rep) {
  const std::size_t nc = segments.front().scenario.classes.size();
  std::vector<Tally> tallies(num_tallies);
  for (auto& t : tallies) {
    t.arrivals.assign(nc, 0);
    t.blocked.assign(nc, 0);
    t.short_time.assign(nc, 0.0);
  }

  std::vector<Stream> streams;
  streams.reserve(nc);
  for (std::size_t j = 0; j < nc; ++j) streams.emplace_back(stream_seed(config.seed, rep, j));

  std::priority_queue<Departure, std::vector<Departure>, std::greater<>> departures;
  std::uint64_t seq = 0;
  int used = 0;
  double now = 0.0;
  constexpr double kNever = std::numeric_limits<double>::infinity();

  for (const auto& seg : segments) {
    const auto& classes = seg.scenario.classes;
    const int cap = seg.scenario.capacity;
    const double end = now + seg.duration;
    Tally* tally = seg.tally >= 0 ? &tallies[seg.tally] : nullptr;
    if (tally) {
      tally->duration += seg.duration;
      tally->capacity = cap;
    }
    // Arrivals are memoryless, so each segment redraws the next arrivals
    // at its own rates.
    std::vector<double> next_arrival(nc, kNever);
    for (std::size_t j = 0; j < nc; ++j) {
      if (classes[j].lambda > 0.0) next_arrival[j] = now + streams[j].exponential(classes[j].lambda);
    }

    auto advance = [&](double t) {
      if (tally) {
        const double dt = t - now;
        tally->busy_integral += dt * used;
        for (std::size_t j = 0; j < nc; ++j) {
          if (cap - used < classes[j].b) tally->short_time[j] += dt;
        }
      }
      now = t;
    };

    while (true) {
      std::size_t who = nc;
      double t_arr = kNever;
      for (std::size_t j = 0; j < nc; ++j) {
        if (next_arrival[j] < t_arr) {
          t_arr = next_arrival[j];
          who = j;
        }
      }
      const double t_dep = departures.empty() ? kNever : departures.top().time;
      if (std::min(t_arr, t_dep) >= end) {
        advance(end);
        break;
      }
      if (t_dep <= t_arr) {
        advance(t_dep);
        used -= departures.top().units;
        departures.pop();
        if (used < 0) throw std::logic_error("negative occupancy in simulation");
        continue;
      }
      advance(t_arr);
      const auto& c = classes[who];
      if (tally) ++tally->arrivals[who];
      if (cap - used >= c.b) {
        const double hold = config.service == ServiceDistribution::exponential
                                ? streams[who].exponential(c.mu)
                                : 1.0 / c.mu;
        used += c.b;
        if (used > cap) throw std::logic_error("occupancy exceeded capacity");
        departures.push({now + hold, seq++, c.b});
      } else if (tally) {
        ++tally->blocked[who];
      }
      next_arrival[who] = now + streams[who].exponential(c.lambda);
    }
  }
  return tallies;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_error_of(const std::vector<double>& v) {
  if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

SimResult merge(const std::vector<std::vector<Tally>>& reps, int index, std::size_t nc) {
  SimResult r;
  r.arrivals.assign(nc, 0);
  r.blocked.assign(nc, 0);
  std::vector<double> util;
  for (const auto& rep : reps) {
    const auto& t = rep[index];
    util.push_back(t.capacity > 0 ? t.busy_integral / (t.duration * t.capacity) : 0.0);
  }
  r.utilization = mean_of(util);
  for (std::size_t j = 0; j < nc; ++j) {
    std::vector<double> frac;
    std::vector<double> tfrac;
    for (const auto& rep : reps) {
      const auto& t = rep[index];
      r.arrivals[j] += t.arrivals[j];
      r.blocked[j] += t.blocked[j];
      if (t.arrivals[j] > 0) {
        frac.push_back(static_cast<double>(t.blocked[j]) / static_cast<double>(t.arrivals[j]));
      }
      tfrac.push_back(t.short_time[j] / t.duration);
    }
    r.beta_hat.push_back(mean_of(frac));
    r.std_error.push_back(frac.empty() ? 0.0 : std_error_of(frac));
    r.time_blocking.push_back(mean_of(tfrac));
    r.time_blocking_std_error.push_back(std_error_of(tfrac));
  }
  return r;
}

std::vector<SimResult> run(const std::vector<Segment>& segments, int num_tallies,
                           const SimConfig& config) {
  const int reps = config.replications;
  std::vector<std::vector<Tally>> results(reps);
  const int workers =
      std::max(1, std::min<int>(reps, static_cast<int>(std::thread::hardware_concurrency())));
  for (int first = 0; first < reps; first += workers) {
    std::vector<std::future<std::vector<Tally>>> batch;
    for (int r = first; r < std::min(reps, first + workers); ++r) {
      batch.push_back(std::async(std::launch::async, run_replication, std::cref(segments),
                                 num_tallies, std::cref(config), static_cast<std::uint64_t>(r)));
    }
    for (std::size_t i = 0; i < batch.size(); ++i) results[first + i] = batch[i].get();
  }
  const std::size_t nc = segments.front().scenario.classes.size();
  std::vector<SimResult> out;
  for (int k = 0; k < num_tallies; ++k) out.push_back(merge(results, k, nc));
  return out;
}

}  // namespace

void require_valid(const SimConfig& config) {
  if (!(config.horizon > 0.0) || !std::isfinite(config.horizon)) {
    throw std::invalid_argument("simulation horizon must be positive");
  }
  if (!(config.warmup >= 0.0) || !(config.warmup < config.horizon)) {
    throw std::invalid_argument("warmup must be nonnegative and shorter than the horizon");
  }
  if (config.replications < 1) throw std::invalid_argument("need at least one replication");
}

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t replication,
                          std::uint64_t class_index) {
  return splitmix64(master ^ splitmix64((replication << 32) + class_index));
}

SimResult simulate(const Scenario& scenario, const SimConfig& config) {
  require_valid(scenario);
  require_valid(config);
  std::vector<Segment> segs;
  if (config.warmup > 0.0) segs.push_back({scenario, config.warmup, -1});
  segs.push_back({scenario, config.horizon - config.warmup, 0});
  return run(segs, 1, config).front();
}

std::vector<SimResult> simulate_profile(const std::vector<CustomerClass>& classes,
                                        const TimeProfile& profile, const SimConfig& config) {
  const auto diags = validate_profile(classes, profile);
  for (const auto& d : diags) {
    if (d.find("can never be served") == std::string::npos) {
      throw std::invalid_argument("invalid profile: " + d);
    }
  }
  require_valid(config);
  std::vector<Segment> segs;
  if (config.warmup > 0.0) {
    segs.push_back({merge_period(classes, profile.periods.front()), config.warmup, -1});
  }
  for (std::size_t k = 0; k < profile.periods.size(); ++k) {
    segs.push_back({merge_period(classes, profile.periods[k]), config.horizon,
                    static_cast<int>(k)});
  }
  return run(segs, static_cast<int>(profile.periods.size()), config);
}

}  // namespace evcap
