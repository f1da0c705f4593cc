#include "evcap/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <thread>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "evcap/config.hpp"
#include "evcap/lolp.hpp"
#include "evcap/pricing.hpp"
#include "evcap/provision.hpp"
#include "evcap/sim.hpp"

namespace evcap::cli {

using nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  int steps = 1;

  double at(int i) const {
    return steps == 1 ? lo : lo + (hi - lo) * i / static_cast<double>(steps - 1);
  }
};

Range parse_range(const std::string& text, const std::string& flag) {
  Range r;
  char extra = 0;
  if (std::sscanf(text.c_str(), "%lf:%lf:%d%c", &r.lo, &r.hi, &r.steps, &extra) != 3 ||
      r.steps < 1) {
    throw UsageError(flag + " expects lo:hi:steps with steps >= 1, got '" + text + "'");
  }
  return r;
}

// Evaluates fn(0..n-1) on a worker pool; results keep index order.
template <class Fn>
auto parallel_map(std::size_t n, Fn fn) -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < n; i += workers) slots[i].emplace(fn(i));
    }));
  }
  for (auto& j : jobs) j.get();
  std::vector<R> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

std::string indexed(const std::string& stem, std::size_t j) {
  return stem + "_" + std::to_string(j + 1);
}

struct Options {
  std::string config_path;
  std::string out_dir;
  std::string format = "csv";
  std::optional<std::uint64_t> seed;
  std::optional<int> capacity;

  // lolp
  std::string sweep_lambda;
  std::string sweep_capacity;
  std::string split = "equal";
  bool exact = false;
  bool jacobian = false;

  // provision
  std::string delta_grid;
  std::optional<double> strict_delta;

  // price
  std::string objective = "net";
  std::optional<int> customers;
  double tolerance = 1e-6;
  int max_iterations = 10'000;

  // simulate
  std::optional<double> horizon;
  std::optional<double> warmup;
  std::optional<int> reps;
  bool check = false;
};

struct Outcome {
  Table table;
  int code = kExitOk;
};

Config load(const Options& opt) {
  Config cfg = load_config(opt.config_path);
  if (opt.capacity) cfg.scenario.capacity = *opt.capacity;
  return cfg;
}

Outcome cmd_validate(const Config& cfg) {
  std::vector<std::string> diags = validate_scenario(cfg.scenario);
  const std::size_t nc = cfg.scenario.classes.size();
  auto check = [&](auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      diags.emplace_back(e.what());
    }
  };
  if (cfg.qos) check([&] { require_valid(*cfg.qos, nc); });
  if (cfg.weights) check([&] { require_valid(*cfg.weights, nc); });
  if (cfg.simulation) check([&] { require_valid(*cfg.simulation); });
  if (cfg.profile) {
    for (auto& d : validate_profile(cfg.scenario.classes, *cfg.profile)) diags.push_back(d);
  }
  Outcome o;
  o.table.columns = {"diagnostic"};
  for (auto& d : diags) o.table.rows.push_back({d});
  o.code = diags.empty() ? kExitOk : kExitUsage;
  return o;
}

Outcome cmd_lolp(const Config& cfg, const Options& opt) {
  const auto& base = cfg.scenario;
  require_valid(base);
  const std::size_t nc = base.classes.size();
  Outcome o;

  if (!opt.sweep_lambda.empty()) {
    const Range r = parse_range(opt.sweep_lambda, "--sweep-lambda");
    if (opt.split != "equal" && opt.split != "proportional") {
      throw UsageError("--split must be 'equal' or 'proportional'");
    }
    double base_total = 0.0;
    for (const auto& c : base.classes) base_total += c.lambda;
    if (opt.split == "proportional" && !(base_total > 0.0)) {
      throw UsageError("--split proportional needs positive base arrival rates");
    }
    o.table.columns = {"total_lambda"};
    for (std::size_t j = 0; j < nc; ++j) o.table.columns.push_back(indexed("lambda", j));
    for (std::size_t j = 0; j < nc; ++j) o.table.columns.push_back(indexed("beta", j));
    o.table.rows = parallel_map(r.steps, [&](std::size_t i) {
      const double total = r.at(static_cast<int>(i));
      Scenario s = base;
      for (auto& c : s.classes) {
        c.lambda = opt.split == "equal" ? total / nc : total * c.lambda / base_total;
      }
      const auto beta = lolp(s);
      std::vector<Cell> row{total};
      for (const auto& c : s.classes) row.emplace_back(c.lambda);
      for (double b : beta.beta) row.emplace_back(b);
      return row;
    });
    return o;
  }

  if (!opt.sweep_capacity.empty()) {
    const Range r = parse_range(opt.sweep_capacity, "--sweep-capacity");
    if (r.lo < 0 || r.hi < 0) throw UsageError("--sweep-capacity needs nonnegative bounds");
    std::vector<int> caps;
    for (int i = 0; i < r.steps; ++i) caps.push_back(static_cast<int>(std::lround(r.at(i))));
    OccupancyTable table(base.classes);
    table.extend_to(*std::max_element(caps.begin(), caps.end()));
    o.table.columns = {"capacity"};
    for (std::size_t j = 0; j < nc; ++j) o.table.columns.push_back(indexed("beta", j));
    for (int c : caps) {
      std::vector<Cell> row{static_cast<long long>(c)};
      for (double b : table.lolp(c).beta) row.emplace_back(b);
      o.table.rows.push_back(std::move(row));
    }
    return o;
  }

  const auto beta = opt.exact ? lolp_exact(base) : lolp(base);
  std::optional<LolpJacobian> jac;
  if (opt.jacobian) jac = lolp_derivatives(base);
  o.table.columns = {"class", "b", "mu", "lambda", "q", "beta"};
  if (jac) {
    for (std::size_t k = 0; k < nc; ++k) o.table.columns.push_back(indexed("dbeta_dq", k));
  }
  for (std::size_t j = 0; j < nc; ++j) {
    const auto& c = base.classes[j];
    std::vector<Cell> row{static_cast<long long>(j + 1), static_cast<long long>(c.b), c.mu,
                          c.lambda, traffic_intensity(c), beta[j]};
    if (jac) {
      for (std::size_t k = 0; k < nc; ++k) row.emplace_back(jac->d_beta_d_q(j, k));
    }
    o.table.rows.push_back(std::move(row));
  }
  return o;
}

Outcome cmd_provision(const Config& cfg, const Options& opt) {
  const auto& classes = cfg.scenario.classes;
  require_valid(Scenario{0, classes});
  const std::size_t nc = classes.size();
  Outcome o;

  auto solve_row = [&](const QosTargets& targets) {
    std::vector<Cell> row;
    for (double d : targets.delta) row.emplace_back(d);
    try {
      const auto res = capacity_exact(classes, targets);
      row.emplace_back(static_cast<long long>(res.capacity_exact));
      row.emplace_back(res.capacity_asymptotic);
      row.emplace_back(res.x_star);
      row.emplace_back(static_cast<long long>(res.dominant_class + 1));
      if (opt.strict_delta) row.emplace_back(savings_vs_strict(classes, targets, *opt.strict_delta));
      row.emplace_back(std::string{});
      return std::pair{row, true};
    } catch (const UnreachableTargets& e) {
      row.emplace_back(std::string{});
      row.emplace_back(std::string{});
      row.emplace_back(std::string{});
      row.emplace_back(std::string{});
      if (opt.strict_delta) row.emplace_back(std::string{});
      row.emplace_back(std::string(e.what()));
      return std::pair{row, false};
    }
  };

  for (std::size_t j = 0; j < nc; ++j) o.table.columns.push_back(indexed("delta", j));
  for (const char* c : {"capacity_exact", "capacity_asymptotic", "x_star", "dominant_class"}) {
    o.table.columns.emplace_back(c);
  }
  if (opt.strict_delta) o.table.columns.emplace_back("savings_pct");
  o.table.columns.emplace_back("error");

  std::vector<QosTargets> grid;
  if (!opt.delta_grid.empty()) {
    const Range r = parse_range(opt.delta_grid, "--delta-grid");
    std::size_t cells = 1;
    for (std::size_t j = 0; j < nc; ++j) cells *= static_cast<std::size_t>(r.steps);
    for (std::size_t cell = 0; cell < cells; ++cell) {
      QosTargets t{std::vector<double>(nc)};
      std::size_t rem = cell;
      for (std::size_t j = nc; j-- > 0;) {
        t.delta[j] = r.at(static_cast<int>(rem % r.steps));
        rem /= r.steps;
      }
      require_valid(t, nc);
      grid.push_back(std::move(t));
    }
  } else {
    if (!cfg.qos) throw UsageError("provision needs 'qos' in the config or --delta-grid");
    require_valid(*cfg.qos, nc);
    grid.push_back(*cfg.qos);
  }

  const auto results = parallel_map(grid.size(), [&](std::size_t i) { return solve_row(grid[i]); });
  bool all_ok = true;
  for (const auto& [row, ok] : results) {
    o.table.rows.push_back(row);
    all_ok = all_ok && ok;
  }
  // A grid reports failures as rows; a single request fails the run.
  if (!all_ok && grid.size() == 1) o.code = kExitFailed;
  return o;
}

Outcome cmd_price(const Config& cfg, const Options& opt) {
  if (!cfg.weights) throw UsageError("price needs 'weights' in the config");
  const auto& base = cfg.scenario;
  const std::size_t nc = base.classes.size();
  require_valid(*cfg.weights, nc);
  SolverOptions so;
  if (opt.objective == "net") {
    so.objective = WelfareObjective::net_of_charges;
  } else if (opt.objective == "gross") {
    so.objective = WelfareObjective::gross_utility;
  } else {
    throw UsageError("--objective must be 'net' or 'gross'");
  }
  so.tolerance = opt.tolerance;
  so.max_iterations = opt.max_iterations;

  std::vector<int> caps;
  if (cfg.profile) {
    for (const auto& p : cfg.profile->periods) caps.push_back(p.capacity);
  } else {
    caps.push_back(base.capacity);
  }
  for (int c : caps) require_valid(Scenario{c, base.classes});

  Outcome o;
  o.table.columns = {"period", "capacity"};
  for (std::size_t j = 0; j < nc; ++j) o.table.columns.push_back(indexed("lambda", j));
  if (opt.customers) {
    for (std::size_t j = 0; j < nc; ++j) o.table.columns.push_back(indexed("lambda_per_customer", j));
  }
  for (std::size_t j = 0; j < nc; ++j) o.table.columns.push_back(indexed("price", j));
  for (std::size_t j = 0; j < nc; ++j) o.table.columns.push_back(indexed("beta", j));
  for (const char* c : {"welfare", "converged", "iterations", "gradient_norm"}) {
    o.table.columns.emplace_back(c);
  }

  const auto results = parallel_map(caps.size(), [&](std::size_t k) {
    return solve_equilibrium(Scenario{caps[k], base.classes}, *cfg.weights, std::nullopt, so);
  });
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    std::vector<Cell> row{static_cast<long long>(k), static_cast<long long>(caps[k])};
    for (double v : r.lambda_star) row.emplace_back(v);
    if (opt.customers) {
      for (double v : r.per_customer_rates(*opt.customers)) row.emplace_back(v);
    }
    for (double v : r.prices) row.emplace_back(v);
    for (double v : r.beta_star.beta) row.emplace_back(v);
    row.emplace_back(r.welfare);
    row.emplace_back(static_cast<long long>(r.converged ? 1 : 0));
    row.emplace_back(static_cast<long long>(r.iterations));
    row.emplace_back(r.gradient_norm);
    o.table.rows.push_back(std::move(row));
    if (!r.converged) o.code = kExitFailed;
  }
  return o;
}

Outcome cmd_simulate(const Config& cfg, const Options& opt) {
  SimConfig sc = cfg.simulation.value_or(SimConfig{});
  if (opt.horizon) sc.horizon = *opt.horizon;
  if (opt.warmup) sc.warmup = *opt.warmup;
  if (opt.reps) sc.replications = *opt.reps;
  if (opt.seed) sc.seed = *opt.seed;
  require_valid(sc);
  const auto& classes = cfg.scenario.classes;
  const std::size_t nc = classes.size();

  std::vector<SimResult> results;
  std::vector<Scenario> scenarios;
  if (cfg.profile) {
    results = simulate_profile(classes, *cfg.profile, sc);
    for (const auto& p : cfg.profile->periods) scenarios.push_back(merge_period(classes, p));
    if (opt.check && !cfg.qos) {
      throw UsageError("--check on a profile compares against 'qos' targets; none given");
    }
    if (cfg.qos) require_valid(*cfg.qos, nc);
  } else {
    results.push_back(simulate(cfg.scenario, sc));
    scenarios.push_back(cfg.scenario);
  }

  Outcome o;
  o.table.columns = {"period", "capacity", "class", "arrivals", "blocked", "beta_hat",
                     "std_error", "time_blocking", "utilization"};
  if (opt.check) {
    for (const char* c : {"reference", "within_3se"}) o.table.columns.emplace_back(c);
  }
  bool pass = true;
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    std::optional<LolpVector> analytic;
    if (opt.check && !cfg.profile) analytic = lolp(scenarios[k]);
    for (std::size_t j = 0; j < nc; ++j) {
      std::vector<Cell> row{static_cast<long long>(k), static_cast<long long>(scenarios[k].capacity),
                            static_cast<long long>(j + 1),
                            static_cast<long long>(r.arrivals[j]),
                            static_cast<long long>(r.blocked[j]),
                            r.beta_hat[j],
                            r.std_error[j],
                            r.time_blocking[j],
                            r.utilization};
      if (opt.check) {
        const double se = std::isnan(r.std_error[j]) ? 0.0 : r.std_error[j];
        bool ok;
        double ref;
        if (analytic) {
          ref = (*analytic)[j];
          ok = std::abs(r.beta_hat[j] - ref) <= 3.0 * se;
        } else {
          // Profile runs are checked against the QoS targets instead.
          ref = cfg.qos->delta[j];
          ok = r.beta_hat[j] + 3.0 * se <= ref;
        }
        row.emplace_back(ref);
        row.emplace_back(static_cast<long long>(ok ? 1 : 0));
        pass = pass && ok;
      }
      o.table.rows.push_back(std::move(row));
    }
  }
  if (!pass) o.code = kExitFailed;
  return o;
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool use_color() { return std::getenv("NO_COLOR") == nullptr && ::isatty(STDERR_FILENO); }

void report_error(std::ostream& err, const std::string& msg) {
  if (&err == &std::cerr && use_color()) {
    err << "\033[31merror:\033[0m " << msg << '\n';
  } else {
    err << "error: " << msg << '\n';
  }
}

}  // namespace

void write_csv(const Table& table, std::ostream& os) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    os << (i ? "," : "") << csv_escape(table.columns[i]);
  }
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              os << format_double(v);
            } else if constexpr (std::is_same_v<T, long long>) {
              os << v;
            } else {
              os << csv_escape(v);
            }
          },
          row[i]);
    }
    os << '\n';
  }
}

void write_json(const Table& table, std::ostream& os) {
  json rows = json::array();
  for (const auto& row : table.rows) {
    json obj = json::object();
    for (std::size_t i = 0; i < row.size() && i < table.columns.size(); ++i) {
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              obj[table.columns[i]] = std::isfinite(v) ? json(v) : json(nullptr);
            } else {
              obj[table.columns[i]] = v;
            }
          },
          row[i]);
    }
    rows.push_back(std::move(obj));
  }
  os << rows.dump(2) << '\n';
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-class EV charging station loss analysis"};
  app.require_subcommand(1);
  Options opt;

  auto shared = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "Scenario JSON file")->required();
    sub->add_option("--out", opt.out_dir, "Write <subcommand>.<format> and a manifest here");
    sub->add_option("--format", opt.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", opt.seed, "Random seed (overrides the config)");
    sub->add_option("--capacity", opt.capacity, "Override the config capacity");
  };

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  shared(validate);

  auto* lolp_cmd = app.add_subcommand("lolp", "Per-class loss-of-load probabilities");
  shared(lolp_cmd);
  lolp_cmd->add_option("--sweep-lambda", opt.sweep_lambda, "Total arrival rate lo:hi:steps");
  lolp_cmd->add_option("--split", opt.split, "equal or proportional split of the total rate");
  lolp_cmd->add_option("--sweep-capacity", opt.sweep_capacity, "Capacity lo:hi:steps");
  lolp_cmd->add_flag("--exact", opt.exact, "Use full state enumeration");
  lolp_cmd->add_flag("--jacobian", opt.jacobian, "Add d beta / d q columns");

  auto* provision = app.add_subcommand("provision", "Minimum capacity for QoS targets");
  shared(provision);
  provision->add_option("--delta-grid", opt.delta_grid, "Per-class target grid lo:hi:steps");
  provision->add_option("--strict-delta", opt.strict_delta, "Report savings against this target");

  auto* price = app.add_subcommand("price", "Welfare-maximizing rates and congestion prices");
  shared(price);
  price->add_option("--objective", opt.objective, "net (default) or gross");
  price->add_option("--customers", opt.customers, "Also report per-customer rates");
  price->add_option("--tolerance", opt.tolerance, "Projected-gradient stopping tolerance");
  price->add_option("--max-iter", opt.max_iterations, "Iteration limit per start");

  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo simulation of the station");
  shared(simulate_cmd);
  simulate_cmd->add_option("--horizon", opt.horizon, "Simulated time (per period for profiles)");
  simulate_cmd->add_option("--warmup", opt.warmup, "Discarded initial time");
  simulate_cmd->add_option("--reps", opt.reps, "Independent replications");
  simulate_cmd->add_flag("--check", opt.check,
                         "Fail (exit 2) outside 3 standard errors of the analytic value, or "
                         "above the QoS targets for profiles");

  std::vector<const char*> argv{"evcap"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    Config cfg = load(opt);
    if (opt.seed) {
      SimConfig sc = cfg.simulation.value_or(SimConfig{});
      sc.seed = *opt.seed;
      if (name == "simulate") cfg.simulation = sc;
    }

    Outcome res;
    if (name == "validate") {
      res = cmd_validate(cfg);
    } else if (name == "lolp") {
      res = cmd_lolp(cfg, opt);
    } else if (name == "provision") {
      res = cmd_provision(cfg, opt);
    } else if (name == "price") {
      res = cmd_price(cfg, opt);
    } else {
      res = cmd_simulate(cfg, opt);
    }

    std::ostringstream body;
    if (opt.format == "json") {
      write_json(res.table, body);
    } else {
      write_csv(res.table, body);
    }

    if (opt.out_dir.empty()) {
      out << body.str();
    } else {
      namespace fs = std::filesystem;
      fs::create_directories(opt.out_dir);
      const fs::path table_path = fs::path(opt.out_dir) / (name + "." + opt.format);
      const fs::path manifest_path = fs::path(opt.out_dir) / (name + ".manifest.json");
      std::ofstream(table_path, std::ios::binary) << body.str();
      json manifest{{"subcommand", name},
                    {"input_digest", config_digest(to_json(cfg))},
                    {"tool_version", kToolVersion},
                    {"seed", cfg.simulation && name == "simulate" ? json(cfg.simulation->seed)
                                                                  : json(nullptr)},
                    {"timestamp", utc_timestamp()},
                    {"outputs", {table_path.string()}}};
      std::ofstream(manifest_path) << manifest.dump(2) << '\n';
      out << table_path.string() << '\n';
    }
    if (res.code != kExitOk && name == "validate") {
      for (const auto& row : res.table.rows) report_error(err, std::get<std::string>(row[0]));
    }
    return res.code;
  } catch (const ConfigError& e) {
    report_error(err, std::string("config ") + e.what());
    return kExitUsage;
  } catch (const UsageError& e) {
    report_error(err, e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    report_error(err, e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    report_error(err, e.what());
    return kExitFailed;
  }
}

}  // namespace evcap::cli
