#ifndef EVCAP_CONFIG_HPP_
#define EVCAP_CONFIG_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "evcap/model.hpp"
#include "evcap/pricing.hpp"
#include "evcap/sim.hpp"

namespace evcap {

// Scenario file contents. JSON layout:
//
//   {
//     "capacity": 1000,
//     "classes": [ {"b": 50, "mu": 3, "lambda": 14}, ... ],
//     "qos": [0.04, 0.01],                                   (optional)
//     "profile": [ {"capacity": 683, "lambdas": [12, 10]} ], (optional)
//     "weights": {"omega": [20, 10], "theta": [60, 20]},     (optional)
//     "simulation": {"horizon": 1e5, "warmup": 1e3,
//                    "seed": 42, "replications": 10}         (optional)
//   }
//
// "lambdas" inside a profile period may be omitted to keep the base rates.
struct Config {
  Scenario scenario;
  std::optional<QosTargets> qos;
  std::optional<TimeProfile> profile;
  std::optional<UtilityWeights> weights;
  std::optional<SimConfig> simulation;
};

// Malformed input. `where` is a JSON pointer to the offending field, or
// "line N" for syntax errors.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

Config parse_config(const nlohmann::json& doc);
Config parse_config_text(const std::string& text);
Config load_config(const std::string& path);

nlohmann::json to_json(const Config& config);

// FNV-1a 64 of the canonical (key-sorted, compact) dump, as 16 hex digits.
std::string config_digest(const nlohmann::json& doc);

}  // namespace evcap

#endif  // EVCAP_CONFIG_HPP_
