#include "evcap/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace evcap {

using nlohmann::json;

namespace {

const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(path + "/" + key, "missing required field");
  return *it;
}

double number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(path, "expected a finite number");
  return d;
}

// Integers may be written as 50 or 50.0, but not 50.5.
int integer(const json& v, const std::string& path) {
  const double d = number(v, path);
  if (d != std::floor(d)) throw ConfigError(path, "expected an integer, got a fractional value");
  if (std::abs(d) > 2e9) throw ConfigError(path, "integer out of range");
  return static_cast<int>(d);
}

std::vector<double> numbers(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(number(v[i], path + "/" + std::to_string(i)));
  }
  return out;
}

}  // namespace

Config parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("", "top level must be an object");
  Config cfg;
  cfg.scenario.capacity = integer(field(doc, "capacity", ""), "/capacity");

  const auto& classes = field(doc, "classes", "");
  if (!classes.is_array()) throw ConfigError("/classes", "expected an array");
  for (std::size_t j = 0; j < classes.size(); ++j) {
    const std::string p = "/classes/" + std::to_string(j);
    CustomerClass c;
    c.b = integer(field(classes[j], "b", p), p + "/b");
    c.mu = number(field(classes[j], "mu", p), p + "/mu");
    c.lambda = number(field(classes[j], "lambda", p), p + "/lambda");
    cfg.scenario.classes.push_back(c);
  }

  if (auto it = doc.find("qos"); it != doc.end()) {
    cfg.qos = QosTargets{numbers(*it, "/qos")};
  }
  if (auto it = doc.find("profile"); it != doc.end()) {
    if (!it->is_array()) throw ConfigError("/profile", "expected an array of periods");
    TimeProfile prof;
    for (std::size_t k = 0; k < it->size(); ++k) {
      const std::string p = "/profile/" + std::to_string(k);
      ProfilePeriod period;
      period.capacity = integer(field((*it)[k], "capacity", p), p + "/capacity");
      if (auto l = (*it)[k].find("lambdas"); l != (*it)[k].end()) {
        period.lambdas = numbers(*l, p + "/lambdas");
      }
      prof.periods.push_back(std::move(period));
    }
    cfg.profile = std::move(prof);
  }
  if (auto it = doc.find("weights"); it != doc.end()) {
    UtilityWeights w;
    w.omega = numbers(field(*it, "omega", "/weights"), "/weights/omega");
    w.theta = numbers(field(*it, "theta", "/weights"), "/weights/theta");
    cfg.weights = std::move(w);
  }
  if (auto it = doc.find("simulation"); it != doc.end()) {
    if (!it->is_object()) throw ConfigError("/simulation", "expected an object");
    SimConfig sc;
    if (auto v = it->find("horizon"); v != it->end()) sc.horizon = number(*v, "/simulation/horizon");
    if (auto v = it->find("warmup"); v != it->end()) sc.warmup = number(*v, "/simulation/warmup");
    if (auto v = it->find("seed"); v != it->end()) {
      if (!v->is_number_unsigned()) {
        throw ConfigError("/simulation/seed", "expected a nonnegative integer");
      }
      sc.seed = v->get<std::uint64_t>();
    }
    if (auto v = it->find("replications"); v != it->end()) {
      sc.replications = integer(*v, "/simulation/replications");
    }
    cfg.simulation = sc;
  }
  return cfg;
}

Config parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    throw ConfigError("line " + std::to_string(line), e.what());
  }
  return parse_config(doc);
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

json to_json(const Config& cfg) {
  json doc;
  doc["capacity"] = cfg.scenario.capacity;
  doc["classes"] = json::array();
  for (const auto& c : cfg.scenario.classes) {
    doc["classes"].push_back({{"b", c.b}, {"mu", c.mu}, {"lambda", c.lambda}});
  }
  if (cfg.qos) doc["qos"] = cfg.qos->delta;
  if (cfg.profile) {
    doc["profile"] = json::array();
    for (const auto& p : cfg.profile->periods) {
      json period{{"capacity", p.capacity}};
      if (p.lambdas) period["lambdas"] = *p.lambdas;
      doc["profile"].push_back(std::move(period));
    }
  }
  if (cfg.weights) {
    doc["weights"] = {{"omega", cfg.weights->omega}, {"theta", cfg.weights->theta}};
  }
  if (cfg.simulation) {
    const auto& s = *cfg.simulation;
    doc["simulation"] = {{"horizon", s.horizon},
                         {"warmup", s.warmup},
                         {"seed", s.seed},
                         {"replications", s.replications}};
  }
  return doc;
}

std::string config_digest(const json& doc) {
  const std::string canon = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace evcap
