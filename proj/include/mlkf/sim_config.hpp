#ifndef MLKF_SIM_CONFIG_HPP
#define MLKF_SIM_CONFIG_HPP

#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "mlkf/error.hpp"
#include "mlkf/simbench.hpp"

namespace mlkf::sim {

namespace detail {

template <typename T>
T get_as(const nlohmann::json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw config_error("config key '" + key + "' has the wrong type");
  }
}

inline Index get_count(const nlohmann::json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw config_error("config key '" + key + "' must be a nonnegative integer");
  }
  return static_cast<Index>(v.get<long long>());
}

inline double get_real(const nlohmann::json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw config_error("config key '" + key + "' must be a number");
  return v.get<double>();
}

}  // namespace detail

/// Experiment config from a parsed TOML/JSON document. `profile` selects the base values;
/// every other key overrides one field. Unknown keys are rejected.
inline ExperimentConfig config_from_json(const nlohmann::json& j, const std::string& default_profile = "desk") {
  if (!j.is_object()) throw config_error("experiment config must be a table");
  static const std::set<std::string> known{"profile", "design",  "n",        "N",           "rho",
                                           "snr",     "k",       "saturation", "n_nonzero", "group_size",
                                           "layer_offset", "pattern", "methods", "q",       "c",
                                           "combiner", "reps",   "master_seed", "pattern_seed", "sweep"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw config_error("unknown config key '" + it.key() + "'");
  }
  ExperimentConfig cfg = profile(j.contains("profile") ? detail::get_as<std::string>(j, "profile") : default_profile);
  if (j.contains("design")) {
    const auto d = detail::get_as<std::string>(j, "design");
    if (d == "ar1") {
      cfg.design = Design::ar1;
    } else if (d == "ztest") {
      cfg.design = Design::ztest;
    } else {
      throw config_error("design must be ar1 or ztest");
    }
  }
  if (j.contains("n")) cfg.n = detail::get_count(j, "n");
  if (j.contains("N")) cfg.N = detail::get_count(j, "N");
  if (j.contains("rho")) cfg.rho = detail::get_real(j, "rho");
  if (j.contains("snr")) cfg.snr = detail::get_real(j, "snr");
  if (j.contains("saturation")) cfg.k = saturation_groups(detail::get_as<std::string>(j, "saturation"));
  if (j.contains("k")) cfg.k = detail::get_count(j, "k");
  if (j.contains("n_nonzero")) cfg.n_nonzero = detail::get_count(j, "n_nonzero");
  if (j.contains("group_size")) cfg.group_size = detail::get_count(j, "group_size");
  if (j.contains("layer_offset")) cfg.layer_offset = detail::get_count(j, "layer_offset");
  if (j.contains("pattern")) cfg.pattern = parse_pattern(detail::get_as<std::string>(j, "pattern"));
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const auto& m : j.at("methods")) {
      if (!m.is_string()) throw config_error("methods must be a list of names");
      cfg.methods.push_back(parse_method(m.get<std::string>()));
    }
  }
  if (j.contains("q")) {
    cfg.q.clear();
    const auto& q = j.at("q");
    if (q.is_number()) {
      cfg.q = {q.get<double>(), q.get<double>()};
    } else {
      for (const auto& v : q) {
        if (!v.is_number()) throw config_error("q must be a number or a list of numbers");
        cfg.q.push_back(v.get<double>());
      }
    }
  }
  if (j.contains("c")) cfg.c = detail::get_real(j, "c");
  if (j.contains("combiner")) cfg.combiner = parse_combiner(detail::get_as<std::string>(j, "combiner"));
  if (j.contains("reps")) cfg.reps = detail::get_count(j, "reps");
  if (j.contains("master_seed")) cfg.master_seed = static_cast<std::uint64_t>(detail::get_count(j, "master_seed"));
  if (j.contains("pattern_seed")) cfg.pattern_seed = static_cast<std::uint64_t>(detail::get_count(j, "pattern_seed"));
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    if (!s.is_object() || !s.contains("param") || !s.contains("values")) {
      throw config_error("[sweep] needs param and values");
    }
    cfg.sweep_param = detail::get_as<std::string>(s, "param");
    cfg.sweep_values.clear();
    for (const auto& v : s.at("values")) {
      if (!v.is_number()) throw config_error("sweep values must be numbers");
      cfg.sweep_values.push_back(v.get<double>());
    }
  }
  cfg.validate();
  return cfg;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["profile"] = cfg.profile;
  j["design"] = cfg.design == Design::ar1 ? "ar1" : "ztest";
  j["n"] = cfg.n;
  j["N"] = cfg.N;
  j["rho"] = cfg.rho;
  j["snr"] = cfg.snr;
  j["k"] = cfg.k;
  j["n_nonzero"] = cfg.n_nonzero;
  j["group_size"] = cfg.group_size;
  j["layer_offset"] = cfg.layer_offset;
  j["pattern"] = to_string(cfg.pattern);
  j["methods"] = nlohmann::json::array();
  for (Method m : cfg.methods) j["methods"].push_back(to_string(m));
  j["q"] = cfg.q;
  j["c"] = cfg.c;
  j["combiner"] = mlkf::to_string(cfg.combiner);
  j["reps"] = cfg.reps;
  j["master_seed"] = cfg.master_seed;
  j["pattern_seed"] = cfg.pattern_seed;
  if (!cfg.sweep_param.empty()) j["sweep"] = {{"param", cfg.sweep_param}, {"values", cfg.sweep_values}};
  return j;
}

}  // namespace mlkf::sim

#endif  // MLKF_SIM_CONFIG_HPP
