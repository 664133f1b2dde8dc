#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqdyn/errors.hpp"
#include "seqdyn/maps/sequence.hpp"
#include "seqdyn/runner/toml.hpp"

namespace seqdyn {

enum class ParamType { count, index, real, boolean, string, count_list, real_list };

inline const char* param_type_name(ParamType t) {
  switch (t) {
    case ParamType::count: return "count";
    case ParamType::index: return "integer >= 0";
    case ParamType::real: return "real";
    case ParamType::boolean: return "bool";
    case ParamType::string: return "string";
    case ParamType::count_list: return "list of counts";
    case ParamType::real_list: return "list of reals";
  }
  return "?";
}

struct ParamSpec {
  std::string name;
  ParamType type;
  bool required = false;
  nlohmann::json fallback;              // used when optional and absent
  std::vector<std::string> choices;     // for strings
  std::optional<double> min, max;       // for reals and real lists, inclusive
  std::string help;
};

struct ScenarioInfo {
  std::string name;
  std::string verifies;
  std::vector<ParamSpec> params;

  std::vector<std::string> required() const {
    std::vector<std::string> out;
    for (const auto& p : params) {
      if (p.required) out.push_back(p.name);
    }
    return out;
  }
};

inline const std::vector<ScenarioInfo>& scenario_table() {
  using P = ParamSpec;
  using T = ParamType;
  static const std::vector<ScenarioInfo> table{
      {"decay",
       "memory loss: transfer operators contract zero-mean BV functions geometrically",
       {P{"n_max", T::count, true, {}, {}, {}, {}, "largest n in the BV norm table (>= 4)"},
        P{"skip", T::index, false, 2, {}, {}, {}, "initial n excluded from the fit"},
        P{"proxy_cells", T::count, false, 1048576, {}, {}, {}, "cells of the x - 1/2 proxy; the proxy turns constant after log2(cells) steps"},
        P{"ulam_bins", T::count, false, 16384, {}, {}, {}, "grid size when the exact path is left"}}},
      {"minoration",
       "minoration: pushforward densities stay above a positive constant",
       {P{"horizon", T::count, true, {}, {}, {}, {}, "largest n"},
        P{"predict", T::boolean, false, true, {}, {}, {}, "also evaluate the covering prediction of delta"},
        P{"ulam_bins", T::count, false, 16384, {}, {}, {}, "grid size when the exact path is left"}}},
      {"covering",
       "covering implies minoration; bounded inverse-derivative sums over monotonicity cells",
       {P{"n_max", T::count, true, {}, {}, {}, {}, "largest block length"},
        P{"max_steps", T::count, false, 64, {}, {}, {}, "covering horizon search limit"},
        P{"block_start", T::count, false, 1, {}, {}, {}, "index of the first map of each block"},
        P{"cms", T::boolean, false, true, {}, {}, {}, "also compute inverse-derivative sums"}}},
      {"ld_tail",
       "large deviations of Birkhoff averages for Lipschitz observables",
       {P{"n", T::count, true, {}, {}, {}, {}, "orbit length"},
        P{"m_samples", T::count, true, {}, {}, {}, {}, "orbits"},
        P{"t_list", T::real_list, true, {}, {}, 0.0, {}, "deviation thresholds"},
        P{"observable", T::string, false, "x", {"x", "x-1/2"}, {}, {}, "observable f"}}},
      {"empirical_measure",
       "Kantorovich distance of the empirical measure to m_n is of order n^-1/2",
       {P{"n_list", T::count_list, true, {}, {}, {}, {}, "orbit lengths"},
        P{"m_samples", T::count, true, {}, {}, {}, {}, "orbits per n"},
        P{"t_list", T::real_list, false, {0.5, 1.0, 1.5, 2.0, 3.0}, {}, 0.0, {}, "thresholds for sqrt(n) kappa"}}},
      {"shadowing",
       "shadowing: distance of a typical orbit to orbits started in A",
       {P{"n", T::count, true, {}, {}, {}, {}, "orbit length"},
        P{"m_samples", T::count, true, {}, {}, {}, {}, "random points x"},
        P{"widths", T::real_list, true, {}, {}, 1e-12, 1.0, "A = [0, w) for each width"},
        P{"candidate_grid", T::count, false, {}, {}, {}, {}, "candidates per width; default grid_per_unit * w"},
        P{"grid_per_unit", T::count, false, 4096, {}, {}, {}, "candidate density per unit length"},
        P{"t_list", T::real_list, false, {0.0, 0.5, 1.0, 1.5, 2.0}, {}, {}, {}, "tail thresholds"}}},
      {"asclt",
       "almost sure central limit theorem for normalized ergodic sums",
       {P{"n", T::count, true, {}, {}, {}, {}, "orbit length"},
        P{"orbits", T::count, false, 5, {}, {}, {}, "independent starting points"},
        P{"route", T::string, false, "operator", {"operator", "montecarlo"}, {}, {}, "route for ||S_k||_2"},
        P{"mc_samples", T::count, false, 10000, {}, {}, {}, "ensemble size for the montecarlo route"},
        P{"observable", T::string, false, "x-1/2", {"x", "x-1/2", "constant"}, {}, {}, "observable f"}}},
      {"concentration",
       "exponential concentration for separately Lipschitz functionals",
       {P{"n_list", T::count_list, true, {}, {}, {}, {}, "orbit lengths"},
        P{"m_samples", T::count, true, {}, {}, {}, {}, "orbits per n"},
        P{"lambda_list", T::real_list, true, {}, {}, {}, {}, "exponents lambda"},
        P{"t_list", T::real_list, false, {0.5, 1.0, 1.5, 2.0}, {}, 0.0, {}, "thresholds for sqrt(n) (K - EK)"}}},
      {"martingale",
       "martingale-coboundary decomposition with bounded coboundary",
       {P{"n_list", T::count_list, true, {}, {}, {}, {}, "orbit lengths"},
        P{"orbit_samples", T::count, false, 100, {}, {}, {}, "orbits on which the identity is checked"}}},
      {"kp_check",
       "closed formula for conditional expectations given x_p",
       {P{"p_max", T::count, true, {}, {}, {}, {}, "largest p"},
        P{"m_samples", T::count, true, {}, {}, {}, {}, "Monte-Carlo draws per p"},
        P{"x_points", T::real_list, false, {0.3}, {}, 0.0, 0.999999, "conditioning values x_p"},
        P{"bin_width", T::real, false, 2e-3, {}, 1e-9, 0.5, "Monte-Carlo conditioning bin width"}}},
  };
  return table;
}

inline const ScenarioInfo* find_scenario(const std::string& name) {
  for (const auto& s : scenario_table()) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

struct ExperimentConfig {
  std::string scenario;
  std::string name;  // output file stem
  std::uint64_t seed = 0;
  SequenceSpec sequence;
  nlohmann::json params = nlohmann::json::object();  // defaults filled in
  std::optional<std::string> output;

  std::size_t count(const std::string& key) const { return params.at(key).get<std::size_t>(); }
  double real(const std::string& key) const { return params.at(key).get<double>(); }
  bool flag(const std::string& key) const { return params.at(key).get<bool>(); }
  std::string text(const std::string& key) const { return params.at(key).get<std::string>(); }
  std::vector<std::size_t> counts(const std::string& key) const { return params.at(key).get<std::vector<std::size_t>>(); }
  std::vector<double> reals(const std::string& key) const { return params.at(key).get<std::vector<double>>(); }
  bool has(const std::string& key) const { return params.contains(key) && !params.at(key).is_null(); }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j{{"scenario", c.scenario}, {"name", c.name}, {"seed", c.seed}, {"params", c.params}};
  nlohmann::json seq;
  to_json(seq, c.sequence);
  j["sequence"] = seq;
  if (c.output) j["output"] = *c.output;
  return j;
}

namespace detail {

inline bool is_count(const nlohmann::json& v) {
  return (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 1)) &&
         v.get<std::uint64_t>() >= 1;
}

inline void check_param(const ParamSpec& spec, const nlohmann::json& v, std::vector<std::string>& problems) {
  const std::string where = "params." + spec.name;
  auto bounded = [&](double x) {
    if (!std::isfinite(x)) return false;
    if (spec.min && x < *spec.min) return false;
    if (spec.max && x > *spec.max) return false;
    return true;
  };
  auto range_text = [&] {
    std::string s;
    if (spec.min) s += " >= " + std::to_string(*spec.min);
    if (spec.max) s += " <= " + std::to_string(*spec.max);
    return s;
  };
  switch (spec.type) {
    case ParamType::count:
      if (!is_count(v)) problems.push_back(where + ": must be an integer >= 1");
      break;
    case ParamType::index:
      if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0))) {
        problems.push_back(where + ": must be an integer >= 0");
      }
      break;
    case ParamType::real:
      if (!v.is_number() || !bounded(v.get<double>())) problems.push_back(where + ": must be a finite real" + range_text());
      break;
    case ParamType::boolean:
      if (!v.is_boolean()) problems.push_back(where + ": must be true or false");
      break;
    case ParamType::string: {
      if (!v.is_string()) {
        problems.push_back(where + ": must be a string");
        break;
      }
      if (!spec.choices.empty() &&
          std::find(spec.choices.begin(), spec.choices.end(), v.get<std::string>()) == spec.choices.end()) {
        std::string opts;
        for (const auto& c : spec.choices) opts += (opts.empty() ? "" : ", ") + c;
        problems.push_back(where + ": must be one of " + opts);
      }
      break;
    }
    case ParamType::count_list:
      if (!v.is_array() || v.empty()) {
        problems.push_back(where + ": must be a nonempty list of integers >= 1");
        break;
      }
      for (const auto& e : v) {
        if (!is_count(e)) {
          problems.push_back(where + ": entries must be integers >= 1");
          break;
        }
      }
      break;
    case ParamType::real_list:
      if (!v.is_array() || v.empty()) {
        problems.push_back(where + ": must be a nonempty list of reals");
        break;
      }
      for (const auto& e : v) {
        if (!e.is_number() || !bounded(e.get<double>())) {
          problems.push_back(where + ": entries must be finite reals" + range_text());
          break;
        }
      }
      break;
  }
}

}  // namespace detail

/// Validates a parsed config document, reporting every violated field at once.
inline ExperimentConfig parse_config(const nlohmann::json& doc) {
  std::vector<std::string> problems;
  ExperimentConfig c;
  if (!doc.is_object()) throw ValidationError({"config: top level must be a table"});
  for (const auto& [key, _] : doc.items()) {
    if (key != "scenario" && key != "seed" && key != "name" && key != "output" && key != "sequence" &&
        key != "params") {
      problems.push_back(key + ": unknown field");
    }
  }
  const ScenarioInfo* info = nullptr;
  if (!doc.contains("scenario")) {
    problems.emplace_back("scenario: required");
  } else if (!doc["scenario"].is_string() || !(info = find_scenario(doc["scenario"].get<std::string>()))) {
    problems.emplace_back("scenario: unknown scenario (see `seqdyn list`)");
  } else {
    c.scenario = info->name;
  }
  if (!doc.contains("seed")) {
    problems.emplace_back("seed: required");
  } else if (!(doc["seed"].is_number_unsigned() ||
               (doc["seed"].is_number_integer() && doc["seed"].get<std::int64_t>() >= 0))) {
    problems.emplace_back("seed: must be an integer >= 0");
  } else {
    c.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("name")) {
    if (!doc["name"].is_string() || doc["name"].get<std::string>().empty() ||
        doc["name"].get<std::string>().find_first_of("/\\") != std::string::npos) {
      problems.emplace_back("name: must be a nonempty string without path separators");
    } else {
      c.name = doc["name"].get<std::string>();
    }
  }
  if (c.name.empty()) c.name = c.scenario;
  if (doc.contains("output")) {
    if (!doc["output"].is_string()) {
      problems.emplace_back("output: must be a string");
    } else {
      c.output = doc["output"].get<std::string>();
    }
  }
  if (!doc.contains("sequence")) {
    problems.emplace_back("sequence: required");
  } else {
    c.sequence = parse_sequence_spec(doc["sequence"], problems);
  }
  const nlohmann::json params = doc.contains("params") ? doc["params"] : nlohmann::json::object();
  if (!params.is_object()) {
    problems.emplace_back("params: must be a table");
  } else if (info) {
    for (const auto& [key, _] : params.items()) {
      const bool known = std::any_of(info->params.begin(), info->params.end(), [&](const ParamSpec& p) { return p.name == key; });
      if (!known) problems.push_back("params." + key + ": not a parameter of scenario " + info->name);
    }
    for (const auto& spec : info->params) {
      if (params.contains(spec.name)) {
        detail::check_param(spec, params[spec.name], problems);
        c.params[spec.name] = params[spec.name];
      } else if (spec.required) {
        problems.push_back("params." + spec.name + ": required by scenario " + info->name);
      } else if (!spec.fallback.is_null()) {
        c.params[spec.name] = spec.fallback;
      }
    }
    if (c.scenario == "decay" && params.contains("n_max") && detail::is_count(params["n_max"]) &&
        params["n_max"].get<std::size_t>() < 4) {
      problems.emplace_back("params.n_max: decay needs n_max >= 4");
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return c;
}

inline nlohmann::json parse_config_text(const std::string& text, bool toml) {
  try {
    return toml ? TomlReader::parse(text) : nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError({std::string("config: ") + e.what()});
  } catch (const ArgumentError& e) {
    throw ValidationError({std::string("config: ") + e.what()});
  }
}

/// Reads TOML (default) or JSON (".json" extension or a leading '{').
inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  const bool json = path.extension() == ".json" || (first != std::string::npos && text[first] == '{');
  return parse_config(parse_config_text(text, !json));
}

}  // namespace seqdyn
