#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqdyn/errors.hpp"
#include "seqdyn/maps/interval_map.hpp"
#include "seqdyn/rng.hpp"

namespace seqdyn {

/// Uniform bounds of the class every generated map must belong to: inf|T'| >= lambda,
/// sup|T''| <= M, at most N branches.
struct ClassBounds {
  double min_expansion = 1.0;  // strict: lambda(T) > min_expansion
  double max_second_derivative = std::numeric_limits<double>::infinity();
  std::size_t max_branches = kDefaultMaxBranches;

  void check(const IntervalMap& map) const {
    if (!(map.expansion() > min_expansion)) {
      throw ArgumentError("map '" + map.label() + "' violates class bound lambda > " + std::to_string(min_expansion));
    }
    if (map.second_derivative_bound() > max_second_derivative) {
      throw ArgumentError("map '" + map.label() + "' violates class bound sup|T''| <= " +
                          std::to_string(max_second_derivative));
    }
    if (map.branches().size() > max_branches) {
      throw ResourceError("map '" + map.label() + "' exceeds the class branch bound", max_branches);
    }
  }
};

/// Serializable description of a beta-map sequence, as it appears in configs.
struct SequenceSpec {
  enum class Kind { constant_beta, random_beta, periodic, explicit_list };

  Kind kind = Kind::constant_beta;
  double beta = 2.0;          // constant_beta
  double center = 2.0;        // random_beta
  double radius = 0.0;        // random_beta
  std::uint64_t seed = 0;     // random_beta
  std::vector<double> betas;  // periodic, explicit_list

  static std::string kind_name(Kind k) {
    switch (k) {
      case Kind::constant_beta: return "constant_beta";
      case Kind::random_beta: return "random_beta";
      case Kind::periodic: return "periodic";
      case Kind::explicit_list: return "explicit";
    }
    return "?";
  }
};

inline void to_json(nlohmann::json& j, const SequenceSpec& s) {
  j = nlohmann::json{{"kind", SequenceSpec::kind_name(s.kind)}};
  switch (s.kind) {
    case SequenceSpec::Kind::constant_beta: j["beta"] = s.beta; break;
    case SequenceSpec::Kind::random_beta:
      j["center"] = s.center;
      j["radius"] = s.radius;
      j["seed"] = s.seed;
      break;
    case SequenceSpec::Kind::periodic:
    case SequenceSpec::Kind::explicit_list: j["betas"] = s.betas; break;
  }
}

/// Parses a sequence description, collecting every problem instead of stopping
/// at the first. Field names in the messages are prefixed with `where`.
inline SequenceSpec parse_sequence_spec(const nlohmann::json& j, std::vector<std::string>& problems,
                                        const std::string& where = "sequence") {
  SequenceSpec s;
  if (!j.is_object()) {
    problems.push_back(where + ": must be a table");
    return s;
  }
  auto number = [&](const char* key, double& out) {
    if (!j.contains(key)) {
      problems.push_back(where + "." + key + ": missing");
    } else if (!j[key].is_number()) {
      problems.push_back(where + "." + key + ": must be a number");
    } else {
      out = j[key].get<double>();
    }
  };
  auto beta_ok = [&](double b, const std::string& field) {
    if (!(b > 1.0) || !std::isfinite(b)) problems.push_back(field + ": beta must be finite and > 1");
  };
  const std::string kind = j.contains("kind") && j["kind"].is_string() ? j["kind"].get<std::string>() : "";
  if (kind == "constant_beta") {
    s.kind = SequenceSpec::Kind::constant_beta;
    number("beta", s.beta);
    beta_ok(s.beta, where + ".beta");
  } else if (kind == "random_beta") {
    s.kind = SequenceSpec::Kind::random_beta;
    number("center", s.center);
    number("radius", s.radius);
    if (!j.contains("seed")) {
      problems.push_back(where + ".seed: missing");
    } else if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() >= 0)) {
      problems.push_back(where + ".seed: must be a nonnegative integer");
    } else {
      s.seed = j["seed"].get<std::uint64_t>();
    }
    if (s.radius < 0.0) problems.push_back(where + ".radius: must be >= 0");
    beta_ok(s.center - s.radius, where + ".center-radius");
  } else if (kind == "periodic" || kind == "explicit") {
    s.kind = kind == "periodic" ? SequenceSpec::Kind::periodic : SequenceSpec::Kind::explicit_list;
    if (!j.contains("betas") || !j["betas"].is_array() || j["betas"].empty()) {
      problems.push_back(where + ".betas: must be a nonempty array of numbers");
    } else {
      for (std::size_t i = 0; i < j["betas"].size(); ++i) {
        const auto& b = j["betas"][i];
        if (!b.is_number()) {
          problems.push_back(where + ".betas[" + std::to_string(i) + "]: must be a number");
          continue;
        }
        s.betas.push_back(b.get<double>());
        beta_ok(s.betas.back(), where + ".betas[" + std::to_string(i) + "]");
      }
    }
  } else {
    problems.push_back(where + ".kind: must be one of constant_beta, random_beta, periodic, explicit");
  }
  return s;
}

/// The sequence (T_n)_{n>=1}: a deterministic rule index -> IntervalMap.
///
/// Indices start at 1. A sequence may have a finite horizon (explicit lists);
/// asking for a map past it is an argument error. Every generated map is
/// checked against the class bounds.
class MapSequence {
 public:
  using Generator = std::function<IntervalMap(std::size_t)>;

  MapSequence(Generator generator, std::string description, std::optional<std::size_t> length = std::nullopt,
              ClassBounds bounds = {})
      : generator_(std::move(generator)), description_(std::move(description)), length_(length), bounds_(bounds) {}

  static MapSequence constant(IntervalMap map) {
    std::string label = "constant(" + map.label() + ")";
    return MapSequence([m = std::move(map)](std::size_t) { return m; }, std::move(label));
  }

  static MapSequence periodic(std::vector<IntervalMap> maps) {
    if (maps.empty()) throw ArgumentError("periodic sequence needs at least one map");
    std::string label = "periodic(";
    for (std::size_t i = 0; i < maps.size(); ++i) label += (i ? "," : "") + maps[i].label();
    label += ")";
    return MapSequence([ms = std::move(maps)](std::size_t k) { return ms[(k - 1) % ms.size()]; }, std::move(label));
  }

  static MapSequence explicit_list(std::vector<IntervalMap> maps) {
    if (maps.empty()) throw ArgumentError("explicit sequence needs at least one map");
    const std::size_t n = maps.size();
    std::string label = "explicit(";
    for (std::size_t i = 0; i < n; ++i) label += (i ? "," : "") + maps[i].label();
    label += ")";
    return MapSequence([ms = std::move(maps)](std::size_t k) { return ms[k - 1]; }, std::move(label), n);
  }

  static MapSequence constant_beta(double beta) { return constant(beta_map(beta)); }

  /// beta_k drawn uniformly from [center - radius, center + radius], keyed by (seed, k).
  static MapSequence random_beta(double center, double radius, std::uint64_t seed) {
    if (!(center - radius > 1.0)) throw ArgumentError("random_beta requires center - radius > 1");
    std::ostringstream os;
    os << "random_beta(" << center << "+-" << radius << ",seed=" << seed << ")";
    return MapSequence([=](std::size_t k) { return beta_map(random_beta_value(center, radius, seed, k)); }, os.str());
  }

  static double random_beta_value(double center, double radius, std::uint64_t seed, std::size_t index) {
    CounterRng rng(seed, index);
    return center + radius * (2.0 * rng.uniform() - 1.0);
  }

  static MapSequence periodic_beta(const std::vector<double>& betas) {
    std::vector<IntervalMap> maps;
    for (double b : betas) maps.push_back(beta_map(b));
    return periodic(std::move(maps));
  }

  static MapSequence explicit_beta(const std::vector<double>& betas) {
    std::vector<IntervalMap> maps;
    for (double b : betas) maps.push_back(beta_map(b));
    return explicit_list(std::move(maps));
  }

  static MapSequence from_spec(const SequenceSpec& s) {
    switch (s.kind) {
      case SequenceSpec::Kind::constant_beta: return constant_beta(s.beta);
      case SequenceSpec::Kind::random_beta: return random_beta(s.center, s.radius, s.seed);
      case SequenceSpec::Kind::periodic: return periodic_beta(s.betas);
      case SequenceSpec::Kind::explicit_list: return explicit_beta(s.betas);
    }
    throw ArgumentError("unknown sequence kind");
  }

  /// T_index, index >= 1.
  IntervalMap map(std::size_t index) const {
    if (index == 0) throw ArgumentError("map sequences are indexed from 1");
    if (length_ && index > *length_) {
      throw ArgumentError("index " + std::to_string(index) + " beyond the horizon " + std::to_string(*length_) +
                          " of " + description_);
    }
    IntervalMap m = generator_(index);
    bounds_.check(m);
    return m;
  }

  /// T_first, ..., T_last (inclusive); empty when last < first.
  std::vector<IntervalMap> maps(std::size_t first, std::size_t last) const {
    std::vector<IntervalMap> out;
    if (last < first) return out;
    out.reserve(last - first + 1);
    for (std::size_t k = first; k <= last; ++k) out.push_back(map(k));
    return out;
  }

  const std::string& description() const noexcept { return description_; }
  std::optional<std::size_t> length() const noexcept { return length_; }
  const ClassBounds& bounds() const noexcept { return bounds_; }

  MapSequence with_bounds(ClassBounds bounds) const {
    MapSequence copy = *this;
    copy.bounds_ = bounds;
    return copy;
  }

 private:
  Generator generator_;
  std::string description_;
  std::optional<std::size_t> length_;
  ClassBounds bounds_;
};

/// (x, T_1 x, ..., T_1^n x) by plain iteration.
inline std::vector<double> orbit(const MapSequence& seq, double x, std::size_t n) {
  std::vector<double> out;
  out.reserve(n + 1);
  out.push_back(x);
  if (!(x >= 0.0 && x < 1.0)) throw DomainError("orbit start outside [0,1): x = " + std::to_string(x));
  for (std::size_t k = 1; k <= n; ++k) {
    x = seq.map(k)(x);
    out.push_back(x);
  }
  return out;
}

}  // namespace seqdyn
