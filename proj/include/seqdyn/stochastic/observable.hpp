#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/rng.hpp"

namespace seqdyn {

/// A separately Lipschitz functional K(x_0, ..., x_{n-1}) with declared
/// per-coordinate constants Lip_j(K).
class Observable {
 public:
  using Evaluator = std::function<double(std::span<const double>)>;

  Observable(std::size_t arity, Evaluator eval, std::vector<double> lip, std::string name = "K")
      : arity_(arity), eval_(std::move(eval)), lip_(std::move(lip)), name_(std::move(name)) {
    if (arity_ == 0) throw ArgumentError("observable arity must be >= 1");
    if (lip_.size() != arity_) throw ArgumentError("observable needs one Lipschitz constant per coordinate");
    for (double l : lip_) {
      if (!(l >= 0.0) || !std::isfinite(l)) throw ArgumentError("Lipschitz constants must be finite and >= 0");
    }
  }

  /// (1/n) sum_k x_k, with Lip_j = 1/n.
  static Observable mean_coordinate(std::size_t n) {
    const double w = 1.0 / static_cast<double>(n);
    return Observable(
        n,
        [w](std::span<const double> x) {
          double s = 0.0;
          for (double v : x) s += v;
          return s * w;
        },
        std::vector<double>(n, w), "mean_x");
  }

  /// K = x_j.
  static Observable coordinate(std::size_t arity, std::size_t j) {
    if (j >= arity) throw ArgumentError("coordinate index beyond arity");
    std::vector<double> lip(arity, 0.0);
    lip[j] = 1.0;
    return Observable(arity, [j](std::span<const double> x) { return x[j]; }, std::move(lip),
                      "x" + std::to_string(j));
  }

  static Observable constant(std::size_t arity, double c) {
    return Observable(arity, [c](std::span<const double>) { return c; }, std::vector<double>(arity, 0.0), "const");
  }

  std::size_t arity() const noexcept { return arity_; }
  const std::vector<double>& lip() const noexcept { return lip_; }
  const std::string& name() const noexcept { return name_; }

  double lip_square_sum() const noexcept {
    double s = 0.0;
    for (double l : lip_) s += l * l;
    return s;
  }

  double operator()(std::span<const double> x) const {
    if (x.size() < arity_) throw ArgumentError("observable '" + name_ + "' needs " + std::to_string(arity_) + " coordinates");
    return eval_(x.first(arity_));
  }

 private:
  std::size_t arity_;
  Evaluator eval_;
  std::vector<double> lip_;
  std::string name_;
};

struct SpotCheckResult {
  std::size_t probes = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;  // max |dK| / (Lip_j |dx|) seen; infinite when Lip_j = 0 and dK != 0

  bool ok() const noexcept { return violations == 0; }
};

/// Probes random pairs differing in one coordinate and compares |dK| with Lip_j |dx|.
inline SpotCheckResult spot_check(const Observable& k, std::size_t probes = 256, std::uint64_t seed = 0) {
  SpotCheckResult res;
  CounterRng rng(seed, 0x5eed);
  std::vector<double> x(k.arity()), y(k.arity());
  for (std::size_t p = 0; p < probes; ++p) {
    for (auto& v : x) v = rng.uniform();
    y = x;
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(k.arity()));
    // Mix large and small perturbations.
    const double scale = p % 2 == 0 ? 1.0 : 1e-3;
    y[j] = std::fmod(x[j] + scale * rng.uniform(), 1.0);
    const double dx = std::abs(y[j] - x[j]);
    if (dx == 0.0) continue;
    const double dk = std::abs(k(y) - k(x));
    ++res.probes;
    const double allowed = k.lip()[j] * dx * (1.0 + 1e-9) + 1e-12;
    if (dk > allowed) ++res.violations;
    const double ratio = k.lip()[j] > 0.0 ? dk / (k.lip()[j] * dx) : (dk > 1e-12 ? std::numeric_limits<double>::infinity() : 0.0);
    res.worst_ratio = std::max(res.worst_ratio, ratio);
  }
  return res;
}

}  // namespace seqdyn
