#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/stochastic/ensemble.hpp"
#include "seqdyn/stochastic/tail.hpp"

namespace seqdyn {

/// Finite union of intervals in [0,1], stored sorted and merged.
class IntervalSet {
 public:
  explicit IntervalSet(std::vector<std::pair<double, double>> parts) {
    std::sort(parts.begin(), parts.end());
    for (const auto& [a, b] : parts) {
      if (!(a >= 0.0 && b <= 1.0 && a < b)) throw ArgumentError("interval set parts must satisfy 0 <= a < b <= 1");
      if (!parts_.empty() && a <= parts_.back().second) {
        parts_.back().second = std::max(parts_.back().second, b);
      } else {
        parts_.emplace_back(a, b);
      }
    }
    if (parts_.empty()) throw ArgumentError("interval set is empty");
  }

  const std::vector<std::pair<double, double>>& parts() const noexcept { return parts_; }

  double measure() const noexcept {
    double m = 0.0;
    for (const auto& [a, b] : parts_) m += b - a;
    return m;
  }

  bool contains(double x) const noexcept {
    for (const auto& [a, b] : parts_) {
      if (x >= a && (x < b || (b == 1.0 && x == 1.0))) return true;
    }
    return false;
  }

  /// `grid` equispaced left endpoints a + (b-a) i / grid per part; the grid
  /// for g divides the grid for any multiple of g.
  std::vector<double> candidates(std::size_t grid) const {
    if (grid == 0) throw ArgumentError("candidate grid must be >= 1");
    std::vector<double> pts;
    pts.reserve(grid * parts_.size());
    for (const auto& [a, b] : parts_) {
      for (std::size_t i = 0; i < grid; ++i) pts.push_back(a + (b - a) * static_cast<double>(i) / static_cast<double>(grid));
    }
    return pts;
  }

 private:
  std::vector<std::pair<double, double>> parts_;
};

/// Candidate orbits y_k = T_1^k y for y on a grid in A, iterated exactly.
class ShadowingCandidates {
 public:
  ShadowingCandidates(const MapSequence& seq, const IntervalSet& a, std::size_t n, std::size_t grid)
      : set_(a), n_(n) {
    if (n == 0) throw ArgumentError("shadowing needs n >= 1");
    const auto ys = a.candidates(grid);
    const OrbitStepper stepper(seq, n);
    orbits_.resize(ys.size() * n);
    for (std::size_t c = 0; c < ys.size(); ++c) stepper.run_plain(ys[c], std::span<double>(orbits_.data() + c * n, n));
    count_ = ys.size();
  }

  std::size_t size() const noexcept { return count_; }

  /// min over candidates of (1/n) sum_k |x_k - y_k|; 0 when x_0 lies in A.
  double distance(std::span<const double> x) const {
    if (set_.contains(x[0])) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < count_; ++c) {
      const double* y = orbits_.data() + c * n_;
      double s = 0.0;
      for (std::size_t k = 0; k < n_ && s < best; ++k) s += std::abs(x[k] - y[k]);
      best = std::min(best, s);
    }
    return best / static_cast<double>(n_);
  }

 private:
  IntervalSet set_;
  std::size_t n_;
  std::size_t count_ = 0;
  std::vector<double> orbits_;
};

/// Upper bound on Z_n(x) = inf_{y in A} (1/n) sum_{k<n} |T_1^k x - T_1^k y|.
inline double shadowing_stat(const MapSequence& seq, const IntervalSet& a, std::size_t n, double x,
                             std::size_t candidate_grid) {
  if (!(x >= 0.0 && x < 1.0)) throw DomainError("x outside [0,1): " + std::to_string(x));
  const ShadowingCandidates cands(seq, a, n, candidate_grid);
  std::vector<double> orb(n);
  OrbitStepper(seq, n).run_plain(x, orb);
  return cands.distance(orb);
}

inline constexpr std::size_t kDefaultShadowingGridPerUnit = std::size_t{1} << 12;

struct ShadowingReport {
  std::size_t n = 0;
  double measure = 0.0;
  std::size_t candidate_grid = 0;
  double mean_z = 0.0;
  double se_z = 0.0;
  std::optional<double> c1;  // sqrt(n) E Z_n / sqrt|log m(A)|
  TailReport tail;           // of sqrt(n) Z_n - c1 sqrt|log m(A)|
};

inline ShadowingReport shadowing_report(const MapSequence& seq, const IntervalSet& a, std::size_t n,
                                        std::size_t m_samples, std::uint64_t seed, std::size_t candidate_grid,
                                        std::vector<double> t_list, std::size_t threads = 1) {
  const ShadowingCandidates cands(seq, a, n, candidate_grid);
  std::vector<double> z(m_samples);
  for_each_orbit(seq, n, m_samples, seed, threads,
                 [&](std::size_t i, std::span<const double> orb) { z[i] = cands.distance(orb); });
  ShadowingReport r;
  r.n = n;
  r.measure = a.measure();
  r.candidate_grid = candidate_grid;
  double s = 0.0, s2 = 0.0;
  for (double v : z) {
    s += v;
    s2 += v * v;
  }
  const auto m = static_cast<double>(m_samples);
  r.mean_z = s / m;
  r.se_z = m > 1 ? std::sqrt(std::max(0.0, (s2 - s * s / m) / (m - 1.0)) / m) : 0.0;
  const double root_n = std::sqrt(static_cast<double>(n));
  const double log_m = std::abs(std::log(r.measure));
  double shift = 0.0;
  if (log_m > 0.0) {
    r.c1 = root_n * r.mean_z / std::sqrt(log_m);
    shift = *r.c1 * std::sqrt(log_m);
  }
  for (double& v : z) v = root_n * v - shift;
  r.tail = make_tail_report(z, std::move(t_list), 1.0);
  if (!r.c1) r.tail.warnings.push_back("m(A) = 1: log m(A) = 0 and C1 is not identified");
  return r;
}

}  // namespace seqdyn
