#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/stochastic/ensemble.hpp"
#include "seqdyn/stochastic/observable.hpp"
#include "seqdyn/stochastic/tail.hpp"
#include "seqdyn/transfer/decay.hpp"

namespace seqdyn {

/// Distribution function on [0,1]: jumps allowed at knots, linear in between.
/// left[i] / right[i] are the one-sided values at knots[i]; on
/// (knots[i], knots[i+1]) F runs linearly from right[i] to left[i+1].
class Cdf {
 public:
  static constexpr double kTolerance = 1e-12;

  Cdf(std::vector<double> knots, std::vector<double> left, std::vector<double> right)
      : knots_(std::move(knots)), left_(std::move(left)), right_(std::move(right)) {
    if (knots_.size() < 2 || left_.size() != knots_.size() || right_.size() != knots_.size()) {
      throw ArgumentError("cdf needs >= 2 knots with one left and one right value each");
    }
    if (knots_.front() != 0.0 || knots_.back() != 1.0) throw ArgumentError("cdf knots must span [0,1]");
    double prev = 0.0;
    for (std::size_t i = 0; i < knots_.size(); ++i) {
      if (i > 0 && !(knots_[i] > knots_[i - 1])) throw ArgumentError("cdf knots must be strictly increasing");
      if (!(left_[i] >= prev - kTolerance) || !(right_[i] >= left_[i] - kTolerance)) {
        throw ArgumentError("cdf is not nondecreasing near t = " + std::to_string(knots_[i]));
      }
      if (!(left_[i] >= -kTolerance && right_[i] <= 1.0 + kTolerance)) {
        throw ArgumentError("cdf values must lie in [0,1]");
      }
      prev = right_[i];
    }
  }

  static Cdf dirac(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("dirac point outside [0,1]");
    if (x == 0.0) return Cdf({0.0, 1.0}, {0.0, 1.0}, {1.0, 1.0});
    if (x == 1.0) return Cdf({0.0, 1.0}, {0.0, 0.0}, {0.0, 1.0});
    return Cdf({0.0, x, 1.0}, {0.0, 0.0, 1.0}, {0.0, 1.0, 1.0});
  }

  static Cdf lebesgue() { return Cdf({0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}); }

  /// Empirical distribution of the points, each with mass 1/N.
  static Cdf empirical(std::span<const double> points) {
    if (points.empty()) throw ArgumentError("empirical cdf needs at least one point");
    std::vector<double> pts(points.begin(), points.end());
    std::sort(pts.begin(), pts.end());
    if (!(pts.front() >= 0.0 && pts.back() <= 1.0)) throw DomainError("empirical points must lie in [0,1]");
    const double w = 1.0 / static_cast<double>(pts.size());
    std::vector<double> knots{0.0}, left{0.0}, right{0.0};
    std::size_t count = 0;
    for (std::size_t i = 0; i < pts.size();) {
      std::size_t j = i;
      while (j < pts.size() && pts[j] == pts[i]) ++j;
      const double before = static_cast<double>(count) * w;
      count = j;
      const double after = j == pts.size() ? 1.0 : static_cast<double>(count) * w;
      if (pts[i] == 0.0) {
        right[0] = after;
      } else {
        knots.push_back(pts[i]);
        left.push_back(before);
        right.push_back(after);
      }
      i = j;
    }
    if (knots.back() != 1.0) {
      knots.push_back(1.0);
      left.push_back(1.0);
      right.push_back(1.0);
    }
    return Cdf(std::move(knots), std::move(left), std::move(right));
  }

  /// F(t) = int_0^t rho for a probability density rho.
  static Cdf from_density(const PiecewiseFn& rho) {
    const auto& bp = rho.breakpoints();
    const auto& v = rho.values();
    std::vector<double> cum{0.0};
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] < -kTolerance) throw ArgumentError("density must be nonnegative");
      cum.push_back(cum.back() + std::max(0.0, v[i]) * (bp[i + 1] - bp[i]));
    }
    if (std::abs(cum.back() - 1.0) > 1e-9) throw ArgumentError("density must have total mass 1");
    for (double& c : cum) c = std::min(1.0, c / cum.back());
    return Cdf(bp, cum, cum);
  }

  /// Right-continuous value F(t).
  double operator()(double t) const {
    if (t < 0.0) return 0.0;
    if (t >= 1.0) return right_.back();
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    const auto i = static_cast<std::size_t>(it - knots_.begin()) - 1;
    if (t == knots_[i]) return right_[i];
    return segment_value(i, t);
  }

  const std::vector<double>& knots() const noexcept { return knots_; }
  const std::vector<double>& left() const noexcept { return left_; }
  const std::vector<double>& right() const noexcept { return right_; }

  /// Value of the linear piece on (knots[i], knots[i+1]) extended to t.
  double segment_value(std::size_t i, double t) const noexcept {
    const double h = knots_[i + 1] - knots_[i];
    return right_[i] + (left_[i + 1] - right_[i]) * (t - knots_[i]) / h;
  }

 private:
  std::vector<double> knots_, left_, right_;
};

namespace detail {

inline double abs_linear_integral(double d0, double d1, double h) {
  if ((d0 >= 0.0) == (d1 >= 0.0)) return 0.5 * (std::abs(d0) + std::abs(d1)) * h;
  return 0.5 * (d0 * d0 + d1 * d1) / (std::abs(d0) + std::abs(d1)) * h;
}

}  // namespace detail

/// int_0^1 |F_1 - F_2| dt, exact on the merged knots.
inline double kantorovich(const Cdf& f1, const Cdf& f2) {
  const auto& k1 = f1.knots();
  const auto& k2 = f2.knots();
  std::size_t i = 0, j = 0;
  double u = 0.0, total = 0.0;
  while (u < 1.0) {
    const double v = std::min(k1[i + 1], k2[j + 1]);
    const double d0 = f1.segment_value(i, u) - f2.segment_value(j, u);
    const double d1 = f1.segment_value(i, v) - f2.segment_value(j, v);
    total += detail::abs_linear_integral(d0, d1, v - u);
    if (k1[i + 1] == v) ++i;
    if (k2[j + 1] == v) ++j;
    u = v;
  }
  return total;
}

/// Distribution function of m_n = (1/n) sum_{k<n} (T_1^k)_* m.
inline Cdf averaged_pushforward_cdf(const MapSequence& seq, std::size_t n, const TransferOptions& opts = {}) {
  if (n == 0) throw ArgumentError("averaged pushforward needs n >= 1");
  Transport t(PiecewiseFn::constant(1.0), opts);
  PiecewiseFn sum = t.current();
  for (std::size_t k = 1; k < n; ++k) {
    t.step(seq.map(k));
    sum = (sum + t.current()).simplified();
  }
  return Cdf::from_density((1.0 / static_cast<double>(n)) * sum);
}

/// K(x_0..x_{n-1}) = kappa(empirical measure, m_n), Lip_j = 1/n.
inline Observable kantorovich_functional(const Cdf& target, std::size_t n) {
  return Observable(
      n, [target](std::span<const double> x) { return kantorovich(Cdf::empirical(x), target); },
      std::vector<double>(n, 1.0 / static_cast<double>(n)), "kantorovich");
}

struct EmpiricalMeasureReport {
  std::size_t n = 0;
  double mean_kappa = 0.0;
  double se_kappa = 0.0;
  std::vector<double> kappas;  // per orbit, in sample order
  TailReport tail;             // of sqrt(n) * kappa, fitted on t >= 1
};

inline EmpiricalMeasureReport empirical_measure_tail(const MapSequence& seq, std::size_t n, std::size_t m_samples,
                                                     std::vector<double> t_list, std::uint64_t seed,
                                                     std::size_t threads = 1, const TransferOptions& opts = {}) {
  const Cdf target = averaged_pushforward_cdf(seq, n, opts);
  EmpiricalMeasureReport r;
  r.n = n;
  r.kappas.assign(m_samples, 0.0);
  for_each_orbit(seq, n, m_samples, seed, threads, [&](std::size_t i, std::span<const double> orb) {
    r.kappas[i] = kantorovich(Cdf::empirical(orb), target);
  });
  double s = 0.0, s2 = 0.0;
  for (double k : r.kappas) {
    s += k;
    s2 += k * k;
  }
  const auto m = static_cast<double>(m_samples);
  r.mean_kappa = s / m;
  r.se_kappa = m > 1 ? std::sqrt(std::max(0.0, (s2 - s * s / m) / (m - 1.0)) / m) : 0.0;
  std::vector<double> scaled(r.kappas);
  for (double& k : scaled) k *= std::sqrt(static_cast<double>(n));
  r.tail = make_tail_report(scaled, std::move(t_list), 1.0, 1.0);
  return r;
}

struct ScalingRow {
  std::size_t n;
  double mean_kappa;
  double se_kappa;
};

struct KantorovichScaling {
  std::vector<ScalingRow> rows;
  std::optional<double> slope;  // of log mean kappa on log n
  std::optional<double> intercept;
};

inline KantorovichScaling kantorovich_scaling(const MapSequence& seq, const std::vector<std::size_t>& n_list,
                                              std::size_t m_samples, std::uint64_t seed, std::size_t threads = 1,
                                              const TransferOptions& opts = {}) {
  KantorovichScaling out;
  std::vector<double> lx, ly;
  for (std::size_t n : n_list) {
    const auto r = empirical_measure_tail(seq, n, m_samples, {}, seed, threads, opts);
    out.rows.push_back({n, r.mean_kappa, r.se_kappa});
    if (r.mean_kappa > 0.0) {
      lx.push_back(std::log(static_cast<double>(n)));
      ly.push_back(r.mean_kappa);
    }
  }
  if (const auto fit = fit_log_linear(lx, ly)) {
    out.intercept = fit->first;
    out.slope = fit->second;
  }
  return out;
}

}  // namespace seqdyn
