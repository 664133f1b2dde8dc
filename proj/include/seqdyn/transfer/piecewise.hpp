#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/maps/interval_map.hpp"

namespace seqdyn {

struct BvNorm {
  double variation = 0.0;
  double l1 = 0.0;
  double bv = 0.0;
};

/// A function on [0,1) that is constant on each half-open cell
/// [b_i, b_{i+1}); breakpoints start at 0 and end at 1.
class PiecewiseFn {
 public:
  PiecewiseFn() : breakpoints_{0.0, 1.0}, values_{0.0} {}

  PiecewiseFn(std::vector<double> breakpoints, std::vector<double> values)
      : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    if (breakpoints_.size() < 2 || values_.size() + 1 != breakpoints_.size()) {
      throw ArgumentError("piecewise function needs k+1 breakpoints for k values");
    }
    if (breakpoints_.front() != 0.0 || breakpoints_.back() != 1.0) {
      throw ArgumentError("piecewise function breakpoints must start at 0 and end at 1");
    }
    for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
      if (!(breakpoints_[i] > breakpoints_[i - 1])) {
        throw ArgumentError("piecewise function breakpoints must be strictly increasing");
      }
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw ArgumentError("piecewise function values must be finite");
    }
  }

  static PiecewiseFn constant(double c) { return PiecewiseFn({0.0, 1.0}, {c}); }

  /// Indicator of [a, b), a < b inside [0, 1].
  static PiecewiseFn indicator(double a, double b) {
    if (!(0.0 <= a && a < b && b <= 1.0)) throw ArgumentError("indicator needs 0 <= a < b <= 1");
    std::vector<double> bp{0.0};
    std::vector<double> v;
    if (a > 0.0) {
      bp.push_back(a);
      v.push_back(0.0);
    }
    v.push_back(1.0);
    bp.push_back(b);
    if (b < 1.0) {
      v.push_back(0.0);
      bp.push_back(1.0);
    }
    return PiecewiseFn(std::move(bp), std::move(v));
  }

  /// Midpoint proxy of fn on a uniform grid of `cells` cells.
  static PiecewiseFn sample(const std::function<double(double)>& fn, std::size_t cells) {
    if (cells == 0) throw ArgumentError("sample needs at least one cell");
    std::vector<double> bp(cells + 1), v(cells);
    const double w = 1.0 / static_cast<double>(cells);
    for (std::size_t i = 0; i <= cells; ++i) bp[i] = static_cast<double>(i) * w;
    bp.back() = 1.0;
    for (std::size_t i = 0; i < cells; ++i) v[i] = fn((static_cast<double>(i) + 0.5) * w);
    return PiecewiseFn(std::move(bp), std::move(v));
  }

  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::size_t cell_count() const noexcept { return values_.size(); }
  double width(std::size_t i) const noexcept { return breakpoints_[i + 1] - breakpoints_[i]; }

  std::size_t cell_index(double x) const {
    auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
    std::size_t i = it == breakpoints_.begin() ? 0 : static_cast<std::size_t>(it - breakpoints_.begin()) - 1;
    return std::min(i, values_.size() - 1);
  }

  double operator()(double x) const {
    if (!(x >= 0.0 && x < 1.0)) throw DomainError("piecewise function evaluated outside [0,1): " + std::to_string(x));
    return values_[cell_index(x)];
  }

  double integral() const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) s += values_[i] * width(i);
    return s;
  }

  double l1() const noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) s += std::abs(values_[i]) * width(i);
    return s;
  }

  double variation() const noexcept {
    double s = 0.0;
    for (std::size_t i = 1; i < values_.size(); ++i) s += std::abs(values_[i] - values_[i - 1]);
    return s;
  }

  BvNorm bv_norm() const noexcept {
    BvNorm n{variation(), l1(), 0.0};
    n.bv = n.variation + n.l1;
    return n;
  }

  double min() const noexcept { return *std::min_element(values_.begin(), values_.end()); }
  double max() const noexcept { return *std::max_element(values_.begin(), values_.end()); }
  double sup_abs() const noexcept { return std::max(std::abs(min()), std::abs(max())); }

  /// Same function with adjacent equal cells merged.
  PiecewiseFn simplified() const {
    std::vector<double> bp{0.0};
    std::vector<double> v{values_.front()};
    for (std::size_t i = 1; i < values_.size(); ++i) {
      if (values_[i] == v.back()) continue;
      bp.push_back(breakpoints_[i]);
      v.push_back(values_[i]);
    }
    bp.push_back(1.0);
    return PiecewiseFn(std::move(bp), std::move(v));
  }

  PiecewiseFn map_values(const std::function<double(double)>& op) const {
    std::vector<double> v(values_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = op(values_[i]);
    return PiecewiseFn(breakpoints_, std::move(v));
  }

  /// Pointwise op(f, g) on the common refinement of both breakpoint sets.
  static PiecewiseFn combine(const PiecewiseFn& f, const PiecewiseFn& g, const std::function<double(double, double)>& op) {
    std::vector<double> bp;
    bp.reserve(f.breakpoints_.size() + g.breakpoints_.size());
    std::merge(f.breakpoints_.begin(), f.breakpoints_.end(), g.breakpoints_.begin(), g.breakpoints_.end(),
               std::back_inserter(bp));
    bp = dedupe(std::move(bp));
    std::vector<double> v(bp.size() - 1);
    std::size_t i = 0, j = 0;
    for (std::size_t c = 0; c + 1 < bp.size(); ++c) {
      const double mid = 0.5 * (bp[c] + bp[c + 1]);
      while (i + 1 < f.values_.size() && f.breakpoints_[i + 1] <= mid) ++i;
      while (j + 1 < g.values_.size() && g.breakpoints_[j + 1] <= mid) ++j;
      v[c] = op(f.values_[i], g.values_[j]);
    }
    return PiecewiseFn(std::move(bp), std::move(v));
  }

  /// Sorted points with 0 and 1 forced at the ends and near-duplicates
  /// (closer than the merge tolerance) removed.
  static std::vector<double> dedupe(std::vector<double> pts) {
    std::sort(pts.begin(), pts.end());
    std::vector<double> out{0.0};
    for (double p : pts) {
      if (p <= out.back() + kMergeTolerance) continue;
      if (p >= 1.0 - kMergeTolerance) break;
      out.push_back(p);
    }
    out.push_back(1.0);
    return out;
  }

  void write_csv(std::ostream& os) const {
    for (std::size_t i = 0; i < values_.size(); ++i) os << breakpoints_[i] << ',' << values_[i] << '\n';
  }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> values_;
};

inline PiecewiseFn operator+(const PiecewiseFn& f, const PiecewiseFn& g) {
  return PiecewiseFn::combine(f, g, [](double a, double b) { return a + b; });
}
inline PiecewiseFn operator-(const PiecewiseFn& f, const PiecewiseFn& g) {
  return PiecewiseFn::combine(f, g, [](double a, double b) { return a - b; });
}
inline PiecewiseFn operator*(const PiecewiseFn& f, const PiecewiseFn& g) {
  return PiecewiseFn::combine(f, g, [](double a, double b) { return a * b; });
}
inline PiecewiseFn operator*(double c, const PiecewiseFn& f) {
  return f.map_values([c](double v) { return c * v; });
}
inline PiecewiseFn operator+(const PiecewiseFn& f, double c) {
  return f.map_values([c](double v) { return v + c; });
}
inline PiecewiseFn operator-(const PiecewiseFn& f, double c) { return f + (-c); }

/// Exact integral of f g.
inline double integrate_product(const PiecewiseFn& f, const PiecewiseFn& g) {
  const auto& fb = f.breakpoints();
  const auto& gb = g.breakpoints();
  double s = 0.0;
  std::size_t i = 0, j = 0;
  double left = 0.0;
  while (i < f.cell_count() && j < g.cell_count()) {
    const double right = std::min(fb[i + 1], gb[j + 1]);
    s += f.values()[i] * g.values()[j] * (right - left);
    left = right;
    if (fb[i + 1] <= right) ++i;
    if (gb[j + 1] <= right) ++j;
  }
  return s;
}

/// f o T as a piecewise function: breakpoints are the preimages of f's
/// breakpoints inside every branch, plus the branch boundaries.
inline PiecewiseFn compose(const PiecewiseFn& f, const IntervalMap& map) {
  std::vector<double> pts;
  for (const auto& br : map.branches()) {
    pts.push_back(br.lo());
    const auto& fb = f.breakpoints();
    auto first = std::upper_bound(fb.begin(), fb.end(), br.image_lo());
    for (auto it = first; it != fb.end() && *it < br.image_hi(); ++it) pts.push_back(br.inverse(*it));
  }
  auto bp = PiecewiseFn::dedupe(std::move(pts));
  std::vector<double> v(bp.size() - 1);
  for (std::size_t c = 0; c + 1 < bp.size(); ++c) {
    const double mid = 0.5 * (bp[c] + bp[c + 1]);
    v[c] = f(map(mid));
  }
  return PiecewiseFn(std::move(bp), std::move(v)).simplified();
}

/// Per-bin averages on 2^k equal bins.
class GridFn {
 public:
  explicit GridFn(std::vector<double> values) : values_(std::move(values)) {
    const std::size_t b = values_.size();
    if (b < 2 || (b & (b - 1)) != 0) throw ArgumentError("grid functions need a power-of-two bin count >= 2");
  }

  /// Projection preserving the integral over every bin.
  static GridFn project(const PiecewiseFn& f, std::size_t bins) {
    if (bins < 2 || (bins & (bins - 1)) != 0) throw ArgumentError("grid functions need a power-of-two bin count >= 2");
    std::vector<double> v(bins, 0.0);
    const auto& bp = f.breakpoints();
    const double w = 1.0 / static_cast<double>(bins);
    std::size_t c = 0;
    for (std::size_t i = 0; i < bins; ++i) {
      const double lo = static_cast<double>(i) * w;
      const double hi = i + 1 == bins ? 1.0 : static_cast<double>(i + 1) * w;
      double mass = 0.0;
      while (c < f.cell_count() && bp[c + 1] <= lo) ++c;
      for (std::size_t k = c; k < f.cell_count() && bp[k] < hi; ++k) {
        mass += f.values()[k] * (std::min(hi, bp[k + 1]) - std::max(lo, bp[k]));
      }
      v[i] = mass / w;
    }
    return GridFn(std::move(v));
  }

  std::size_t bins() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  double bin_width() const noexcept { return 1.0 / static_cast<double>(values_.size()); }

  double integral() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v;
    return s * bin_width();
  }

  PiecewiseFn to_piecewise() const {
    std::vector<double> bp(values_.size() + 1);
    for (std::size_t i = 0; i < bp.size(); ++i) bp[i] = static_cast<double>(i) * bin_width();
    bp.back() = 1.0;
    return PiecewiseFn(std::move(bp), values_).simplified();
  }

 private:
  std::vector<double> values_;
};

}  // namespace seqdyn
