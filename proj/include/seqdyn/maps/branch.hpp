#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <utility>

#include "seqdyn/errors.hpp"

namespace seqdyn {

/// Tolerance used when comparing branch endpoints and image bounds.
inline constexpr double kMergeTolerance = 1e-12;

/// Evaluators and certified bounds for a non-affine C^2 branch.
///
/// The bounds are trusted, not computed: `min_abs_derivative` must be a lower
/// bound for |T'| on the closed domain and `max_abs_second` an upper bound for
/// |T''|. `max_abs_derivative` is optional and only used by the covering-based
/// minoration prediction.
struct SmoothBranchFns {
  std::function<double(double)> value;
  std::function<double(double)> first;
  std::function<double(double)> second;
  double min_abs_derivative = 0.0;
  double max_abs_second = 0.0;
  std::optional<double> max_abs_derivative;
};

/// One strictly monotone expanding piece of an interval map, defined on the
/// half-open domain [lo, hi). Evaluation extends continuously to hi.
class Branch {
 public:
  static Branch affine(double lo, double hi, double slope, double intercept) {
    Branch b(lo, hi);
    if (!(std::abs(slope) > 1.0)) {
      throw ArgumentError("affine branch slope must satisfy |s| > 1, got " + std::to_string(slope));
    }
    b.slope_ = slope;
    b.intercept_ = intercept;
    b.finish();
    return b;
  }

  static Branch smooth(double lo, double hi, SmoothBranchFns fns) {
    Branch b(lo, hi);
    if (!fns.value || !fns.first || !fns.second) {
      throw ArgumentError("smooth branch requires value, first and second derivative evaluators");
    }
    if (!(fns.min_abs_derivative > 1.0)) {
      throw ArgumentError("smooth branch certified inf|T'| must exceed 1");
    }
    if (!(fns.max_abs_second >= 0.0)) throw ArgumentError("smooth branch sup|T''| bound must be >= 0");
    b.smooth_ = std::make_shared<const SmoothBranchFns>(std::move(fns));
    b.finish();
    return b;
  }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  double width() const noexcept { return hi_ - lo_; }
  bool is_affine() const noexcept { return smooth_ == nullptr; }
  bool increasing() const noexcept { return increasing_; }

  /// Affine coefficients; only meaningful when is_affine().
  double slope() const noexcept { return slope_; }
  double intercept() const noexcept { return intercept_; }

  double value(double x) const { return smooth_ ? smooth_->value(x) : slope_ * x + intercept_; }
  double derivative(double x) const { return smooth_ ? smooth_->first(x) : slope_; }
  double second_derivative(double x) const { return smooth_ ? smooth_->second(x) : 0.0; }

  /// Closure of the image, as an ordered pair (lower, upper).
  double image_lo() const noexcept { return image_lo_; }
  double image_hi() const noexcept { return image_hi_; }

  /// inf |T'| on the branch (certified for smooth branches).
  double expansion() const noexcept { return smooth_ ? smooth_->min_abs_derivative : std::abs(slope_); }
  double second_derivative_bound() const noexcept { return smooth_ ? smooth_->max_abs_second : 0.0; }
  std::optional<double> max_abs_derivative() const noexcept {
    if (smooth_) return smooth_->max_abs_derivative;
    return std::abs(slope_);
  }

  /// The unique point of [lo, hi] mapped to y; y must lie in the image closure.
  double inverse(double y) const {
    if (!smooth_) return std::clamp((y - intercept_) / slope_, lo_, hi_);
    double a = lo_, b = hi_;
    for (int it = 0; it < 200 && b - a > 0.0; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      const bool below = smooth_->value(mid) < y;
      if (below == increasing_) {
        a = mid;
      } else {
        b = mid;
      }
    }
    return 0.5 * (a + b);
  }

 private:
  Branch(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!(lo >= 0.0 && hi <= 1.0 && lo < hi)) {
      std::ostringstream os;
      os << "branch domain [" << lo << ", " << hi << ") is not a nonempty subinterval of [0,1)";
      throw ArgumentError(os.str());
    }
  }

  void finish() {
    const double a = value(lo_);
    const double b = value(hi_);
    increasing_ = b > a;
    image_lo_ = std::min(a, b);
    image_hi_ = std::max(a, b);
    if (image_lo_ < -kMergeTolerance || image_hi_ > 1.0 + kMergeTolerance) {
      std::ostringstream os;
      os << "branch image [" << image_lo_ << ", " << image_hi_ << "] leaves [0,1]";
      throw ArgumentError(os.str());
    }
    image_lo_ = std::max(image_lo_, 0.0);
    image_hi_ = std::min(image_hi_, 1.0);
  }

  double lo_;
  double hi_;
  double slope_ = 0.0;
  double intercept_ = 0.0;
  std::shared_ptr<const SmoothBranchFns> smooth_;
  bool increasing_ = true;
  double image_lo_ = 0.0;
  double image_hi_ = 1.0;
};

}  // namespace seqdyn
