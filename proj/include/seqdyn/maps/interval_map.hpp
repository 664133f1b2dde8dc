#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/maps/branch.hpp"

namespace seqdyn {

inline constexpr std::size_t kDefaultMaxBranches = 4096;

struct Preimage {
  double point;
  double abs_derivative;  // |T'| at the preimage
};

/// A piecewise monotone expanding map of [0,1) whose branch domains partition
/// [0,1). Immutable after construction.
class IntervalMap {
 public:
  IntervalMap(std::vector<Branch> branches, std::string label,
              std::size_t max_branches = kDefaultMaxBranches)
      : branches_(std::move(branches)), label_(std::move(label)) {
    if (branches_.empty()) throw ArgumentError("interval map needs at least one branch");
    if (branches_.size() > max_branches) {
      throw ResourceError("interval map '" + label_ + "' has too many branches", max_branches);
    }
    std::sort(branches_.begin(), branches_.end(),
              [](const Branch& a, const Branch& b) { return a.lo() < b.lo(); });
    if (std::abs(branches_.front().lo()) > kMergeTolerance ||
        std::abs(branches_.back().hi() - 1.0) > kMergeTolerance) {
      throw ArgumentError("branch domains of '" + label_ + "' do not cover [0,1)");
    }
    for (std::size_t i = 1; i < branches_.size(); ++i) {
      if (std::abs(branches_[i].lo() - branches_[i - 1].hi()) > kMergeTolerance) {
        throw ArgumentError("branch domains of '" + label_ + "' overlap or leave a gap");
      }
    }
    starts_.reserve(branches_.size());
    for (const auto& b : branches_) {
      starts_.push_back(b.lo());
      affine_ = affine_ && b.is_affine();
    }
  }

  const std::vector<Branch>& branches() const noexcept { return branches_; }
  const std::string& label() const noexcept { return label_; }
  bool is_affine() const noexcept { return affine_; }

  /// Index of the branch whose half-open domain contains x.
  std::size_t branch_index(double x) const {
    auto it = std::upper_bound(starts_.begin(), starts_.end(), x);
    return it == starts_.begin() ? 0 : static_cast<std::size_t>(it - starts_.begin() - 1);
  }

  /// T(x) for x in [0,1).
  double operator()(double x) const {
    if (!(x >= 0.0 && x < 1.0)) {
      throw DomainError("map '" + label_ + "' evaluated outside [0,1): x = " + std::to_string(x));
    }
    return apply_branch(branch_index(x), x);
  }

  /// Evaluate a given branch, folding rounding noise back into [0,1).
  double apply_branch(std::size_t index, double x) const {
    const double y = branches_[index].value(x);
    if (y < 0.0) return 0.0;
    if (y >= 1.0) return std::nextafter(1.0, 0.0);
    return y;
  }

  double derivative(double x) const { return branches_[branch_index(x)].derivative(x); }

  /// lambda(T) = inf |T'|.
  double expansion() const noexcept {
    double lam = std::numeric_limits<double>::infinity();
    for (const auto& b : branches_) lam = std::min(lam, b.expansion());
    return lam;
  }

  double second_derivative_bound() const noexcept {
    double m = 0.0;
    for (const auto& b : branches_) m = std::max(m, b.second_derivative_bound());
    return m;
  }

  /// sup |T'| if every branch carries a bound for it.
  std::optional<double> max_abs_derivative() const noexcept {
    double m = 0.0;
    for (const auto& b : branches_) {
      auto d = b.max_abs_derivative();
      if (!d) return std::nullopt;
      m = std::max(m, *d);
    }
    return m;
  }

  /// Interior branch boundaries, ascending.
  std::vector<double> interior_breakpoints() const {
    std::vector<double> out;
    out.reserve(branches_.size());
    for (std::size_t i = 1; i < branches_.size(); ++i) out.push_back(branches_[i].lo());
    return out;
  }

  /// One preimage per branch whose image contains x.
  std::vector<Preimage> preimages(double x) const {
    if (!(x >= 0.0 && x < 1.0)) {
      throw DomainError("preimages requested outside [0,1): x = " + std::to_string(x));
    }
    std::vector<Preimage> out;
    for (const auto& b : branches_) {
      if (!image_contains(b, x)) continue;
      double y = b.inverse(x);
      if (y >= b.hi()) y = std::nextafter(b.hi(), 0.0);
      if (y < b.lo()) y = b.lo();
      out.push_back({y, std::abs(b.derivative(y))});
    }
    return out;
  }

  /// Half-open image membership matching the half-open domain convention: an
  /// increasing branch covers [T(lo), T(hi^-)), a decreasing one (T(hi^-), T(lo)].
  static bool image_contains(const Branch& b, double x) noexcept {
    if (b.increasing()) return x >= b.image_lo() && x < b.image_hi();
    return x > b.image_lo() && x <= b.image_hi();
  }

 private:
  std::vector<Branch> branches_;
  std::vector<double> starts_;
  std::string label_;
  bool affine_ = true;
};

inline std::string format_beta_label(double beta) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "beta:%.17g", beta);
  // Shorter form when it round-trips.
  char shortbuf[64];
  std::snprintf(shortbuf, sizeof shortbuf, "beta:%g", beta);
  return std::strtod(shortbuf + 5, nullptr) == beta ? std::string(shortbuf) : std::string(buf);
}

/// The beta-transformation x -> beta x mod 1.
inline IntervalMap beta_map(double beta) {
  if (!(beta > 1.0) || !std::isfinite(beta)) {
    throw ArgumentError("beta-transformation requires beta > 1, got " + std::to_string(beta));
  }
  const auto full = static_cast<std::size_t>(std::floor(beta));
  const bool integer = static_cast<double>(full) == beta;
  const std::size_t count = integer ? full : full + 1;
  std::vector<Branch> branches;
  branches.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double lo = static_cast<double>(k) / beta;
    const double hi = k + 1 == count ? 1.0 : static_cast<double>(k + 1) / beta;
    branches.push_back(Branch::affine(lo, hi, beta, -static_cast<double>(k)));
  }
  return IntervalMap(std::move(branches), format_beta_label(beta));
}

/// A two-branch full map u + eps*u*(1-u) with u = 2x mod 1. Smooth, non-affine;
/// certified inf|T'| = 2(1 - eps) and sup|T''| = 8 eps for 0 <= eps < 1/2.
inline IntervalMap perturbed_doubling_map(double eps) {
  if (!(eps >= 0.0 && eps < 0.5)) throw ArgumentError("perturbed doubling map requires 0 <= eps < 1/2");
  std::vector<Branch> branches;
  for (int k = 0; k < 2; ++k) {
    const double shift = k;
    SmoothBranchFns fns;
    fns.value = [eps, shift](double x) {
      const double u = 2.0 * x - shift;
      return u + eps * u * (1.0 - u);
    };
    fns.first = [eps, shift](double x) {
      const double u = 2.0 * x - shift;
      return 2.0 * (1.0 + eps * (1.0 - 2.0 * u));
    };
    fns.second = [eps](double) { return -8.0 * eps; };
    fns.min_abs_derivative = 2.0 * (1.0 - eps);
    fns.max_abs_second = 8.0 * eps;
    fns.max_abs_derivative = 2.0 * (1.0 + eps);
    branches.push_back(Branch::smooth(0.5 * k, 0.5 * (k + 1), std::move(fns)));
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "perturbed-doubling:%g", eps);
  return IntervalMap(std::move(branches), buf);
}

}  // namespace seqdyn
