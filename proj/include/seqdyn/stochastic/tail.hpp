#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "seqdyn/errors.hpp"

namespace seqdyn {

/// Empirical exceedance probabilities P(V > t) and the Gaussian-type bound
/// exp(-c * scale * t^2) they are compared with.
struct TailReport {
  std::vector<double> thresholds;       // ascending
  std::vector<double> empirical_probs;  // nonincreasing
  std::vector<double> std_errors;
  double scale = 1.0;
  double fit_min_t = 0.0;                 // only t >= fit_min_t enter the fit
  std::optional<double> bound_exponent_fit;  // largest c with p(t) <= exp(-c scale t^2) on the fit window
  std::optional<double> ls_exponent;         // least squares of -log p on scale t^2 through the origin
  std::size_t sample_count = 0;
  std::vector<std::string> warnings;
};

inline TailReport make_tail_report(const std::vector<double>& values, std::vector<double> thresholds, double scale,
                                   double fit_min_t = 0.0) {
  if (values.empty()) throw ArgumentError("tail report needs at least one sample");
  std::sort(thresholds.begin(), thresholds.end());
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  TailReport r;
  r.thresholds = thresholds;
  r.scale = scale;
  r.fit_min_t = fit_min_t;
  r.sample_count = values.size();
  const auto m = static_cast<double>(values.size());
  double envelope = std::numeric_limits<double>::infinity();
  double sxy = 0.0, sxx = 0.0;
  bool any_fit = false;
  for (double t : thresholds) {
    const auto above = static_cast<double>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t));
    const double p = above / m;
    r.empirical_probs.push_back(p);
    r.std_errors.push_back(std::sqrt(p * (1.0 - p) / m));
    if (t <= 0.0 || t < fit_min_t || p <= 0.0) continue;
    const double x = scale * t * t;
    const double y = -std::log(p);
    envelope = std::min(envelope, y / x);
    sxy += x * y;
    sxx += x * x;
    any_fit = true;
  }
  if (any_fit) {
    r.bound_exponent_fit = envelope;
    r.ls_exponent = sxy / sxx;
  } else {
    r.warnings.push_back("no exceedances at any fitted threshold; exponent not identified");
  }
  if (fit_min_t > 0.0) r.warnings.push_back("fit restricted to t >= " + std::to_string(fit_min_t));
  return r;
}

}  // namespace seqdyn
