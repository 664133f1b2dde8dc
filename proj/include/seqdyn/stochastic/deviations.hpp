#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/stochastic/ensemble.hpp"
#include "seqdyn/stochastic/observable.hpp"
#include "seqdyn/stochastic/tail.hpp"

namespace seqdyn {

/// Tail of the centered Birkhoff average (1/n) sum_k [f(x_k) - int f o T_1^k dm],
/// compared with exp(-c n t^2).
inline TailReport ld_tail(const MapSequence& seq, const LipschitzFn& f, std::size_t n, std::vector<double> t_list,
                          std::size_t m_samples, std::uint64_t seed, std::size_t threads = 1,
                          const TransferOptions& opts = {}) {
  if (n == 0) throw ArgumentError("ld_tail requires n >= 1");
  const auto centers = centering_means(seq, f.proxy, n, opts);
  std::vector<double> avg(m_samples);
  const double inv_n = 1.0 / static_cast<double>(n);
  for_each_orbit(seq, n, m_samples, seed, threads, [&](std::size_t i, std::span<const double> orb) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += f(orb[k]) - centers[k];
    avg[i] = s * inv_n;
  });
  return make_tail_report(avg, std::move(t_list), static_cast<double>(n));
}

struct EnsembleVariance {
  double variance = 0.0;  // of S_n = sum_{k<n} f(x_k)
  double se = 0.0;        // sqrt((mu_4 - var^2) / M)
  std::size_t sample_count = 0;
};

inline EnsembleVariance ensemble_sum_variance(const MapSequence& seq, const LipschitzFn& f, std::size_t n,
                                              std::size_t m_samples, std::uint64_t seed, std::size_t threads = 1) {
  if (m_samples < 2) throw ArgumentError("ensemble variance needs m_samples >= 2");
  std::vector<double> sums(m_samples);
  for_each_orbit(seq, n, m_samples, seed, threads, [&](std::size_t i, std::span<const double> orb) {
    double s = 0.0;
    for (double x : orb) s += f(x);
    sums[i] = s;
  });
  const auto m = static_cast<double>(m_samples);
  double mean = 0.0;
  for (double s : sums) mean += s;
  mean /= m;
  double m2 = 0.0, m4 = 0.0;
  for (double s : sums) {
    const double d = (s - mean) * (s - mean);
    m2 += d;
    m4 += d * d;
  }
  EnsembleVariance r;
  r.variance = m2 / (m - 1.0);
  r.se = std::sqrt(std::max(0.0, m4 / m - (m2 / m) * (m2 / m)) / m);
  r.sample_count = m_samples;
  return r;
}

struct MgfRow {
  double lambda = 0.0;
  double mgf = 1.0;        // mean of exp(lambda (K - mean K))
  double se = 0.0;
  double log_mgf = 0.0;
  double ess = 0.0;        // (sum w)^2 / sum w^2
  double exponent = 0.0;   // log_mgf / (lambda^2 sum Lip^2)
  bool stable = true;
};

struct MgfReport {
  std::vector<MgfRow> rows;
  std::optional<double> c_hat;            // max exponent over stable lambda
  std::optional<double> largest_stable_lambda;
  double mean_k = 0.0;
  double lip_square_sum = 0.0;
  std::size_t sample_count = 0;
  TailReport tail;  // of (K - mean K) / sqrt(sum Lip^2)
  std::vector<std::string> warnings;
};

inline constexpr double kMinEffectiveSamples = 10.0;

/// Monte-Carlo E exp(lambda (K - EK)) over orbits of length K.arity(), with
/// EK replaced by the sample mean.
inline MgfReport concentration_mgf(const MapSequence& seq, const Observable& k, const std::vector<double>& lambdas,
                                   std::size_t m_samples, std::uint64_t seed, std::size_t threads = 1,
                                   std::vector<double> tail_thresholds = {0.5, 1.0, 1.5, 2.0}) {
  const auto check = spot_check(k, 256, seed);
  if (!check.ok()) {
    throw ArgumentError("observable '" + k.name() + "' violates its declared Lipschitz constants in " +
                        std::to_string(check.violations) + " of " + std::to_string(check.probes) + " probes");
  }
  MgfReport r;
  r.lip_square_sum = k.lip_square_sum();
  if (!(r.lip_square_sum > 0.0)) throw ArgumentError("concentration_mgf requires sum Lip_j^2 > 0");
  std::vector<double> values(m_samples);
  for_each_orbit(seq, k.arity(), m_samples, seed, threads,
                 [&](std::size_t i, std::span<const double> orb) { values[i] = k(orb); });
  r.sample_count = m_samples;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(m_samples);
  r.mean_k = mean;
  std::vector<double> dev(m_samples);
  for (std::size_t i = 0; i < m_samples; ++i) dev[i] = values[i] - mean;
  const auto m = static_cast<double>(m_samples);
  for (double lambda : lambdas) {
    // Factor out the largest exponent so exp never overflows.
    double top = -std::numeric_limits<double>::infinity();
    for (double d : dev) top = std::max(top, lambda * d);
    double s = 0.0, s2 = 0.0;
    for (double d : dev) {
      const double w = std::exp(lambda * d - top);
      s += w;
      s2 += w * w;
    }
    MgfRow row;
    row.lambda = lambda;
    row.log_mgf = top + std::log(s / m);
    row.mgf = std::exp(row.log_mgf);
    const double var_w = m > 1 ? std::max(0.0, (s2 - s * s / m) / (m - 1.0)) : 0.0;
    row.se = std::exp(top) * std::sqrt(var_w / m);
    row.ess = s * s / s2;
    row.exponent = lambda != 0.0 ? row.log_mgf / (lambda * lambda * r.lip_square_sum) : 0.0;
    row.stable = row.ess > kMinEffectiveSamples;
    if (!row.stable) {
      r.warnings.push_back("unstable MGF estimate at lambda = " + std::to_string(lambda) + " (effective samples " +
                           std::to_string(row.ess) + ")");
    } else {
      r.largest_stable_lambda = std::max(r.largest_stable_lambda.value_or(lambda), lambda);
      r.c_hat = std::max(r.c_hat.value_or(row.exponent), row.exponent);
    }
    r.rows.push_back(row);
  }
  if (!r.c_hat) r.warnings.push_back("no lambda with a stable MGF estimate; C_hat not reported");
  const double scale = 1.0 / std::sqrt(r.lip_square_sum);
  for (double& d : dev) d *= scale;
  r.tail = make_tail_report(dev, std::move(tail_thresholds), 1.0);
  return r;
}

}  // namespace seqdyn
