#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "seqdyn/errors.hpp"
#include "seqdyn/stochastic/ensemble.hpp"
#include "seqdyn/transfer/correlation.hpp"

namespace seqdyn {

enum class SigmaRoute { operator_route, montecarlo };

inline const char* sigma_route_name(SigmaRoute r) { return r == SigmaRoute::operator_route ? "operator" : "montecarlo"; }

struct AscltOptions {
  SigmaRoute route = SigmaRoute::operator_route;
  std::uint64_t seed = 0;            // dither of the orbit through x, and MC ensemble seed
  std::size_t mc_samples = 10000;    // montecarlo route only
  std::size_t threads = 1;
  std::size_t quantiles = 99;        // evaluation grid Phi^{-1}(j / (quantiles + 1))
  double min_growth = 1e-10;         // hypothesis: Var(S_k) >= c k with c above this
  TransferOptions transfer;
};

struct AscltReport {
  std::size_t n = 0;
  SigmaRoute route = SigmaRoute::operator_route;
  std::vector<double> weights;       // (1/k) / H_n, k = 1..n
  std::vector<double> normalized;    // S_k(x) / ||S_k||_2
  std::vector<double> grid;          // evaluation points z
  std::vector<double> empirical_cdf; // log-averaged CDF at grid
  std::vector<double> normal_cdf;    // Phi at grid
  std::optional<double> ks_distance; // sup_z |F_n(z) - Phi(z)|
  double growth_constant = 0.0;      // min_k Var(S_k) / k
  bool hypothesis_ok = false;
  bool low_n = false;
  std::vector<std::string> flags;
};

namespace detail {

/// Var(S_k), k = 1..n, from an orbit ensemble; shards are reduced in order.
inline std::vector<double> mc_variance_profile(const MapSequence& seq, const LipschitzFn& f, std::size_t n,
                                               const std::vector<double>& centers, const AscltOptions& opts) {
  constexpr std::size_t kShards = 64;
  const std::size_t m = opts.mc_samples;
  std::vector<std::vector<double>> sums(kShards, std::vector<double>(n, 0.0)), squares = sums;
  const OrbitStepper stepper(seq, n);
  parallel_for(kShards, opts.threads, [&](std::size_t shard) {
    std::vector<double> orb(n);
    for (std::size_t i = shard; i < m; i += kShards) {
      CounterRng rng(opts.seed ^ 0xa5c1a5c1ULL, i);
      stepper.run(rng.uniform(), rng, orb);
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        s += f(orb[k]) - centers[k];
        sums[shard][k] += s;
        squares[shard][k] += s * s;
      }
    }
  });
  std::vector<double> var(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0, s2 = 0.0;
    for (std::size_t shard = 0; shard < kShards; ++shard) {
      s += sums[shard][k];
      s2 += squares[shard][k];
    }
    const auto md = static_cast<double>(m);
    var[k] = std::max(0.0, (s2 - s * s / md) / (md - 1.0));
  }
  return var;
}

}  // namespace detail

/// Log-averaged empirical distribution of S_k(x) / ||S_k||_2, k = 1..n, along
/// the orbit of x, with S_k = sum_{j<k} [f(x_j) - int f o T_1^j dm].
inline AscltReport asclt_report(const MapSequence& seq, const LipschitzFn& f, std::size_t n, double x,
                                const AscltOptions& opts = {}) {
  if (n == 0) throw ArgumentError("asclt_report requires n >= 1");
  if (!(x >= 0.0 && x < 1.0)) throw DomainError("x outside [0,1): " + std::to_string(x));
  if (opts.route == SigmaRoute::montecarlo && opts.mc_samples < 2) {
    throw ArgumentError("montecarlo route needs mc_samples >= 2");
  }
  AscltReport r;
  r.n = n;
  r.route = opts.route;
  r.low_n = n < 100;
  if (r.low_n) r.flags.push_back("low n: " + std::to_string(n) + " < 100 terms in the log average");

  const auto centers = centering_means(seq, f.proxy, n, opts.transfer);
  const auto var = opts.route == SigmaRoute::operator_route ? variance_profile(seq, f.proxy, n, opts.transfer)
                                                            : detail::mc_variance_profile(seq, f, n, centers, opts);
  r.growth_constant = var[0];
  for (std::size_t k = 1; k <= n; ++k) r.growth_constant = std::min(r.growth_constant, var[k - 1] / static_cast<double>(k));
  r.hypothesis_ok = r.growth_constant > opts.min_growth;
  if (!r.hypothesis_ok) {
    r.flags.push_back("hypothesis failure: Var(S_k) >= c k does not hold with c > 0 (min Var(S_k)/k = " +
                      std::to_string(r.growth_constant) + ")");
    return r;
  }

  std::vector<double> orb(n);
  CounterRng rng(opts.seed, 0);
  OrbitStepper(seq, n).run(x, rng, orb);
  double harmonic = 0.0;
  for (std::size_t k = 1; k <= n; ++k) harmonic += 1.0 / static_cast<double>(k);
  double s = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    s += f(orb[k - 1]) - centers[k - 1];
    r.normalized.push_back(s / std::sqrt(var[k - 1]));
    r.weights.push_back(1.0 / (static_cast<double>(k) * harmonic));
  }

  // Sort atoms and accumulate weights for the step CDF.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r.normalized[a] < r.normalized[b]; });
  std::vector<double> atoms, cum;
  double acc = 0.0;
  for (std::size_t idx : order) {
    acc += r.weights[idx];
    if (!atoms.empty() && atoms.back() == r.normalized[idx]) {
      cum.back() = acc;
    } else {
      atoms.push_back(r.normalized[idx]);
      cum.push_back(acc);
    }
  }
  const boost::math::normal phi;
  double ks = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double p = boost::math::cdf(phi, atoms[i]);
    const double before = i == 0 ? 0.0 : cum[i - 1];
    ks = std::max({ks, std::abs(cum[i] - p), std::abs(before - p)});
  }
  r.ks_distance = std::min(1.0, ks);

  for (std::size_t j = 1; j <= opts.quantiles; ++j) {
    const double z = boost::math::quantile(phi, static_cast<double>(j) / static_cast<double>(opts.quantiles + 1));
    const auto it = std::upper_bound(atoms.begin(), atoms.end(), z);
    r.grid.push_back(z);
    r.empirical_cdf.push_back(it == atoms.begin() ? 0.0 : cum[static_cast<std::size_t>(it - atoms.begin()) - 1]);
    r.normal_cdf.push_back(boost::math::cdf(phi, z));
  }
  return r;
}

}  // namespace seqdyn
