#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/maps/sequence.hpp"
#include "seqdyn/rng.hpp"
#include "seqdyn/stochastic/parallel.hpp"
#include "seqdyn/transfer/operator.hpp"

namespace seqdyn {

/// The maps T_1 .. T_{n-1} needed for orbits of length n, built once.
class OrbitStepper {
 public:
  OrbitStepper(const MapSequence& seq, std::size_t n) : maps_(n > 1 ? seq.maps(1, n - 1) : std::vector<IntervalMap>{}) {}

  std::size_t length() const noexcept { return maps_.size() + 1; }

  /// x_k = T_k x_{k-1}, keeping the full 53-bit resolution: each step adds
  /// |T'| 2^-53 u of fresh randomness in place of the low bits the
  /// expansion pushes out, so a doubling orbit does not collapse onto 0.
  void run(double x0, CounterRng& rng, std::span<double> out) const {
    out[0] = x0;
    double x = x0;
    for (std::size_t k = 0; k < maps_.size(); ++k) {
      const auto& m = maps_[k];
      const std::size_t b = m.branch_index(x);
      const double slope = std::abs(m.branches()[b].derivative(x));
      double y = m.apply_branch(b, x) + slope * 0x1.0p-53 * rng.uniform();
      if (y >= 1.0) y -= 1.0;
      x = y;
      out[k + 1] = x;
    }
  }

  /// Plain iteration without added randomness.
  void run_plain(double x0, std::span<double> out) const {
    out[0] = x0;
    for (std::size_t k = 0; k < maps_.size(); ++k) out[k + 1] = maps_[k](out[k]);
  }

 private:
  std::vector<IntervalMap> maps_;
};

/// M orbits (x_0 .. x_{n-1}) from uniform starting points; orbit i uses the
/// generator stream (seed, i), so any subset can be regenerated on its own.
struct OrbitEnsemble {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t m_samples = 0;
  std::vector<double> points;  // row-major, m_samples x n

  std::span<const double> orbit(std::size_t i) const { return {points.data() + i * n, n}; }
};

/// Calls fn(i, orbit_i) for every sample, in parallel; fn must only write to slot i.
template <class Fn>
void for_each_orbit(const MapSequence& seq, std::size_t n, std::size_t m_samples, std::uint64_t seed,
                    std::size_t threads, Fn&& fn) {
  if (n == 0 || m_samples == 0) throw ArgumentError("orbit ensembles need n >= 1 and m_samples >= 1");
  const OrbitStepper stepper(seq, n);
  parallel_for(m_samples, threads, [&](std::size_t i) {
    thread_local std::vector<double> buf;
    buf.resize(n);
    CounterRng rng(seed, i);
    stepper.run(rng.uniform(), rng, buf);
    fn(i, std::span<const double>(buf));
  });
}

inline OrbitEnsemble sample_orbits(const MapSequence& seq, std::size_t n, std::size_t m_samples, std::uint64_t seed,
                                   std::size_t threads = 1) {
  OrbitEnsemble e{seed, n, m_samples, std::vector<double>(n * m_samples)};
  for_each_orbit(seq, n, m_samples, seed, threads, [&](std::size_t i, std::span<const double> orb) {
    std::copy(orb.begin(), orb.end(), e.points.begin() + static_cast<std::ptrdiff_t>(i * n));
  });
  return e;
}

/// A Lipschitz observable on [0,1] carried by its piecewise-constant proxy,
/// which is what both orbit evaluation and operator centering use.
struct LipschitzFn {
  PiecewiseFn proxy;
  double lip = 0.0;
  std::string name;

  static constexpr std::size_t kProxyCells = 1024;

  static LipschitzFn sample(const std::function<double(double)>& fn, double lip, std::string name,
                            std::size_t cells = kProxyCells) {
    if (!(lip >= 0.0)) throw ArgumentError("Lipschitz constant must be >= 0");
    return {PiecewiseFn::sample(fn, cells), lip, std::move(name)};
  }

  static LipschitzFn identity() { return sample([](double x) { return x; }, 1.0, "x"); }
  static LipschitzFn sawtooth() { return sample([](double x) { return x - 0.5; }, 1.0, "x-1/2"); }
  static LipschitzFn constant(double c) { return {PiecewiseFn::constant(c), 0.0, "const"}; }

  double operator()(double x) const { return proxy(x); }
};

/// int f o T_1^k dm = int f P_1^k 1 dm for k = 0 .. n-1, via the operator route.
inline std::vector<double> centering_means(const MapSequence& seq, const PiecewiseFn& f, std::size_t n,
                                           const TransferOptions& opts = {}) {
  std::vector<double> c;
  c.reserve(n);
  Transport t(PiecewiseFn::constant(1.0), opts);
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) t.step(seq.map(k));
    c.push_back(integrate_product(f, t.current()));
  }
  return c;
}

}  // namespace seqdyn
