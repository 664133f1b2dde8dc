#pragma once

#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/transfer/operator.hpp"

namespace seqdyn {

/// E[(f o T_1^j)(g o T_1^l)] under Lebesgue, as  int g P_{j+1}^l (f P_1^j 1) dm.
inline double correlation(const MapSequence& seq, const PiecewiseFn& f, const PiecewiseFn& g, std::size_t j,
                          std::size_t l, const TransferOptions& opts = {}) {
  if (j > l) throw ArgumentError("correlation requires j <= l");
  const auto rho = transport(seq, PiecewiseFn::constant(1.0), 1, j, opts);
  const auto moved = transport(seq, f * rho, j + 1, l, opts);
  return integrate_product(g, moved);
}

/// Cov(f o T_1^j, g o T_1^l) under Lebesgue.
inline double covariance(const MapSequence& seq, const PiecewiseFn& f, const PiecewiseFn& g, std::size_t j,
                         std::size_t l, const TransferOptions& opts = {}) {
  if (j > l) throw ArgumentError("covariance requires j <= l");
  const auto rho_j = transport(seq, PiecewiseFn::constant(1.0), 1, j, opts);
  const auto rho_l = transport(seq, rho_j, j + 1, l, opts);
  const double cj = integrate_product(f, rho_j);
  const double cl = integrate_product(g, rho_l);
  return correlation(seq, f, g, j, l, opts) - cj * cl;
}

/// Var(S_k) for k = 1..n, S_k = sum_{i<k} f o T_1^i.
///
/// With w_k = (f - int f rho_k) rho_k and W_k = sum_{j<=k} P_{j+1}^k w_j,
/// sum_{j<=k} Cov(j, k) = int f W_k, so each step costs one transfer.
/// When `lag_limit` is set, covariances at lags beyond it are dropped.
inline std::vector<double> variance_profile(const MapSequence& seq, const PiecewiseFn& f, std::size_t n,
                                            const TransferOptions& opts = {},
                                            std::optional<std::size_t> lag_limit = std::nullopt) {
  if (n == 0) throw ArgumentError("variance_profile requires n >= 1");
  std::vector<double> out;
  out.reserve(n);
  Transport rho(PiecewiseFn::constant(1.0), opts);
  std::vector<PiecewiseFn> window;  // pushed w_j for the lag-limited variant
  std::optional<Transport> acc;
  double var = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0) rho.step(seq.map(k));
    const auto r = rho.current();
    const double c = integrate_product(f, r);
    const auto w = (f - c) * r;
    double cross = 0.0;
    if (!lag_limit) {
      if (acc) {
        acc->step(seq.map(k));
        const auto prev = acc->current();
        cross = integrate_product(f, prev);
        acc.emplace(prev + w, opts);
      } else {
        acc.emplace(w, opts);
      }
    } else {
      for (auto& p : window) {
        p = transport(seq, p, k, k, opts);
        cross += integrate_product(f, p);
      }
      window.push_back(w);
      if (window.size() > *lag_limit) window.erase(window.begin());
    }
    var += integrate_product(f, w) + 2.0 * cross;
    out.push_back(var);
  }
  return out;
}

/// ||S_n||_2^2 = sum_{j,k<n} Cov(f o T_1^j, f o T_1^k).
inline double ergodic_sum_variance(const MapSequence& seq, const PiecewiseFn& f, std::size_t n,
                                   const TransferOptions& opts = {}) {
  return variance_profile(seq, f, n, opts).back();
}

}  // namespace seqdyn
