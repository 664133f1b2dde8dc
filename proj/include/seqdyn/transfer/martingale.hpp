#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/transfer/operator.hpp"

namespace seqdyn {

inline constexpr double kMartingaleMinoration = 1e-6;

/// S_n = sum_k U_k + h_n o T_1^n, with f_k = f - int f o T_1^k dm,
/// h_n = (1 / P_1^n 1) sum_{k<n} P_{k+1}^n (f_k P_1^k 1),
/// phi_k = f_k + h_k - h_{k+1} o T_{k+1} and U_k = phi_k o T_1^k.
struct MartingaleDecomp {
  std::vector<PiecewiseFn> h;                 // h_0 .. h_n
  std::vector<std::vector<double>> u_values;  // per sample: U_0 .. U_{n-1}
  std::vector<double> residual;               // per sample: |S_n - (sum U_k + h_n o T_1^n)|
  std::vector<double> sup_h;                  // ||h_k||_sup, k = 0 .. n
  double max_residual = 0.0;
  double max_defect = 0.0;  // max_k sup |P_{k+1}(phi_k P_1^k 1)|, zero for a reverse martingale
  double delta_hat = 1.0;
};

inline MartingaleDecomp martingale_decomposition(const MapSequence& seq, const PiecewiseFn& f, std::size_t n,
                                                 const std::vector<double>& orbit_samples,
                                                 const TransferOptions& opts = {}) {
  if (n == 0) throw ArgumentError("martingale_decomposition requires n >= 1");
  MartingaleDecomp out;
  const auto maps = seq.maps(1, n);
  // Densities rho_k = P_1^k 1 and centered observables f_k.
  std::vector<PiecewiseFn> rho;
  rho.reserve(n + 1);
  {
    Transport t(PiecewiseFn::constant(1.0), opts);
    rho.push_back(t.current());
    for (std::size_t k = 1; k <= n; ++k) {
      t.step(maps[k - 1]);
      rho.push_back(t.current());
    }
  }
  out.delta_hat = 1.0;
  for (const auto& r : rho) out.delta_hat = std::min(out.delta_hat, r.min());
  if (out.delta_hat < kMartingaleMinoration) {
    throw MinorationError("min P_1^k 1 = " + std::to_string(out.delta_hat) + " below " +
                          std::to_string(kMartingaleMinoration));
  }
  std::vector<PiecewiseFn> fk;
  fk.reserve(n + 1);
  for (const auto& r : rho) fk.push_back(f - integrate_product(f, r));

  // G_0 = 0, G_{k+1} = P_{k+1}(G_k + f_k rho_k), h_k = G_k / rho_k.
  const auto divide = [](double a, double b) { return a / b; };
  PiecewiseFn g = PiecewiseFn::constant(0.0);
  out.h.push_back(g);
  for (std::size_t k = 0; k < n; ++k) {
    g = transport(seq, g + fk[k] * rho[k], k + 1, k + 1, opts);
    out.h.push_back(PiecewiseFn::combine(g, rho[k + 1], divide).simplified());
  }
  for (const auto& h : out.h) out.sup_h.push_back(h.sup_abs());

  std::vector<PiecewiseFn> phi;
  phi.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    phi.push_back(fk[k] + out.h[k] - compose(out.h[k + 1], maps[k]));
    const auto defect = transport(seq, phi.back() * rho[k], k + 1, k + 1, opts);
    out.max_defect = std::max(out.max_defect, defect.sup_abs());
  }

  for (double x0 : orbit_samples) {
    const auto xs = orbit(seq, x0, n);
    double s = 0.0, u_sum = 0.0;
    std::vector<double> u(n);
    for (std::size_t k = 0; k < n; ++k) {
      s += fk[k](xs[k]);
      u[k] = phi[k](xs[k]);
      u_sum += u[k];
    }
    const double r = std::abs(s - (u_sum + out.h[n](xs[n])));
    out.residual.push_back(r);
    out.max_residual = std::max(out.max_residual, r);
    out.u_values.push_back(std::move(u));
  }
  return out;
}

}  // namespace seqdyn
