#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/maps/diagnostics.hpp"
#include "seqdyn/transfer/operator.hpp"

namespace seqdyn {

/// One row of a decay or density table.
struct NormRow {
  std::size_t n = 0;
  double min = 0.0;
  double max = 0.0;
  double variation = 0.0;
  double l1 = 0.0;
  double bv = 0.0;
};

inline NormRow norm_row(std::size_t n, const PiecewiseFn& f) {
  const auto b = f.bv_norm();
  return {n, f.min(), f.max(), b.variation, b.l1, b.bv};
}

struct DecayOptions {
  std::size_t skip = 2;                    // leading steps left out of the fit
  std::optional<std::size_t> last;         // last step in the fit (default n_max)
  double floor = 1e-300;                   // norms below this are excluded
  TransferOptions transfer{};
};

/// BV norms of P_1^n f0 and the geometric fit bv_n ~ K theta^n.
struct DecayEstimate {
  std::vector<NormRow> rows;  // n = 0 .. n_max
  std::optional<double> theta_hat;
  std::optional<double> k_hat;
  std::size_t window_first = 0;
  std::size_t window_last = 0;
  std::size_t fitted_points = 0;
  bool degenerate = false;
  bool used_grid = false;

  std::vector<double> rates() const {
    std::vector<double> r;
    r.reserve(rows.size());
    for (const auto& row : rows) r.push_back(row.bv);
    return r;
  }
};

/// Least squares of log y on x; returns (intercept, slope).
inline std::optional<std::pair<double, double>> fit_log_linear(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 2 || x.size() != y.size()) return std::nullopt;
  double sx = 0.0, sy = 0.0;
  const auto m = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += std::log(y[i]);
  }
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (std::log(y[i]) - my);
  }
  if (sxx <= 0.0) return std::nullopt;
  const double slope = sxy / sxx;
  return std::make_pair(my - slope * mx, slope);
}

inline DecayEstimate decay_rate(const MapSequence& seq, const PiecewiseFn& f0, std::size_t n_max,
                                const DecayOptions& opts = {}) {
  if (n_max < 4) throw ArgumentError("decay_rate requires n_max >= 4");
  const double mean = f0.integral();
  if (std::abs(mean) > 1e-12) throw ArgumentError("decay_rate requires a zero-mean f0, got integral " + std::to_string(mean));
  DecayEstimate est;
  Transport t(f0, opts.transfer);
  est.rows.push_back(norm_row(0, f0));
  for (std::size_t n = 1; n <= n_max; ++n) {
    t.step(seq.map(n));
    est.rows.push_back(norm_row(n, t.current()));
  }
  est.used_grid = t.on_grid();
  est.window_first = opts.skip;
  est.window_last = std::min(opts.last.value_or(n_max), n_max);
  std::vector<double> xs, ys;
  for (std::size_t n = est.window_first; n <= est.window_last; ++n) {
    const double r = est.rows[n].bv;
    if (!(r >= opts.floor)) continue;
    xs.push_back(static_cast<double>(n));
    ys.push_back(r);
  }
  est.fitted_points = xs.size();
  const auto fit = fit_log_linear(xs, ys);
  if (!fit) {
    est.degenerate = true;
    return est;
  }
  est.theta_hat = std::exp(fit->second);
  est.k_hat = std::exp(fit->first) / est.rows[0].bv;
  return est;
}

struct MinorationReport {
  double delta_hat = 1.0;
  std::vector<double> per_n_minima;  // index k-1 holds min P_1^k 1, k = 1 .. horizon
  std::vector<NormRow> rows;         // densities, n = 0 .. horizon
  std::optional<CoveringPrediction> prediction;
  std::optional<std::size_t> ulam_from;
};

struct MinorationOptions {
  bool predict = true;
  TransferOptions transfer{};
};

inline MinorationReport minoration_check(const MapSequence& seq, std::size_t horizon, const MinorationOptions& opts = {}) {
  if (horizon == 0) throw ArgumentError("minoration_check requires horizon >= 1");
  MinorationReport rep;
  rep.delta_hat = std::numeric_limits<double>::infinity();
  Transport t(PiecewiseFn::constant(1.0), opts.transfer);
  rep.rows.push_back(norm_row(0, t.current()));
  for (std::size_t n = 1; n <= horizon; ++n) {
    t.step(seq.map(n));
    if (t.on_grid() && !rep.ulam_from) rep.ulam_from = n;
    const auto rho = t.current();
    rep.rows.push_back(norm_row(n, rho));
    rep.per_n_minima.push_back(rho.min());
    rep.delta_hat = std::min(rep.delta_hat, rho.min());
  }
  if (opts.predict) rep.prediction = covering_minoration_prediction(seq, horizon);
  return rep;
}

}  // namespace seqdyn
