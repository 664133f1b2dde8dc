#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "seqdyn/maps.hpp"
#include "seqdyn/runner/config.hpp"
#include "seqdyn/runner/record.hpp"
#include "seqdyn/stochastic.hpp"
#include "seqdyn/transfer.hpp"

namespace seqdyn {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline LipschitzFn observable_by_name(const std::string& name) {
  if (name == "x") return LipschitzFn::identity();
  if (name == "x-1/2") return LipschitzFn::sawtooth();
  if (name == "constant") return LipschitzFn::constant(1.0);
  throw ArgumentError("unknown observable '" + name + "'");
}

/// sum_i cos(3 x_i + i): smooth in every coordinate, with Lip_j = 3.
inline Observable kp_probe_observable(std::size_t arity) {
  return Observable(
      arity,
      [](std::span<const double> x) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += std::cos(3.0 * x[i] + static_cast<double>(i));
        return s;
      },
      std::vector<double>(arity, 3.0), "cos-sum");
}

struct BinnedEstimate {
  double mean = kNaN;
  double se = kNaN;
  std::size_t hits = 0;
};

/// Monte-Carlo E[K | x_p]: average K over orbits with |x_p - target| <= width / 2.
inline std::vector<BinnedEstimate> binned_conditional_expectation(const MapSequence& seq, const Observable& k,
                                                                  std::size_t p, const std::vector<double>& targets,
                                                                  double width, std::size_t m_samples,
                                                                  std::uint64_t seed, std::size_t threads = 1) {
  const std::size_t len = std::max(k.arity(), p + 1);
  // Per orbit: index of the matching target (or none) and the value of K.
  std::vector<int> slot(m_samples, -1);
  std::vector<double> value(m_samples, 0.0);
  for_each_orbit(seq, len, m_samples, seed, threads, [&](std::size_t i, std::span<const double> orb) {
    for (std::size_t t = 0; t < targets.size(); ++t) {
      if (std::abs(orb[p] - targets[t]) <= width / 2) {
        slot[i] = static_cast<int>(t);
        value[i] = k(orb);
        return;
      }
    }
  });
  std::vector<double> s(targets.size(), 0.0), s2(targets.size(), 0.0);
  std::vector<BinnedEstimate> out(targets.size());
  for (std::size_t i = 0; i < m_samples; ++i) {
    if (slot[i] < 0) continue;
    const auto t = static_cast<std::size_t>(slot[i]);
    s[t] += value[i];
    s2[t] += value[i] * value[i];
    ++out[t].hits;
  }
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (out[t].hits < 2) continue;
    const auto h = static_cast<double>(out[t].hits);
    out[t].mean = s[t] / h;
    out[t].se = std::sqrt(std::max(0.0, (s2[t] - s[t] * s[t] / h) / (h - 1.0)) / h);
  }
  return out;
}

namespace scenario {

inline void tail_rows(Table& t, double key, const TailReport& r) {
  for (std::size_t i = 0; i < r.thresholds.size(); ++i) {
    const double x = r.thresholds[i];
    double bound = kNaN;
    if (r.bound_exponent_fit) bound = std::exp(-*r.bound_exponent_fit * r.scale * x * x);
    t.add({key, x, r.empirical_probs[i], r.std_errors[i], bound});
  }
}

inline nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

inline void decay(const ExperimentConfig& c, const MapSequence& seq, ExperimentRecord& rec) {
  DecayOptions o;
  o.skip = c.count("skip");
  o.transfer.ulam_bins = c.count("ulam_bins");
  const auto f0 = PiecewiseFn::sample([](double x) { return x - 0.5; }, c.count("proxy_cells"));
  const auto est = decay_rate(seq, f0, c.count("n_max"), o);
  Table t{"norms", {"n", "min", "max", "variation", "l1", "bv"}, {}};
  for (const auto& r : est.rows) t.add({double(r.n), r.min, r.max, r.variation, r.l1, r.bv});
  rec.tables.push_back(std::move(t));
  rec.fitted = {{"theta_hat", opt(est.theta_hat)},     {"k_hat", opt(est.k_hat)},
                {"window_first", est.window_first},    {"window_last", est.window_last},
                {"fitted_points", est.fitted_points},  {"degenerate", est.degenerate},
                {"used_grid", est.used_grid}};
  if (est.degenerate) rec.warnings.emplace_back("decay fit degenerate: fewer than two norms above the floor");
  if (est.used_grid) rec.warnings.emplace_back("transfer left the exact path; norms are grid approximations");
}

inline void minoration(const ExperimentConfig& c, const MapSequence& seq, ExperimentRecord& rec) {
  MinorationOptions o;
  o.predict = c.flag("predict");
  o.transfer.ulam_bins = c.count("ulam_bins");
  const auto rep = minoration_check(seq, c.count("horizon"), o);
  Table t{"densities", {"n", "min_density", "max_density", "bv"}, {}};
  for (const auto& r : rep.rows) t.add({double(r.n), r.min, r.max, r.bv});
  rec.tables.push_back(std::move(t));
  rec.fitted = {{"delta_hat", rep.delta_hat},
                {"ulam_from", rep.ulam_from ? nlohmann::json(*rep.ulam_from) : nlohmann::json()}};
  if (rep.prediction) {
    const auto& p = *rep.prediction;
    rec.fitted["predicted_delta"] = opt(p.delta);
    rec.fitted["prediction"] = {{"lambda", p.lambda}, {"max_slope", opt(p.max_slope)},
                                {"r", p.r},           {"rho_r", p.block.contraction},
                                {"c_r", p.block.additive}, {"cone", p.cone},
                                {"n0", p.n0},         {"covering", p.covering ? nlohmann::json(*p.covering) : nlohmann::json()}};
    for (const auto& note : p.notes) rec.warnings.push_back("prediction: " + note);
  }
  if (rep.ulam_from) rec.warnings.push_back("densities on the grid from n = " + std::to_string(*rep.ulam_from));
}

inline void covering(const ExperimentConfig& c, const MapSequence& seq, ExperimentRecord& rec) {
  const bool cms = c.flag("cms");
  Table t{"covering", {"n", "covering_horizon", "sup_sum", "var_sum", "cells"}, {}};
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  std::size_t uncovered = 0;
  for (std::size_t n = 1; n <= c.count("n_max"); ++n) {
    const auto h = covering_horizon(seq, c.count("block_start"), n, c.count("max_steps"));
    if (!h) ++uncovered;
    std::vector<double> row{double(n), h ? double(*h) : kNaN, kNaN, kNaN, kNaN};
    if (cms) {
      const auto s = inverse_derivative_sums(seq, n);
      row[2] = s.sup_sum;
      row[3] = s.var_sum;
      row[4] = s.cell_count;
      lo = std::min(lo, s.sup_sum);
      hi = std::max(hi, s.sup_sum);
    }
    t.add(std::move(row));
  }
  rec.tables.push_back(std::move(t));
  rec.fitted = {{"uncovered_blocks", uncovered}};
  if (cms) {
    rec.fitted["max_sup_sum"] = hi;
    rec.fitted["min_sup_sum"] = lo;
  }
  if (uncovered) rec.warnings.push_back(std::to_string(uncovered) + " block(s) not covering within max_steps");
}

inline void ld_tail(const ExperimentConfig& c, const MapSequence& seq, ExperimentRecord& rec, std::size_t threads) {
  const auto n = c.count("n");
  const auto r = seqdyn::ld_tail(seq, observable_by_name(c.text("observable")), n, c.reals("t_list"),
                                 c.count("m_samples"), c.seed, threads);
  Table t{"tail", {"n", "t", "prob", "se", "bound"}, {}};
  tail_rows(t, double(n), r);
  rec.tables.push_back(std::move(t));
  rec.fitted = {{"c", opt(r.bound_exponent_fit)}, {"ls_exponent", opt(r.ls_exponent)}, {"sample_count", r.sample_count}};
  rec.warnings.insert(rec.warnings.end(), r.warnings.begin(), r.warnings.end());
}

inline void empirical_measure(const ExperimentConfig& c, const MapSequence& seq, ExperimentRecord& rec,
                              std::size_t threads) {
  Table scaling{"scaling", {"n", "mean_kappa", "se_kappa"}, {}};
  Table tail{"tail", {"n", "t", "prob", "se", "bound"}, {}};
  std::vector<double> lx, ly;
  nlohmann::json tail_c = nlohmann::json::array();
  for (std::size_t n : c.counts("n_list")) {
    const auto r = empirical_measure_tail(seq, n, c.count("m_samples"), c.reals("t_list"), c.seed, threads);
    scaling.add({double(n), r.mean_kappa, r.se_kappa});
    tail_rows(tail, double(n), r.tail);
    tail_c.push_back(opt(r.tail.bound_exponent_fit));
    if (r.mean_kappa > 0.0) {
      lx.push_back(std::log(double(n)));
      ly.push_back(r.mean_kappa);
    }
  }
  rec.tables.push_back(std::move(scaling));
  rec.tables.push_back(std::move(tail));
  const auto fit = fit_log_linear(lx, ly);
  rec.fitted = {{"slope", fit ? nlohmann::json(fit->second) : nlohmann::json()},
                {"intercept", fit ? nlohmann::json(fit->first) : nlohmann::json()},
                {"tail_c", tail_c},
                {"tail_fit_min_t", 1.0}};
  rec.warnings.emplace_back("tail exponent fitted on t >= 1 only");
}

inline void shadowing(const ExperimentConfig& c, const MapSequence& seq, ExperimentRecord& rec, std::size_t threads) {
  Table summary{"summary", {"width", "measure", "abs_log_measure", "candidate_grid", "mean_z", "se_z", "c1"}, {}};
  Table tail{"tail", {"width", "t", "prob", "se", "bound"}, {}};
  nlohmann::json c1s = nlohmann::json::array();
  std::vector<double> c1v;
  for (double w : c.reals("widths")) {
    const IntervalSet a({{0.0, w}});
    const std::size_t grid = c.has("candidate_grid")
                                 ? c.count("candidate_grid")
                                 : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(double(c.count("grid_per_unit")) * w)));
    const auto r = shadowing_report(seq, a, c.count("n"), c.count("m_samples"), c.seed, grid, c.reals("t_list"), threads);
    summary.add({w, r.measure, std::abs(std::log(r.measure)), double(grid), r.mean_z, r.se_z, r.c1 ? *r.c1 : kNaN});
    tail_rows(tail, w, r.tail);
    c1s.push_back(opt(r.c1));
    if (r.c1) c1v.push_back(*r.c1);
  }
  rec.tables.push_back(std::move(summary));
  rec.tables.push_back(std::move(tail));
  rec.fitted = {{"c1", c1s}};
  if (c1v.size() >= 2) rec.fitted["c1_ratio"] = c1v.back() / c1v.front();
  rec.warnings.emplace_back("Z_n is minimized over a finite candidate grid and overestimates the infimum");
}

inline void asclt(const ExperimentConfig& c, const MapSequence& seq, ExperimentRecord& rec, std::size_t threads) {
  AscltOptions o;
  o.route = c.text("route") == "operator" ? SigmaRoute::operator_route : SigmaRoute::montecarlo;
  o.mc_samples = c.count("mc_samples");
  o.threads = threads;
  const auto f = observable_by_name(c.text("observable"));
  Table summary{"summary", {"orbit", "x", "ks_distance", "growth_constant", "hypothesis_ok", "low_n"}, {}};
  Table cdf{"cdf", {"orbit", "z", "empirical_cdf", "normal_cdf"}, {}};
  std::vector<double> ks;
  bool hypothesis = true;
  for (std::size_t i = 0; i < c.count("orbits"); ++i) {
    const double x = CounterRng(c.seed, 0xa5c17 + i).uniform();
    o.seed = c.seed + i;
    const auto r = asclt_report(seq, f, c.count("n"), x, o);
    summary.add({double(i), x, r.ks_distance ? *r.ks_distance : kNaN, r.growth_constant, double(r.hypothesis_ok),
                 double(r.low_n)});
    for (std::size_t j = 0; j < r.grid.size(); ++j) cdf.add({double(i), r.grid[j], r.empirical_cdf[j], r.normal_cdf[j]});
    if (r.ks_distance) ks.push_back(*r.ks_distance);
    hypothesis = hypothesis && r.hypothesis_ok;
    for (const auto& flag : r.flags) rec.warnings.push_back("orbit " + std::to_string(i) + ": " + flag);
  }
  rec.tables.push_back(std::move(summary));
  rec.tables.push_back(std::move(cdf));
  rec.fitted = {{"hypothesis_ok", hypothesis}, {"route", sigma_route_name(o.route)}};
  if (!ks.empty()) {
    std::sort(ks.begin(), ks.end());
    rec.fitted["median_ks"] = ks[ks.size() / 2];
  } else {
    rec.fitted["median_ks"] = nullptr;
  }
}

inline void concentration(const ExperimentConfig& c, const MapSequence& seq, ExperimentRecord& rec,
                          std::size_t threads) {
  Table mgf{"mgf", {"n", "lambda", "mgf", "se", "log_mgf", "ess", "exponent", "stable"}, {}};
  Table tail{"tail", {"n", "t", "prob", "se", "bound"}, {}};
  nlohmann::json per_n = nlohmann::json::array();
  std::vector<double> cs;
  for (std::size_t n : c.counts("n_list")) {
    const auto r = concentration_mgf(seq, Observable::mean_coordinate(n), c.reals("lambda_list"), c.count("m_samples"),
                                     c.seed, threads, c.reals("t_list"));
    for (const auto& row : r.rows) {
      mgf.add({double(n), row.lambda, row.mgf, row.se, row.log_mgf, row.ess, row.exponent, double(row.stable)});
    }
    tail_rows(tail, double(n), r.tail);
    per_n.push_back({{"n", n},
                     {"c_hat", opt(r.c_hat)},
                     {"largest_stable_lambda", opt(r.largest_stable_lambda)},
                     {"tail_c", opt(r.tail.bound_exponent_fit)}});
    if (r.c_hat) cs.push_back(*r.c_hat);
    for (const auto& w : r.warnings) rec.warnings.push_back("n = " + std::to_string(n) + ": " + w);
  }
  rec.tables.push_back(std::move(mgf));
  rec.tables.push_back(std::move(tail));
  rec.fitted = {{"per_n", per_n}};
  if (!cs.empty() && *std::min_element(cs.begin(), cs.end()) > 0.0) {
    rec.fitted["c_hat_ratio"] = *std::max_element(cs.begin(), cs.end()) / *std::min_element(cs.begin(), cs.end());
  }
}

inline void martingale(const ExperimentConfig& c, const MapSequence& seq, ExperimentRecord& rec) {
  std::vector<double> xs(c.count("orbit_samples"));
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = CounterRng(c.seed, i).uniform();
  const auto f = PiecewiseFn::sample([](double x) { return x - 0.5; }, LipschitzFn::kProxyCells);
  Table t{"identity", {"n", "sup_h", "max_residual", "max_defect", "delta_hat"}, {}};
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0, worst = 0.0;
  for (std::size_t n : c.counts("n_list")) {
    const auto d = martingale_decomposition(seq, f, n, xs);
    t.add({double(n), d.sup_h[n], d.max_residual, d.max_defect, d.delta_hat});
    lo = std::min(lo, d.sup_h[n]);
    hi = std::max(hi, d.sup_h[n]);
    worst = std::max(worst, d.max_residual);
  }
  rec.tables.push_back(std::move(t));
  rec.fitted = {{"max_residual", worst}, {"sup_h_min", lo}, {"sup_h_max", hi}};
  if (lo > 0.0) rec.fitted["sup_h_spread"] = (hi - lo) / lo;
}

inline void kp_check(const ExperimentConfig& c, const MapSequence& seq, ExperimentRecord& rec, std::size_t threads) {
  const auto targets = c.reals("x_points");
  Table t{"kp", {"p", "x_p", "formula", "mc_mean", "mc_se", "hits", "z"}, {}};
  double worst = 0.0;
  for (std::size_t p = 1; p <= c.count("p_max"); ++p) {
    const auto k = kp_probe_observable(p + 1);
    const auto mc = binned_conditional_expectation(seq, k, p, targets, c.real("bin_width"), c.count("m_samples"),
                                                   c.seed + p, threads);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const double formula = conditional_expectation_kp(seq, k, p, targets[i]);
      const double z = mc[i].se > 0.0 ? (formula - mc[i].mean) / mc[i].se : kNaN;
      t.add({double(p), targets[i], formula, mc[i].mean, mc[i].se, double(mc[i].hits), z});
      if (std::isnan(z)) {
        rec.warnings.push_back("p = " + std::to_string(p) + ": too few Monte-Carlo hits near x_p");
      } else {
        worst = std::max(worst, std::abs(z));
      }
    }
  }
  rec.tables.push_back(std::move(t));
  rec.fitted = {{"max_abs_z", worst}};
}

}  // namespace scenario

/// Runs one validated config. `threads` only affects speed, never results.
inline ExperimentRecord run_experiment(const ExperimentConfig& c, std::size_t threads = 1) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentRecord rec;
  rec.config = c;
  const auto seq = MapSequence::from_spec(c.sequence);
  const auto& s = c.scenario;
  try {
    if (s == "decay") scenario::decay(c, seq, rec);
    else if (s == "minoration") scenario::minoration(c, seq, rec);
    else if (s == "covering") scenario::covering(c, seq, rec);
    else if (s == "ld_tail") scenario::ld_tail(c, seq, rec, threads);
    else if (s == "empirical_measure") scenario::empirical_measure(c, seq, rec, threads);
    else if (s == "shadowing") scenario::shadowing(c, seq, rec, threads);
    else if (s == "asclt") scenario::asclt(c, seq, rec, threads);
    else if (s == "concentration") scenario::concentration(c, seq, rec, threads);
    else if (s == "martingale") scenario::martingale(c, seq, rec);
    else if (s == "kp_check") scenario::kp_check(c, seq, rec, threads);
    else throw ArgumentError("unknown scenario '" + s + "'");
  } catch (const ResourceError& e) {
    throw Error("resource", "scenario " + s + " (" + seq.description() + "): " + e.what());
  }
  rec.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace seqdyn
