#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "seqdyn/maps.hpp"
#include "seqdyn/transfer.hpp"

using namespace seqdyn;

namespace {

const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

PiecewiseFn sawtooth(std::size_t cells = 1024) {
  return PiecewiseFn::sample([](double x) { return x - 0.5; }, cells);
}

PiecewiseFn random_fn(std::mt19937_64& gen, bool nonnegative) {
  std::uniform_int_distribution<int> count(1, 40);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int k = count(gen);
  std::vector<double> pts;
  for (int i = 0; i < k - 1; ++i) pts.push_back(u(gen));
  auto bp = PiecewiseFn::dedupe(pts);
  std::vector<double> v(bp.size() - 1);
  for (auto& x : v) x = nonnegative ? u(gen) : 2.0 * u(gen) - 1.0;
  return PiecewiseFn(std::move(bp), std::move(v));
}

// int f(x) g(beta x - k) dx summed over the branches of the beta map, splitting
// each branch at f's breakpoints and at the preimages (y + k)/beta of g's.
double duality_oracle(double beta, const PiecewiseFn& f, const PiecewiseFn& g) {
  const auto branches = static_cast<int>(std::ceil(beta));
  double total = 0.0;
  for (int k = 0; k < branches; ++k) {
    const double lo = k / beta;
    const double hi = std::min(1.0, (k + 1) / beta);
    if (lo >= 1.0) break;
    std::vector<double> pts{lo, hi};
    for (double b : f.breakpoints()) {
      if (b > lo && b < hi) pts.push_back(b);
    }
    for (double b : g.breakpoints()) {
      const double x = (b + k) / beta;
      if (x > lo && x < hi) pts.push_back(x);
    }
    std::sort(pts.begin(), pts.end());
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double mid = 0.5 * (pts[i] + pts[i + 1]);
      total += f(mid) * g(beta * mid - k) * (pts[i + 1] - pts[i]);
    }
  }
  return total;
}

// Parry density of the golden-mean beta map: 1 + (1/beta) 1_{[0,1/beta)}, normalized.
double golden_density(double x) {
  const double norm = 1.0 + 1.0 / (kGolden * kGolden);
  return (x < 1.0 / kGolden ? 1.0 + 1.0 / kGolden : 1.0) / norm;
}

}  // namespace

TEST(PiecewiseFn, BvNormExamples) {
  auto n = PiecewiseFn::indicator(0.0, 0.5).bv_norm();
  EXPECT_DOUBLE_EQ(n.variation, 1.0);
  EXPECT_DOUBLE_EQ(n.l1, 0.5);
  EXPECT_DOUBLE_EQ(n.bv, 1.5);
  n = PiecewiseFn::constant(-2.5).bv_norm();
  EXPECT_EQ(n.variation, 0.0);
  EXPECT_EQ(n.l1, 2.5);
  EXPECT_EQ(n.bv, 2.5);
  // 1_[0,1/4) - 1_[1/2,3/4): values 1, 0, -1, 0 on four quarter cells.
  const auto f = PiecewiseFn::indicator(0.0, 0.25) - PiecewiseFn::indicator(0.5, 0.75);
  const std::vector<double> cells{1.0, 0.0, -1.0, 0.0};
  double jumps = 0.0;
  for (std::size_t i = 1; i < cells.size(); ++i) jumps += std::abs(cells[i] - cells[i - 1]);
  n = f.bv_norm();
  EXPECT_DOUBLE_EQ(n.variation, jumps);
  EXPECT_DOUBLE_EQ(n.variation, 3.0);
  EXPECT_DOUBLE_EQ(n.l1, 0.5);
  EXPECT_DOUBLE_EQ(n.bv, 3.5);
}

TEST(PiecewiseFn, InvariantsOnRandomInstances) {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 1000; ++i) {
    const auto f = random_fn(gen, false);
    const auto n = f.bv_norm();
    EXPECT_GE(n.variation, 0.0);
    EXPECT_LE(f.sup_abs(), n.bv + 1e-12);
    double integral = 0.0;
    for (std::size_t c = 0; c < f.cell_count(); ++c) integral += f.values()[c] * f.width(c);
    EXPECT_EQ(f.integral(), integral);
  }
}

TEST(PiecewiseFn, ValidationAndEvaluation) {
  EXPECT_THROW(PiecewiseFn({0.0, 0.5}, {1.0}), ArgumentError);
  EXPECT_THROW(PiecewiseFn({0.0, 0.5, 0.5, 1.0}, {1.0, 2.0, 3.0}), ArgumentError);
  EXPECT_THROW(PiecewiseFn({0.0, 1.0}, {1.0, 2.0}), ArgumentError);
  const auto f = PiecewiseFn::indicator(0.25, 0.5);
  EXPECT_EQ(f(0.25), 1.0);
  EXPECT_EQ(f(0.5), 0.0);
  EXPECT_THROW(f(1.0), DomainError);
}

TEST(PiecewiseFn, ArithmeticAndProduct) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const auto f = random_fn(gen, false);
    const auto g = random_fn(gen, false);
    const auto prod = f * g;
    EXPECT_NEAR(prod.integral(), integrate_product(f, g), 1e-12);
    for (int s = 0; s < 20; ++s) {
      const double x = u(gen);
      EXPECT_NEAR((f + g)(x), f(x) + g(x), 1e-12);
      EXPECT_NEAR(prod(x), f(x) * g(x), 1e-12);
    }
  }
}

TEST(ApplyTransfer, Examples) {
  auto out = apply_transfer(beta_map(2.0), PiecewiseFn::constant(1.0));
  EXPECT_EQ(out.cell_count(), 1u);
  EXPECT_EQ(out.values()[0], 1.0);
  out = apply_transfer(beta_map(2.0), PiecewiseFn::indicator(0.0, 0.5));
  EXPECT_EQ(out.cell_count(), 1u);
  EXPECT_DOUBLE_EQ(out.values()[0], 0.5);
  out = apply_transfer(beta_map(3.0), PiecewiseFn::constant(1.0));
  EXPECT_EQ(out.cell_count(), 1u);
  EXPECT_NEAR(out.values()[0], 1.0, 1e-15);
}

TEST(ApplyTransfer, RejectsSmoothMaps) {
  EXPECT_THROW(apply_transfer(perturbed_doubling_map(0.1), PiecewiseFn::constant(1.0)), UnsupportedError);
}

TEST(ApplyTransfer, CapIsResourceError) {
  EXPECT_THROW(apply_transfer(beta_map(2.0), sawtooth(1024), 100), ResourceError);
}

TEST(ApplyTransfer, MassPositivityDualityLasotaYorke) {
  std::mt19937_64 gen(13);
  for (double beta : {1.5, 2.0, 2.5, 3.0, kGolden, 1.9, 4.3}) {
    const auto m = beta_map(beta);
    const auto ly = lasota_yorke_constants(m);
    for (int i = 0; i < 1000; ++i) {
      const auto f = random_fn(gen, i % 2 == 0);
      const auto pf = apply_transfer(m, f);
      EXPECT_NEAR(pf.integral(), f.integral(), 1e-12) << beta;
      if (i % 2 == 0) {
        EXPECT_GE(pf.min(), 0.0);
      }
      EXPECT_LE(pf.variation(), ly.contraction * f.variation() + ly.additive * f.l1() + 1e-12) << beta;
      if (i % 10 == 0) {
        const auto g = random_fn(gen, false);
        EXPECT_NEAR(integrate_product(pf, g), duality_oracle(beta, f, g), 1e-10) << beta;
        EXPECT_NEAR(integrate_product(f, compose(g, m)), duality_oracle(beta, f, g), 1e-10) << beta;
      }
    }
  }
}

TEST(ApplyTransfer, PreimageSumOracle) {
  // P f(x) = sum over preimages of f(y) / |T'(y)|, pointwise.
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double beta : {2.5, kGolden, 3.7}) {
    const auto m = beta_map(beta);
    const auto f = random_fn(gen, false);
    const auto pf = apply_transfer(m, f);
    for (int i = 0; i < 500; ++i) {
      const double x = u(gen);
      double s = 0.0;
      for (const auto& p : m.preimages(x)) s += f(p.point) / p.abs_derivative;
      // Skip points within rounding of a breakpoint of either side.
      bool near = false;
      for (double b : pf.breakpoints()) near = near || std::abs(b - x) < 1e-9;
      if (!near) {
        EXPECT_NEAR(pf(x), s, 1e-12);
      }
    }
  }
}

TEST(Ulam, Examples) {
  auto g = apply_transfer_ulam(beta_map(2.0), GridFn(std::vector<double>(1024, 1.0)));
  for (double v : g.values()) EXPECT_NEAR(v, 1.0, 1e-12);
  g = apply_transfer_ulam(beta_map(2.0), GridFn::project(PiecewiseFn::indicator(0.0, 0.5), 1024));
  for (double v : g.values()) EXPECT_NEAR(v, 0.5, 1e-12);
  EXPECT_THROW(GridFn(std::vector<double>(1, 1.0)), ArgumentError);
  EXPECT_THROW(GridFn(std::vector<double>(6, 1.0)), ArgumentError);
}

TEST(Ulam, GoldenMeanFixedDensity) {
  const auto m = beta_map(kGolden);
  GridFn g(std::vector<double>(1 << 14, 1.0));
  GridFn prev = g;
  for (int i = 0; i < 100; ++i) {
    prev = g;
    g = apply_transfer_ulam(m, g);
  }
  double diff = 0.0;
  for (std::size_t i = 0; i < g.bins(); ++i) diff = std::max(diff, std::abs(g.values()[i] - prev.values()[i]));
  EXPECT_LT(diff, 1e-6);
  EXPECT_NEAR(g.integral(), 1.0, 1e-12);
  // Ulam smears the jump at 1/beta into the bins along its orbit, so compare in L1.
  double l1 = 0.0;
  for (std::size_t i = 0; i < g.bins(); ++i) {
    l1 += std::abs(g.values()[i] - golden_density((i + 0.5) / g.bins())) * g.bin_width();
  }
  EXPECT_LT(l1, 1e-3);
}

TEST(Ulam, MassAndPositivityOnSmoothMap) {
  const auto m = perturbed_doubling_map(0.3);
  std::mt19937_64 gen(2);
  for (int i = 0; i < 20; ++i) {
    const auto f = GridFn::project(random_fn(gen, true), 1 << 12);
    const auto pf = apply_transfer_ulam(m, f);
    EXPECT_NEAR(pf.integral(), f.integral(), 1e-12);
    for (double v : pf.values()) EXPECT_GE(v, 0.0);
  }
}

TEST(Ulam, ProjectionPreservesIntegral) {
  std::mt19937_64 gen(4);
  for (int i = 0; i < 200; ++i) {
    const auto f = random_fn(gen, false);
    EXPECT_NEAR(GridFn::project(f, 256).integral(), f.integral(), 1e-13);
  }
}

TEST(Ulam, AgreesWithExactPathOnBinAlignedInput) {
  const auto f = sawtooth(64) + 0.5;
  const auto exact = apply_transfer(beta_map(2.0), f);
  const auto grid = apply_transfer_ulam(beta_map(2.0), GridFn::project(f, 1024));
  for (std::size_t i = 0; i < grid.bins(); ++i) {
    EXPECT_NEAR(grid.values()[i], exact((i + 0.5) / grid.bins()), 1e-12);
  }
}

TEST(Pushforward, Examples) {
  const auto one = pushforward_density(MapSequence::constant_beta(2.0), 37);
  EXPECT_EQ(one.cell_count(), 1u);
  EXPECT_EQ(one.values()[0], 1.0);
  const auto zero = pushforward_density(MapSequence::random_beta(2.0, 0.1, 1), 0);
  EXPECT_EQ(zero.values(), std::vector<double>{1.0});
  const auto golden = pushforward_density(MapSequence::constant_beta(kGolden), 50);
  ASSERT_EQ(golden.cell_count(), 2u);
  EXPECT_NEAR(golden.breakpoints()[1], 1.0 / kGolden, 1e-12);
  EXPECT_NEAR(golden.values()[0], golden_density(0.1), 1e-8);
  EXPECT_NEAR(golden.values()[1], golden_density(0.9), 1e-8);
  EXPECT_GT(golden.min(), 0.0);
  EXPECT_NEAR(golden.integral(), 1.0, 1e-12);
}

TEST(Pushforward, SmoothRoutesThroughGrid) {
  const auto pf = pushforward_densities(MapSequence::constant(perturbed_doubling_map(0.2)), 5);
  ASSERT_TRUE(pf.ulam_from.has_value());
  EXPECT_EQ(*pf.ulam_from, 1u);
  for (const auto& d : pf.densities) EXPECT_NEAR(d.integral(), 1.0, 1e-12);
}

TEST(Pushforward, CapFallsBackToGrid) {
  TransferOptions opts;
  opts.cap = 8;
  const auto pf = pushforward_densities(MapSequence::random_beta(2.0, 0.1, 3), 30, opts);
  ASSERT_TRUE(pf.ulam_from.has_value());
  const auto exact = pushforward_density(MapSequence::random_beta(2.0, 0.1, 3), 30);
  EXPECT_NEAR(pf.densities.back().integral(), 1.0, 1e-12);
  // Ulam projection is close to the exact density in L1.
  EXPECT_LT((pf.densities.back() - exact).l1(), 1e-2);
}

TEST(Pushforward, IntegerBetaLebesgueInvariance) {
  for (double beta : {2.0, 3.0, 5.0}) {
    for (const auto& rho : pushforward_densities(MapSequence::constant_beta(beta), 100).densities) {
      EXPECT_LE((rho - 1.0).sup_abs(), 1e-12);
    }
  }
}

TEST(Minoration, Examples) {
  auto r = minoration_check(MapSequence::constant_beta(2.0), 100);
  EXPECT_EQ(r.delta_hat, 1.0);
  EXPECT_EQ(r.per_n_minima.size(), 100u);
  r = minoration_check(MapSequence::constant_beta(3.0), 100);
  EXPECT_NEAR(r.delta_hat, 1.0, 1e-12);
  r = minoration_check(MapSequence::random_beta(2.0, 0.1, 1234), 200);
  EXPECT_GT(r.delta_hat, 0.0);
  EXPECT_LE(r.delta_hat, 1.0);
  EXPECT_EQ(r.delta_hat, *std::min_element(r.per_n_minima.begin(), r.per_n_minima.end()));
  ASSERT_TRUE(r.prediction.has_value());
  RecordProperty("random_beta_delta_hat", std::to_string(r.delta_hat));
  EXPECT_THROW(minoration_check(MapSequence::constant_beta(2.0), 0), ArgumentError);
}

TEST(Decay, ClosedFormOfSawtoothProxy) {
  // P(x - 1/2) = (x - 1/2)/2 for the doubling map maps the 2^10-cell midpoint
  // proxy onto the 2^(10-n)-cell proxy of (x - 1/2) 2^-n, whose variation is
  // (1 - 2^(n-10)) 2^-n and whose L1 norm is 2^-n / 4 while at least two cells remain.
  const auto est = decay_rate(MapSequence::constant_beta(2.0), sawtooth(), 20);
  ASSERT_EQ(est.rows.size(), 21u);
  for (std::size_t n = 0; n <= 9; ++n) {
    const double scale = std::ldexp(1.0, -static_cast<int>(n));
    EXPECT_NEAR(est.rows[n].variation, (1.0 - std::ldexp(1.0, static_cast<int>(n) - 10)) * scale, 1e-14);
    EXPECT_NEAR(est.rows[n].l1, 0.25 * scale, 1e-14);
  }
  for (std::size_t n = 10; n <= 20; ++n) EXPECT_EQ(est.rows[n].bv, 0.0);
  ASSERT_TRUE(est.theta_hat.has_value());
  EXPECT_EQ(est.window_first, 2u);
  EXPECT_EQ(est.fitted_points, 8u);  // n = 2..9; zero norms are excluded
}

TEST(Decay, RatiosApproachOneHalf) {
  // On a fine proxy the step ratios sit within 2% of 1/2 until the grid is exhausted.
  const auto est = decay_rate(MapSequence::constant_beta(2.0), sawtooth(1 << 16), 12);
  for (std::size_t n = 2; n <= 10; ++n) EXPECT_NEAR(est.rows[n + 1].bv / est.rows[n].bv, 0.5, 0.01) << n;
  const auto coarse = decay_rate(MapSequence::constant_beta(2.0), sawtooth(), 6);
  for (std::size_t n = 2; n < 5; ++n) EXPECT_NEAR(coarse.rows[n + 1].bv / coarse.rows[n].bv, 0.5, 0.01) << n;
}

TEST(Decay, TripleMap) {
  const auto est = decay_rate(MapSequence::constant_beta(3.0), sawtooth(), 20);
  ASSERT_TRUE(est.theta_hat.has_value());
  RecordProperty("theta_beta3", std::to_string(*est.theta_hat));
  EXPECT_GT(*est.theta_hat, 0.0);
  EXPECT_LT(*est.theta_hat, 0.5);
}

TEST(Decay, DegenerateAndErrors) {
  const auto est = decay_rate(MapSequence::constant_beta(2.0), PiecewiseFn::constant(0.0), 10);
  EXPECT_TRUE(est.degenerate);
  EXPECT_FALSE(est.theta_hat.has_value());
  for (double r : est.rates()) EXPECT_EQ(r, 0.0);
  EXPECT_THROW(decay_rate(MapSequence::constant_beta(2.0), PiecewiseFn::constant(1.0), 10), ArgumentError);
  EXPECT_THROW(decay_rate(MapSequence::constant_beta(2.0), sawtooth(), 3), ArgumentError);
}

TEST(Correlation, DoublingClosedForm) {
  const auto f = sawtooth();
  const auto seq = MapSequence::constant_beta(2.0);
  for (std::size_t k = 0; k <= 8; ++k) {
    EXPECT_NEAR(correlation(seq, f, f, 0, k), std::ldexp(1.0 / 12.0, -static_cast<int>(k)), 1e-4) << k;
  }
}

TEST(Correlation, DiagonalNonnegativeAndDuality) {
  std::mt19937_64 gen(6);
  const auto seq = MapSequence::random_beta(2.0, 0.1, 77);
  for (int i = 0; i < 20; ++i) {
    const auto f = random_fn(gen, false);
    const auto g = random_fn(gen, false);
    const std::size_t j = i % 5;
    EXPECT_GE(correlation(seq, f, f, j, j), 0.0);
    const std::size_t l = j + 3;
    const auto rho = pushforward_density(seq, l);
    EXPECT_NEAR(correlation(seq, PiecewiseFn::constant(1.0), g, j, l), integrate_product(g, rho), 1e-12);
    // Direct oracle: int (f o T^j)(g o T^l) by composing both sides down to time 0.
    PiecewiseFn fj = f, gl = g;
    for (std::size_t k = j; k >= 1; --k) fj = compose(fj, seq.map(k));
    for (std::size_t k = l; k >= 1; --k) gl = compose(gl, seq.map(k));
    EXPECT_NEAR(correlation(seq, f, g, j, l), integrate_product(fj, gl), 1e-10);
  }
  EXPECT_THROW(correlation(seq, PiecewiseFn(), PiecewiseFn(), 3, 2), ArgumentError);
}

TEST(ErgodicSumVariance, Examples) {
  const auto seq = MapSequence::constant_beta(2.0);
  EXPECT_NEAR(ergodic_sum_variance(seq, sawtooth(), 2), 0.25, 1e-3);
  EXPECT_NEAR(ergodic_sum_variance(seq, PiecewiseFn::constant(3.0), 7), 0.0, 1e-15);
  const auto f = sawtooth();
  const double var = integrate_product(f, f) - std::pow(f.integral(), 2);
  EXPECT_NEAR(ergodic_sum_variance(MapSequence::random_beta(2.0, 0.1, 2), f, 1), var, 1e-15);
}

TEST(ErgodicSumVariance, MatchesDoubleSumOfCovariances) {
  const auto seq = MapSequence::random_beta(2.0, 0.1, 19);
  const auto f = PiecewiseFn::sample([](double x) { return std::sin(6.0 * x); }, 256);
  const std::size_t n = 7;
  double brute = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) brute += covariance(seq, f, f, std::min(j, k), std::max(j, k));
  }
  const auto profile = variance_profile(seq, f, n);
  EXPECT_NEAR(profile.back(), brute, 1e-12);
  EXPECT_GE(profile.back(), -1e-10);
  // Truncating at a lag beyond n changes nothing; truncating at lag 0 keeps only the diagonal.
  EXPECT_NEAR(variance_profile(seq, f, n, {}, n + 1).back(), brute, 1e-12);
  double diag = 0.0;
  for (std::size_t j = 0; j < n; ++j) diag += covariance(seq, f, f, j, j);
  EXPECT_NEAR(variance_profile(seq, f, n, {}, 0).back(), diag, 1e-12);
}

TEST(ErgodicSumVariance, MonteCarloOracle) {
  const auto seq = MapSequence::constant_beta(2.0);
  const auto f = sawtooth();
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t n : {8u, 16u}) {
    const int m = 20000;
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    std::vector<double> sums(m);
    for (int i = 0; i < m; ++i) {
      const auto xs = orbit(seq, u(gen), n - 1);
      double s = 0.0;
      for (double x : xs) s += f(x);
      sums[i] = s;
      s1 += s;
    }
    const double mean = s1 / m;
    for (double s : sums) {
      s2 += (s - mean) * (s - mean);
      s4 += std::pow(s - mean, 4);
    }
    const double var = s2 / (m - 1);
    const double se = std::sqrt((s4 / m - var * var) / m);
    EXPECT_NEAR(ergodic_sum_variance(seq, f, n), var, 3.0 * se) << n;
  }
}

TEST(Martingale, ConstantObservable) {
  const auto d = martingale_decomposition(MapSequence::random_beta(2.0, 0.1, 5), PiecewiseFn::constant(2.0), 10,
                                          {0.1, 0.5, 0.9});
  for (const auto& h : d.h) EXPECT_LE(h.sup_abs(), 1e-14);
  for (const auto& u : d.u_values) {
    for (double v : u) EXPECT_LE(std::abs(v), 1e-14);
  }
  EXPECT_LE(d.max_residual, 1e-14);
}

TEST(Martingale, IdentityAndReverseMartingaleProperty) {
  std::mt19937_64 gen(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> xs(100);
  for (auto& x : xs) x = u(gen);
  for (const auto& seq : {MapSequence::constant_beta(2.0), MapSequence::random_beta(2.0, 0.1, 9)}) {
    const auto d = martingale_decomposition(seq, sawtooth(), 10, xs);
    EXPECT_LT(d.max_residual, 1e-8) << seq.description();
    EXPECT_LT(d.max_defect, 1e-10) << seq.description();
    EXPECT_EQ(d.h.front().sup_abs(), 0.0);
    EXPECT_EQ(d.residual.size(), 100u);
  }
}

TEST(Martingale, DoublingHasClosedFormH) {
  // For the doubling map h_n = sum_{j=1..n} P^j f, and P^j of the proxy is the
  // proxy of (x - 1/2) 2^-j on 2^(10-j) cells: sup |h_n| = sum_j 2^-j (1 - 2^(j-10)) / 2.
  const auto d = martingale_decomposition(MapSequence::constant_beta(2.0), sawtooth(), 50, {0.3});
  for (std::size_t n = 1; n <= 50; ++n) {
    double expect = 0.0;
    for (std::size_t j = 1; j <= std::min<std::size_t>(n, 9); ++j) {
      expect += std::ldexp(1.0, -static_cast<int>(j)) * (1.0 - std::ldexp(1.0, static_cast<int>(j) - 10)) / 2.0;
    }
    EXPECT_NEAR(d.sup_h[n], expect, 1e-12) << n;
  }
}

TEST(Martingale, MinorationFailure) {
  // Both branches land in [0, 3/4): nothing has a preimage in (3/4, 1).
  std::vector<Branch> br{Branch::affine(0.0, 0.5, 1.5, 0.0), Branch::affine(0.5, 1.0, 1.5, -0.75)};
  const auto seq = MapSequence::constant(IntervalMap(br, "squeezed"));
  EXPECT_THROW(martingale_decomposition(seq, sawtooth(), 3, {0.2}), MinorationError);
  EXPECT_THROW(conditional_expectation_kp(seq, Observable::coordinate(2, 0), 1, 0.9), MinorationError);
}

TEST(Kp, Examples) {
  const auto seq = MapSequence::constant_beta(2.0);
  EXPECT_NEAR(conditional_expectation_kp(seq, Observable::coordinate(2, 0), 1, 0.5), 0.5, 1e-15);
  EXPECT_NEAR(conditional_expectation_kp(MapSequence::random_beta(2.0, 0.2, 4), Observable::constant(5, 1.7), 3, 0.42),
              1.7, 1e-12);
  for (double x : {0.0, 0.13, 0.77}) {
    EXPECT_NEAR(conditional_expectation_kp(seq, Observable::coordinate(2, 1), 1, x), x, 1e-15);
  }
  EXPECT_THROW(conditional_expectation_kp(seq, Observable::coordinate(2, 0), 0, 0.5), ArgumentError);
  EXPECT_THROW(conditional_expectation_kp(seq, Observable::coordinate(2, 0), 12, 0.5, 100), ResourceError);
}

TEST(Kp, MatchesBinnedMonteCarlo) {
  // Oracle: uniform y, keep those with T_1^p y within eps/2 of x_p, average K.
  // K reads x_0 .. x_p so the bin only blurs the conditioning variable itself.
  std::mt19937_64 gen(71);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double beta : {2.0, 2.5}) {
    const auto seq = MapSequence::constant_beta(beta);
    for (std::size_t p = 1; p <= 4; ++p) {
      const std::size_t arity = p + 1;
      const Observable k(
          arity,
          [](std::span<const double> x) {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) s += std::cos(3.0 * x[i] + static_cast<double>(i));
            return s;
          },
          std::vector<double>(arity, 3.0), "cos-sum");
      const double xp = 0.3;
      const double eps = 2e-3;
      double s = 0.0, s2 = 0.0;
      std::size_t hits = 0;
      for (int i = 0; i < 4000000 && hits < 4000; ++i) {
        const auto xs = orbit(seq, u(gen), p);
        if (std::abs(xs[p] - xp) > eps / 2) continue;
        const double v = k(xs);
        s += v;
        s2 += v * v;
        ++hits;
      }
      ASSERT_GT(hits, 1000u);
      const double mean = s / hits;
      const double se = std::sqrt((s2 / hits - mean * mean) / hits);
      EXPECT_NEAR(conditional_expectation_kp(seq, k, p, xp), mean, 3.0 * se) << beta << " p=" << p;
    }
  }
}
