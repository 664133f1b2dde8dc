#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "seqdyn/maps.hpp"

using namespace seqdyn;

namespace {

const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

std::vector<IntervalMap> sample_maps() {
  return {beta_map(1.5), beta_map(2.0), beta_map(2.5), beta_map(3.0), beta_map(kGolden), beta_map(1.9),
          perturbed_doubling_map(0.2)};
}

// Slope of T_1^n on a cell from two interior orbit evaluations.
double numeric_slope(const MapSequence& seq, std::size_t n, double a, double b) {
  const double x0 = a + 0.25 * (b - a);
  const double x1 = a + 0.75 * (b - a);
  const double y0 = orbit(seq, x0, n).back();
  const double y1 = orbit(seq, x1, n).back();
  return (y1 - y0) / (x1 - x0);
}

}  // namespace

TEST(EvalMap, Examples) {
  EXPECT_DOUBLE_EQ(beta_map(2.0)(0.3), 0.6);
  EXPECT_NEAR(beta_map(1.5)(0.8), 0.2, 1e-15);
  EXPECT_EQ(beta_map(2.0)(0.5), 0.0);
}

TEST(EvalMap, OutsideDomainThrows) {
  const auto m = beta_map(2.0);
  EXPECT_THROW(m(1.0), DomainError);
  EXPECT_THROW(m(-0.1), DomainError);
  EXPECT_THROW(m(std::nan("")), DomainError);
}

TEST(EvalMap, NonIntegerBetaLastBranch) {
  const auto m = beta_map(2.5);
  ASSERT_EQ(m.branches().size(), 3u);
  EXPECT_NEAR(m(0.9), 0.25, 1e-15);
  EXPECT_EQ(m.label(), "beta:2.5");
}

TEST(Branch, RejectsNonExpanding) {
  EXPECT_THROW(Branch::affine(0.0, 1.0, 1.0, 0.0), ArgumentError);
  EXPECT_THROW(Branch::affine(0.0, 1.0, 0.5, 0.0), ArgumentError);
  EXPECT_THROW(Branch::affine(0.2, 0.1, 2.0, 0.0), ArgumentError);
  EXPECT_THROW(Branch::affine(0.0, 1.0, 2.0, 0.0), ArgumentError);  // image leaves [0,1]
  EXPECT_THROW(beta_map(1.0), ArgumentError);
}

TEST(IntervalMapCtor, RejectsGapsAndOverlaps) {
  std::vector<Branch> gap{Branch::affine(0.0, 0.4, 2.0, 0.0), Branch::affine(0.5, 1.0, 2.0, -1.0)};
  EXPECT_THROW(IntervalMap(gap, "gap"), ArgumentError);
  std::vector<Branch> two{Branch::affine(0.0, 0.5, 2.0, 0.0), Branch::affine(0.5, 1.0, 2.0, -1.0)};
  EXPECT_THROW(IntervalMap(two, "capped", 1), ResourceError);
}

TEST(IntervalMapCtor, DecreasingBranches) {
  // Tent-like full map with a decreasing second branch.
  std::vector<Branch> br{Branch::affine(0.0, 0.5, 2.0, 0.0), Branch::affine(0.5, 1.0, -2.0, 2.0)};
  IntervalMap tent(br, "tent");
  EXPECT_DOUBLE_EQ(tent(0.75), 0.5);
  const auto pre = tent.preimages(0.5);
  ASSERT_EQ(pre.size(), 2u);
  EXPECT_DOUBLE_EQ(pre[0].point, 0.25);
  EXPECT_DOUBLE_EQ(pre[1].point, 0.75);
}

TEST(Orbit, Examples) {
  const auto o = orbit(MapSequence::constant_beta(2.0), 0.3, 2);
  ASSERT_EQ(o.size(), 3u);
  EXPECT_DOUBLE_EQ(o[1], 0.6);
  EXPECT_NEAR(o[2], 0.2, 1e-15);
  EXPECT_EQ(orbit(MapSequence::random_beta(2.0, 0.1, 7), 0.42, 0), std::vector<double>{0.42});
  const auto l = orbit(MapSequence::explicit_beta({2.0, 3.0}), 0.1, 2);
  EXPECT_NEAR(l[1], 0.2, 1e-15);
  EXPECT_NEAR(l[2], 0.6, 1e-15);
}

TEST(Orbit, ElementKIsRepeatedEvaluation) {
  const auto seq = MapSequence::random_beta(2.0, 0.1, 11);
  const auto o = orbit(seq, 0.123, 30);
  double x = 0.123;
  for (std::size_t k = 1; k <= 30; ++k) {
    x = seq.map(k)(x);
    EXPECT_EQ(o[k], x);
  }
}

TEST(Preimages, Examples) {
  auto p = beta_map(2.0).preimages(0.0);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_DOUBLE_EQ(p[0].point, 0.0);
  EXPECT_DOUBLE_EQ(p[1].point, 0.5);
  EXPECT_DOUBLE_EQ(p[0].abs_derivative, 2.0);

  p = beta_map(1.5).preimages(0.9);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_NEAR(p[0].point, 0.6, 1e-15);
  EXPECT_DOUBLE_EQ(p[0].abs_derivative, 1.5);

  p = beta_map(3.0).preimages(0.3);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_NEAR(p[0].point, 0.1, 1e-15);
  EXPECT_NEAR(p[1].point, 1.3 / 3.0, 1e-15);
  EXPECT_NEAR(p[2].point, 2.3 / 3.0, 1e-15);
}

TEST(Preimages, RoundTripAndCompleteness) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& m : sample_maps()) {
    for (int i = 0; i < 1000; ++i) {
      const double x = u(gen);
      const auto pre = m.preimages(x);
      // Oracle: count branches whose image (closed form from endpoint values) contains x.
      std::size_t expected = 0;
      for (const auto& b : m.branches()) {
        const double lo = std::min(b.value(b.lo()), b.value(b.hi()));
        const double hi = std::max(b.value(b.lo()), b.value(b.hi()));
        if (x >= lo && x < hi) ++expected;
      }
      ASSERT_EQ(pre.size(), expected) << m.label() << " x=" << x;
      for (const auto& y : pre) {
        EXPECT_NEAR(m(y.point), x, 1e-12) << m.label();
        EXPECT_NEAR(y.abs_derivative, std::abs(m.derivative(y.point)), 1e-12);
      }
    }
  }
}

TEST(Sequence, Reproducible) {
  const auto a = MapSequence::random_beta(2.0, 0.1, 42);
  const auto b = MapSequence::random_beta(2.0, 0.1, 42);
  const auto c = MapSequence::random_beta(2.0, 0.1, 43);
  bool differs = false;
  for (std::size_t k = 1; k <= 50; ++k) {
    EXPECT_EQ(a.map(k).label(), b.map(k).label());
    // Order of generation does not matter.
    EXPECT_EQ(a.map(51 - k).label(), b.map(51 - k).label());
    const double beta = MapSequence::random_beta_value(2.0, 0.1, 42, k);
    EXPECT_GE(beta, 1.9);
    EXPECT_LE(beta, 2.1);
    differs = differs || a.map(k).label() != c.map(k).label();
  }
  EXPECT_TRUE(differs);
}

TEST(Sequence, PeriodicAndHorizon) {
  const auto p = MapSequence::periodic_beta({2.0, 3.0});
  EXPECT_EQ(p.map(1).label(), "beta:2");
  EXPECT_EQ(p.map(4).label(), "beta:3");
  const auto e = MapSequence::explicit_beta({2.0, 3.0});
  EXPECT_EQ(e.length(), std::optional<std::size_t>(2));
  EXPECT_THROW(e.map(3), ArgumentError);
  EXPECT_THROW(e.map(0), ArgumentError);
}

TEST(Sequence, ClassBoundsEnforced) {
  ClassBounds tight;
  tight.min_expansion = 2.2;
  const auto s = MapSequence::constant_beta(2.0).with_bounds(tight);
  EXPECT_THROW(s.map(1), ArgumentError);
  ClassBounds flat;
  flat.max_second_derivative = 0.5;
  EXPECT_THROW(MapSequence::constant(perturbed_doubling_map(0.2)).with_bounds(flat).map(1), ArgumentError);
  ClassBounds few;
  few.max_branches = 2;
  EXPECT_THROW(MapSequence::constant_beta(3.0).with_bounds(few).map(1), ResourceError);
}

TEST(Sequence, SpecRoundTrip) {
  SequenceSpec s;
  s.kind = SequenceSpec::Kind::random_beta;
  s.center = 2.0;
  s.radius = 0.1;
  s.seed = 9;
  nlohmann::json j = s;
  std::vector<std::string> problems;
  const auto back = parse_sequence_spec(j, problems);
  EXPECT_TRUE(problems.empty());
  EXPECT_EQ(MapSequence::from_spec(back).map(5).label(), MapSequence::random_beta(2.0, 0.1, 9).map(5).label());
}

TEST(Sequence, SpecCollectsEveryProblem) {
  std::vector<std::string> problems;
  parse_sequence_spec(nlohmann::json{{"kind", "periodic"}, {"betas", {2.0, "x", 0.5}}}, problems);
  EXPECT_EQ(problems.size(), 2u);
  problems.clear();
  parse_sequence_spec(nlohmann::json{{"kind", "random_beta"}}, problems);
  EXPECT_GE(problems.size(), 3u);
  problems.clear();
  parse_sequence_spec(nlohmann::json{{"kind", "bogus"}}, problems);
  EXPECT_EQ(problems.size(), 1u);
}

TEST(CompositionPartition, DyadicOracle) {
  const auto seq = MapSequence::constant_beta(2.0);
  for (std::size_t n = 1; n <= 12; ++n) {
    const auto p = composition_partition(seq, 1, n);
    const std::size_t cells = std::size_t{1} << n;
    ASSERT_EQ(p.cell_count(), cells);
    for (std::size_t i = 0; i <= cells; ++i) {
      EXPECT_NEAR(p.breakpoints[i], static_cast<double>(i) / static_cast<double>(cells), 1e-15);
    }
  }
}

TEST(CompositionPartition, SingleMapIsBranchPartition) {
  for (const auto& m : sample_maps()) {
    const auto p = composition_partition(MapSequence::constant(m), 1, 1);
    ASSERT_EQ(p.cell_count(), m.branches().size());
    for (std::size_t i = 0; i < m.branches().size(); ++i) EXPECT_DOUBLE_EQ(p.breakpoints[i], m.branches()[i].lo());
  }
}

TEST(CompositionPartition, MixedTwoThree) {
  const auto p = composition_partition(MapSequence::explicit_beta({2.0, 3.0}), 1, 2);
  ASSERT_EQ(p.cell_count(), 6u);
  for (std::size_t i = 0; i <= 6; ++i) EXPECT_NEAR(p.breakpoints[i], i / 6.0, 1e-15);
  EXPECT_EQ(p.provenance(), "T_1^2");
}

TEST(CompositionPartition, CellsAreMonotoneAndSmall) {
  const std::vector<MapSequence> seqs{MapSequence::random_beta(2.0, 0.1, 5), MapSequence::constant_beta(kGolden),
                                      MapSequence::periodic_beta({1.5, 2.5}),
                                      MapSequence::constant(perturbed_doubling_map(0.2))};
  const std::vector<double> lambdas{1.9, kGolden, 1.5, 1.6};
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    const std::size_t n = 8;
    const auto p = composition_partition(seqs[s], 1, n);
    EXPECT_LE(p.max_width(), std::pow(lambdas[s], -static_cast<double>(n)) + 1e-12) << seqs[s].description();
    // Oracle: along each cell the itinerary (branch at every step) is constant.
    for (std::size_t c = 0; c < p.cell_count(); ++c) {
      const double a = p.breakpoints[c], b = p.breakpoints[c + 1];
      if (b - a < 1e-9) continue;
      std::vector<std::size_t> first;
      for (double frac : {0.01, 0.5, 0.99}) {
        double x = a + frac * (b - a);
        std::vector<std::size_t> it;
        for (std::size_t k = 1; k <= n; ++k) {
          const auto m = seqs[s].map(k);
          it.push_back(m.branch_index(x));
          x = m(x);
        }
        if (first.empty()) {
          first = it;
        } else {
          EXPECT_EQ(it, first) << seqs[s].description() << " cell " << c;
        }
      }
    }
  }
}

TEST(CompositionPartition, CapIsResourceError) {
  try {
    composition_partition(MapSequence::constant_beta(3.0), 1, 8, 1000);
    FAIL() << "expected a resource error";
  } catch (const ResourceError& e) {
    EXPECT_EQ(e.cap(), 1000u);
    EXPECT_NE(std::string(e.what()).find("1000"), std::string::npos);
  }
  EXPECT_THROW(composition_partition(MapSequence::constant_beta(2.0), 2, 1), ArgumentError);
}

TEST(LasotaYorke, Examples) {
  auto ly = lasota_yorke_constants(beta_map(3.0));
  EXPECT_DOUBLE_EQ(ly.contraction, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(ly.additive, 2.0);
  ly = lasota_yorke_constants(beta_map(2.0));
  EXPECT_DOUBLE_EQ(ly.contraction, 1.0);
  EXPECT_DOUBLE_EQ(ly.additive, 2.0);
  ly = lasota_yorke_constants(beta_map(2.5));
  EXPECT_DOUBLE_EQ(ly.contraction, 0.8);
  EXPECT_NEAR(ly.additive, 4.0, 1e-12);
}

TEST(LasotaYorke, ContractionIsTwoOverBeta) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(1.05, 6.0);
  for (int i = 0; i < 200; ++i) {
    const double beta = u(gen);
    EXPECT_EQ(lasota_yorke_constants(beta_map(beta)).contraction, 2.0 / beta);
  }
}

TEST(LasotaYorke, SmoothFormula) {
  const double eps = 0.2;
  const auto ly = lasota_yorke_constants(perturbed_doubling_map(eps));
  const double lam = 2.0 * (1.0 - eps);
  EXPECT_DOUBLE_EQ(ly.contraction, 2.0 / lam);
  EXPECT_NEAR(ly.additive, 8.0 * eps / (lam * lam) + 2.0 * (1.0 / lam) / 0.5, 1e-12);
}

TEST(LasotaYorke, CompositionOfAffine) {
  // T = beta 2 then beta 3: six cells of width 1/6, slope 6.
  const auto ly = composition_lasota_yorke(MapSequence::explicit_beta({2.0, 3.0}), 1, 2);
  EXPECT_DOUBLE_EQ(ly.contraction, 2.0 / 6.0);
  EXPECT_NEAR(ly.additive, 2.0, 1e-9);
}

TEST(Distortion, AffineIsZero) {
  EXPECT_EQ(distortion_bound(MapSequence::random_beta(2.0, 0.1, 1), 10, 100), 0.0);
  EXPECT_EQ(distortion_bound(MapSequence::explicit_beta({2.0, 3.0}), 1, 10), 0.0);
  EXPECT_THROW(distortion_bound(MapSequence::constant_beta(2.0), 1, 0), ArgumentError);
}

TEST(Distortion, SmoothSingleMapBound) {
  const double eps = 0.3;
  const auto seq = MapSequence::constant(perturbed_doubling_map(eps));
  const double bound = 8.0 * eps / std::pow(2.0 * (1.0 - eps), 2);
  const double d = distortion_bound(seq, 1, 5000, 17);
  EXPECT_GT(d, 0.0);
  EXPECT_LE(d, bound * (1.0 + 1e-9));
  // Bounded along compositions too: stays of the same order.
  const double d6 = distortion_bound(seq, 6, 5000, 17);
  // Chain-rule bound, times a bounded-distortion factor of at most 2 between x and the mean-value points.
  EXPECT_LE(d6, 2.0 * bound / (1.0 - 1.0 / (2.0 * (1.0 - eps))));
}

TEST(InverseDerivativeSums, Examples) {
  for (std::size_t n = 1; n <= 20; ++n) {
    const auto s = inverse_derivative_sums(MapSequence::constant_beta(2.0), n);
    EXPECT_NEAR(s.sup_sum, 1.0, 1e-15 * n + 1e-15);
    EXPECT_EQ(s.var_sum, 0.0);
    EXPECT_EQ(s.cell_count, std::ldexp(1.0, static_cast<int>(n)));
  }
  auto s = inverse_derivative_sums(MapSequence::constant_beta(3.0), 2);
  EXPECT_NEAR(s.sup_sum, 1.0, 1e-15);
  EXPECT_EQ(s.cell_count, 9.0);
  s = inverse_derivative_sums(MapSequence::explicit_beta({2.0, 3.0}), 2);
  EXPECT_NEAR(s.sup_sum, 1.0, 1e-15);
  EXPECT_EQ(s.cell_count, 6.0);
}

TEST(InverseDerivativeSums, GroupedMatchesEnumeratedCells) {
  // Oracle: enumerate the partition and measure each cell's slope numerically.
  for (const auto& seq : {MapSequence::constant_beta(2.5), MapSequence::random_beta(2.0, 0.1, 3),
                          MapSequence::periodic_beta({1.5, 2.7})}) {
    const std::size_t n = 8;
    const auto p = composition_partition(seq, 1, n);
    double oracle = 0.0;
    for (std::size_t c = 0; c < p.cell_count(); ++c) {
      const double a = p.breakpoints[c], b = p.breakpoints[c + 1];
      double slope = 1.0;
      double x = 0.5 * (a + b);
      for (std::size_t k = 1; k <= n; ++k) {
        const auto m = seq.map(k);
        slope *= m.derivative(x);
        x = m(x);
      }
      oracle += 1.0 / std::abs(slope);
      EXPECT_NEAR(std::abs(numeric_slope(seq, n, a, b)), std::abs(slope), 1e-6 * std::abs(slope));
    }
    const auto s = inverse_derivative_sums(seq, n);
    EXPECT_NEAR(s.sup_sum, oracle, 1e-12) << seq.description();
    EXPECT_EQ(s.cell_count, static_cast<double>(p.cell_count()));
  }
}

TEST(InverseDerivativeSums, SmoothEnumeration) {
  const auto seq = MapSequence::constant(perturbed_doubling_map(0.2));
  const auto s = inverse_derivative_sums(seq, 6);
  EXPECT_EQ(s.cell_count, 64.0);
  EXPECT_GT(s.var_sum, 0.0);
  // Each cell maps onto [0,1): sup 1/|T'| times width >= 1/sup... so the sum is within the distortion band of 1.
  EXPECT_GT(s.sup_sum, 1.0);
  EXPECT_LT(s.sup_sum, 3.0);
}

TEST(Covering, DoublingGivesN) {
  const auto seq = MapSequence::constant_beta(2.0);
  for (std::size_t n = 1; n <= 10; ++n) {
    EXPECT_EQ(covering_horizon(seq, 0, n, 2 * n), std::optional<std::size_t>(n));
  }
  EXPECT_EQ(covering_horizon(seq, 0, 5, 4), std::nullopt);
}

TEST(Covering, Examples) {
  EXPECT_EQ(covering_horizon(MapSequence::constant_beta(3.0), 0, 1, 5), std::optional<std::size_t>(1));
  const auto n = covering_horizon(MapSequence::constant_beta(1.9), 0, 1, 50);
  ASSERT_TRUE(n.has_value());
  RecordProperty("beta_1_9_horizon", static_cast<int>(*n));
  EXPECT_THROW(covering_horizon(MapSequence::constant_beta(2.0), 0, 0, 3), ArgumentError);
}

TEST(Covering, IntervalOracleForBetaOnePointNine) {
  // Independent oracle: push a dense grid of points from each branch cell and
  // check the image fills [0,1) to grid resolution at the reported horizon.
  const auto seq = MapSequence::constant_beta(1.9);
  const auto n = covering_horizon(seq, 0, 1, 50);
  ASSERT_TRUE(n.has_value());
  const auto m = beta_map(1.9);
  for (const auto& br : m.branches()) {
    const int bins = 200;
    std::vector<bool> hit(bins, false);
    const int pts = 200000;
    for (int i = 0; i < pts; ++i) {
      double x = br.lo() + (br.hi() - br.lo()) * (i + 0.5) / pts;
      for (std::size_t k = 0; k < *n; ++k) x = m(x);
      hit[static_cast<int>(x * bins)] = true;
    }
    for (int b = 0; b < bins; ++b) EXPECT_TRUE(hit[b]) << "bin " << b;
  }
}

TEST(Covering, MonotoneInMaxSteps) {
  for (const auto& seq : {MapSequence::constant_beta(1.9), MapSequence::random_beta(2.0, 0.1, 8),
                          MapSequence::periodic_beta({1.6, 2.4})}) {
    std::optional<std::size_t> found;
    for (std::size_t s = 1; s <= 40; ++s) {
      const auto n = covering_horizon(seq, 2, 3, s);
      if (found) {
        EXPECT_EQ(n, found) << seq.description() << " s=" << s;
      } else if (n) {
        found = n;
      }
    }
  }
}

TEST(Covering, FragmentCap) {
  // beta-map images stay connected, so only a zero cap is exceeded.
  EXPECT_THROW(covering_horizon(MapSequence::constant_beta(1.9), 0, 1, 50, 0), ResourceError);
}

TEST(CoveringPrediction, DoublingIsComputed) {
  const auto p = covering_minoration_prediction(MapSequence::constant_beta(3.0), 20);
  EXPECT_EQ(p.r, 1u);
  ASSERT_TRUE(p.delta.has_value());
  EXPECT_GT(*p.delta, 0.0);
  EXPECT_LE(*p.delta, 1.0);
}
