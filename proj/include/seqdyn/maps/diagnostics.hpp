#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/maps/partition.hpp"
#include "seqdyn/maps/sequence.hpp"
#include "seqdyn/rng.hpp"

namespace seqdyn {

/// Lasota-Yorke pair: V(P_T f) <= contraction * V(f) + additive * |f|_1.
struct LyConstants {
  double contraction = 0.0;
  double additive = 0.0;
};

/// contraction = 2 / inf|T'|; additive = sup|T''|/|T'|^2 + 2 sup_I (sup_I 1/|T'|) / m(I).
/// For smooth branches the second derivative term uses the certified bounds.
inline LyConstants lasota_yorke_constants(const IntervalMap& map) {
  LyConstants ly;
  ly.contraction = 2.0 / map.expansion();
  double distortion = 0.0;
  double cell_term = 0.0;
  for (const auto& b : map.branches()) {
    const double lam = b.expansion();
    distortion = std::max(distortion, b.second_derivative_bound() / (lam * lam));
    cell_term = std::max(cell_term, (1.0 / lam) / b.width());
  }
  ly.additive = distortion + 2.0 * cell_term;
  return ly;
}

/// Lasota-Yorke pair of the composition T_start^end. Exact for affine sequences;
/// for smooth ones an upper bound assembled from the certified per-map bounds.
inline LyConstants composition_lasota_yorke(const MapSequence& seq, std::size_t start, std::size_t end,
                                            std::size_t cap = kDefaultPartitionCap) {
  const auto maps = seq.maps(start, end);
  const auto cells = composition_cells(seq, start, end, cap);
  double lam = 1.0;
  double distortion = 0.0;  // bound on sup |(U)''| / |U'|^2 built up by the chain rule
  bool affine = true;
  for (const auto& m : maps) {
    const double l = m.expansion();
    distortion = distortion / l + m.second_derivative_bound() / (l * l);
    lam *= l;
    affine = affine && m.is_affine();
  }
  double cell_term = 0.0;
  for (const auto& c : cells) {
    const double inv = affine ? 1.0 / std::abs(c.slope) : 1.0 / lam;
    cell_term = std::max(cell_term, inv / (c.b - c.a));
  }
  return {2.0 / lam, distortion + 2.0 * cell_term};
}

namespace detail {

// Applies maps[k] with the branch prescribed by the itinerary, without folding.
inline double follow(const std::vector<IntervalMap>& maps, const std::vector<std::uint32_t>& itinerary, double x,
                     double* derivative) {
  double d = 1.0;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const Branch& br = maps[k].branches()[itinerary[k]];
    d *= br.derivative(x);
    x = br.value(x);
  }
  if (derivative) *derivative = d;
  return x;
}

inline bool all_affine(const std::vector<IntervalMap>& maps) {
  return std::all_of(maps.begin(), maps.end(), [](const IntervalMap& m) { return m.is_affine(); });
}

}  // namespace detail

/// Largest sampled |(T_1^n)'(x) - (T_1^n)'(y)| / (|(T_1^n)'(x)| |T_1^n x - T_1^n y|)
/// over pairs drawn in a common cell of the composition partition.
inline double distortion_bound(const MapSequence& seq, std::size_t n, std::size_t sample_pairs,
                               std::uint64_t seed = 0, std::size_t cap = kDefaultPartitionCap) {
  if (sample_pairs == 0) throw ArgumentError("distortion_bound needs at least one sample pair");
  if (n == 0) throw ArgumentError("distortion_bound requires n >= 1");
  const auto maps = seq.maps(1, n);
  if (detail::all_affine(maps)) return 0.0;
  auto cells = composition_cells(seq, 1, n, cap);
  std::vector<double> starts;
  starts.reserve(cells.size());
  for (const auto& c : cells) starts.push_back(c.a);
  CounterRng rng(seed, 0);
  double worst = 0.0;
  for (std::size_t s = 0; s < sample_pairs; ++s) {
    const double u = rng.uniform();
    const auto it = std::upper_bound(starts.begin(), starts.end(), u);
    const auto& cell = cells[static_cast<std::size_t>(it - starts.begin()) - 1];
    const double x = cell.a + (cell.b - cell.a) * rng.uniform();
    const double y = cell.a + (cell.b - cell.a) * rng.uniform();
    double dx = 0.0, dy = 0.0;
    const double tx = detail::follow(maps, cell.itinerary, x, &dx);
    const double ty = detail::follow(maps, cell.itinerary, y, &dy);
    const double gap = std::abs(tx - ty);
    if (gap <= 0.0) continue;
    worst = std::max(worst, std::abs(dx - dy) / (std::abs(dx) * gap));
  }
  return worst;
}

struct InverseDerivativeSums {
  double sup_sum = 0.0;
  double var_sum = 0.0;
  double cell_count = 0.0;  // number of cells of the partition, as a real (it can be huge)
};

/// sum over cells I of the partition of T_1^n of sup_I 1/|(T_1^n)'| and of V_I(1/|(T_1^n)'|).
///
/// Affine sequences are handled without enumerating cells: cells whose images
/// coincide evolve identically, so they are grouped by image and carry the sum
/// of their 1/|slope|. Non-affine sequences enumerate cells and sample
/// `samples_per_cell` points per cell for the sup and the variation.
inline InverseDerivativeSums inverse_derivative_sums(const MapSequence& seq, std::size_t n,
                                                     std::size_t cap = kDefaultPartitionCap,
                                                     std::size_t samples_per_cell = 33) {
  if (n == 0) throw ArgumentError("inverse_derivative_sums requires n >= 1");
  const auto maps = seq.maps(1, n);
  InverseDerivativeSums out;
  if (detail::all_affine(maps)) {
    struct Group {
      double weight;
      double count;
    };
    // Keyed by image interval; keys closer than the merge tolerance are the same image.
    std::vector<std::pair<std::pair<double, double>, Group>> groups{{{0.0, 1.0}, {1.0, 1.0}}};
    for (const auto& m : maps) {
      const auto cuts = m.interior_breakpoints();
      std::vector<std::pair<std::pair<double, double>, Group>> next;
      for (const auto& [image, g] : groups) {
        std::vector<double> ys{image.first};
        for (double c : cuts) {
          if (c > image.first + kMergeTolerance && c < image.second - kMergeTolerance) ys.push_back(c);
        }
        ys.push_back(image.second);
        for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
          const Branch& br = m.branches()[m.branch_index(0.5 * (ys[i] + ys[i + 1]))];
          double lo = br.value(ys[i]);
          double hi = br.value(ys[i + 1]);
          if (lo > hi) std::swap(lo, hi);
          lo = std::clamp(lo, 0.0, 1.0);
          hi = std::clamp(hi, 0.0, 1.0);
          next.push_back({{lo, hi}, {g.weight / std::abs(br.slope()), g.count}});
        }
      }
      std::sort(next.begin(), next.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
      groups.clear();
      for (auto& e : next) {
        if (!groups.empty() && std::abs(groups.back().first.first - e.first.first) <= kMergeTolerance &&
            std::abs(groups.back().first.second - e.first.second) <= kMergeTolerance) {
          groups.back().second.weight += e.second.weight;
          groups.back().second.count += e.second.count;
        } else {
          groups.push_back(e);
        }
      }
      if (groups.size() > cap) throw ResourceError("too many distinct cell images", cap);
    }
    for (const auto& [image, g] : groups) {
      out.sup_sum += g.weight;
      out.cell_count += g.count;
    }
    return out;
  }
  const auto cells = composition_cells(seq, 1, n, cap);
  const std::size_t k = std::max<std::size_t>(samples_per_cell, 2);
  for (const auto& c : cells) {
    double sup = 0.0, var = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      // Closed cell endpoints are fine here: evaluation follows the itinerary.
      const double x = c.a + (c.b - c.a) * static_cast<double>(i) / static_cast<double>(k - 1);
      double d = 0.0;
      detail::follow(maps, c.itinerary, x, &d);
      const double v = 1.0 / std::abs(d);
      sup = std::max(sup, v);
      if (i > 0) var += std::abs(v - prev);
      prev = v;
    }
    out.sup_sum += sup;
    out.var_sum += var;
  }
  out.cell_count = static_cast<double>(cells.size());
  return out;
}

namespace detail {

using IntervalUnion = std::vector<std::pair<double, double>>;

inline IntervalUnion image_of_union(const IntervalMap& m, const IntervalUnion& u) {
  const auto cuts = m.interior_breakpoints();
  IntervalUnion out;
  for (const auto& [lo, hi] : u) {
    std::vector<double> xs{lo};
    for (auto it = std::upper_bound(cuts.begin(), cuts.end(), lo); it != cuts.end() && *it < hi; ++it) {
      xs.push_back(*it);
    }
    xs.push_back(hi);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      if (xs[i + 1] - xs[i] <= 0.0) continue;
      const Branch& br = m.branches()[m.branch_index(0.5 * (xs[i] + xs[i + 1]))];
      double a = br.value(xs[i]);
      double b = br.value(xs[i + 1]);
      if (a > b) std::swap(a, b);
      out.emplace_back(std::clamp(a, 0.0, 1.0), std::clamp(b, 0.0, 1.0));
    }
  }
  std::sort(out.begin(), out.end());
  IntervalUnion merged;
  for (const auto& iv : out) {
    if (!merged.empty() && iv.first <= merged.back().second + kMergeTolerance) {
      merged.back().second = std::max(merged.back().second, iv.second);
    } else {
      merged.push_back(iv);
    }
  }
  return merged;
}

inline double uncovered_length(const IntervalUnion& u) {
  double gap = 0.0, edge = 0.0;
  for (const auto& [lo, hi] : u) {
    gap += std::max(0.0, lo - edge);
    edge = std::max(edge, hi);
  }
  return gap + std::max(0.0, 1.0 - edge);
}

}  // namespace detail

inline constexpr double kCoveringTolerance = 1e-9;
inline constexpr std::size_t kDefaultFragmentCap = std::size_t{1} << 16;

/// Smallest N <= max_steps such that T_{m+1}^{m+N}(I) = [0,1] for every cell I of
/// the partition of T_{m+1}^{m+n}, where m = block_start.
inline std::optional<std::size_t> covering_horizon(const MapSequence& seq, std::size_t block_start, std::size_t n,
                                                   std::size_t max_steps,
                                                   std::size_t fragment_cap = kDefaultFragmentCap,
                                                   std::size_t cell_cap = kDefaultPartitionCap) {
  if (n == 0 || max_steps == 0) throw ArgumentError("covering_horizon requires n >= 1 and max_steps >= 1");
  const auto cells = composition_cells(seq, block_start + 1, block_start + n, cell_cap);
  const auto maps = seq.maps(block_start + 1, block_start + max_steps);
  std::size_t worst = 0;
  for (const auto& c : cells) {
    detail::IntervalUnion u{{c.a, c.b}};
    std::optional<std::size_t> found;
    for (std::size_t k = 0; k < max_steps; ++k) {
      u = detail::image_of_union(maps[k], u);
      if (u.size() > fragment_cap) throw ResourceError("covering image has too many fragments", fragment_cap);
      if (detail::uncovered_length(u) < kCoveringTolerance) {
        found = k + 1;
        break;
      }
    }
    if (!found) return std::nullopt;
    worst = std::max(worst, *found);
  }
  return worst;
}

/// Ingredients of the covering argument for (Min) and the resulting delta.
struct CoveringPrediction {
  double lambda = 0.0;                 // inf over the maps of inf|T'|
  std::optional<double> max_slope;     // C: sup over the maps of sup|T'|
  std::size_t r = 1;                   // smallest r with lambda^r > 2
  LyConstants block;                   // (rho_r, C_r), worst over the checked blocks
  double cone = 1.0;                   // a = max(1, C_r / (1 - rho_r))
  std::size_t n0 = 1;                  // smallest n0 with lambda^{-n0} < 1/(2a)
  std::optional<std::size_t> covering; // N(n0), worst over the checked blocks
  std::optional<double> delta;         // min(C^{-N}, C^{-(r+N)} / 2)
  std::vector<std::string> notes;
};

/// Evaluates the covering argument's constants over the first `horizon` maps,
/// checking blocks starting at 0 .. block_samples-1.
inline CoveringPrediction covering_minoration_prediction(const MapSequence& seq, std::size_t horizon,
                                                         std::size_t block_samples = 4,
                                                         std::size_t max_n0 = 14) {
  CoveringPrediction p;
  const auto maps = seq.maps(1, std::max<std::size_t>(horizon, 1));
  p.lambda = std::numeric_limits<double>::infinity();
  double c = 0.0;
  bool c_known = true;
  for (const auto& m : maps) {
    p.lambda = std::min(p.lambda, m.expansion());
    auto d = m.max_abs_derivative();
    if (d) {
      c = std::max(c, *d);
    } else {
      c_known = false;
    }
  }
  if (c_known) p.max_slope = c;
  p.r = 1;
  while (std::pow(p.lambda, static_cast<double>(p.r)) <= 2.0) ++p.r;
  block_samples = std::max<std::size_t>(block_samples, 1);
  for (std::size_t m = 0; m < block_samples; ++m) {
    const auto ly = composition_lasota_yorke(seq, m + 1, m + p.r);
    p.block.contraction = std::max(p.block.contraction, ly.contraction);
    p.block.additive = std::max(p.block.additive, ly.additive);
  }
  if (p.block.contraction >= 1.0) {
    p.notes.push_back("block contraction rho_r >= 1; cone argument unavailable");
    return p;
  }
  p.cone = std::max(1.0, p.block.additive / (1.0 - p.block.contraction));
  p.n0 = 1;
  while (std::pow(p.lambda, -static_cast<double>(p.n0)) >= 1.0 / (2.0 * p.cone)) ++p.n0;
  if (p.n0 > max_n0) {
    p.notes.push_back("n0 = " + std::to_string(p.n0) + " exceeds the enumeration limit " + std::to_string(max_n0));
    return p;
  }
  std::size_t worst = 0;
  for (std::size_t m = 0; m < block_samples; ++m) {
    const auto n = covering_horizon(seq, m, p.n0, 4 * p.n0 + 16);
    if (!n) {
      p.notes.push_back("no covering horizon found for block start " + std::to_string(m));
      return p;
    }
    worst = std::max(worst, *n);
  }
  p.covering = worst;
  if (!p.max_slope) {
    p.notes.push_back("sup|T'| not certified for every map");
    return p;
  }
  const double big_c = *p.max_slope;
  p.delta = std::min(std::pow(big_c, -static_cast<double>(worst)),
                     0.5 * std::pow(big_c, -static_cast<double>(p.r + worst)));
  return p;
}

}  // namespace seqdyn
