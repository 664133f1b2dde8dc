#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/maps/sequence.hpp"

namespace seqdyn {

inline constexpr std::size_t kDefaultPartitionCap = std::size_t{1} << 20;

/// Monotonicity partition of a composition T_start^end, as sorted breakpoints
/// 0 = b_0 < ... < b_k = 1.
struct Partition {
  std::vector<double> breakpoints;
  std::size_t start = 1;
  std::size_t end = 1;

  std::size_t cell_count() const noexcept { return breakpoints.empty() ? 0 : breakpoints.size() - 1; }

  double max_width() const noexcept {
    double w = 0.0;
    for (std::size_t i = 1; i < breakpoints.size(); ++i) w = std::max(w, breakpoints[i] - breakpoints[i - 1]);
    return w;
  }

  std::string provenance() const { return "T_" + std::to_string(start) + "^" + std::to_string(end); }
};

/// One cell [a, b) of a composition together with its image endpoints.
///
/// `ya` and `yb` are the one-sided limits of the composition at a and b, so the
/// image is the interval between them. `slope` is the composed derivative (only
/// meaningful when the sequence is affine). `itinerary` records the branch used
/// by each map applied so far; it is only kept for non-affine sequences.
struct CompositionCell {
  double a = 0.0;
  double b = 1.0;
  double ya = 0.0;
  double yb = 1.0;
  double slope = 1.0;
  std::vector<std::uint32_t> itinerary;
};

namespace detail {

// Solve composition(x) = y on a cell by walking inverse branches backwards.
inline double pull_back(const CompositionCell& cell, const std::vector<IntervalMap>& applied, double y) {
  for (std::size_t k = applied.size(); k-- > 0;) {
    y = applied[k].branches()[cell.itinerary[k]].inverse(y);
  }
  return std::clamp(y, cell.a, cell.b);
}

}  // namespace detail

/// Refines the cells of T_1^k (given by `cells`, which were produced with the maps
/// in `applied`) by the next map, yielding the cells of T_1^{k+1}.
inline std::vector<CompositionCell> refine_cells(const std::vector<CompositionCell>& cells,
                                                 const std::vector<IntervalMap>& applied, const IntervalMap& next,
                                                 bool keep_itinerary, std::size_t cap) {
  const auto cuts = next.interior_breakpoints();
  std::vector<CompositionCell> out;
  out.reserve(cells.size() * 2);
  std::vector<double> ys;
  for (const auto& c : cells) {
    const double lo = std::min(c.ya, c.yb);
    const double hi = std::max(c.ya, c.yb);
    const bool rising = c.yb >= c.ya;
    // Image points strictly inside (lo, hi) where the next map changes branch.
    ys.clear();
    ys.push_back(c.ya);
    auto first = std::upper_bound(cuts.begin(), cuts.end(), lo + kMergeTolerance);
    auto last = std::lower_bound(cuts.begin(), cuts.end(), hi - kMergeTolerance);
    if (rising) {
      for (auto it = first; it < last; ++it) ys.push_back(*it);
    } else {
      for (auto it = last; it > first; --it) ys.push_back(*(it - 1));
    }
    ys.push_back(c.yb);
    double xa = c.a;
    for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
      const double y0 = ys[i];
      const double y1 = ys[i + 1];
      double xb = c.b;
      if (i + 2 < ys.size()) {
        if (applied.empty() || keep_itinerary == false) {
          // Affine composition: the cell maps linearly onto its image.
          xb = c.a + (y1 - c.ya) / (c.yb - c.ya) * (c.b - c.a);
        } else {
          xb = detail::pull_back(c, applied, y1);
        }
      }
      if (xb - xa <= kMergeTolerance && i + 2 < ys.size()) continue;
      const std::size_t bi = next.branch_index(0.5 * (y0 + y1));
      const Branch& br = next.branches()[bi];
      CompositionCell nc;
      nc.a = xa;
      nc.b = xb;
      nc.ya = br.value(y0);
      nc.yb = br.value(y1);
      nc.slope = c.slope * (br.is_affine() ? br.slope() : 1.0);
      if (keep_itinerary) {
        nc.itinerary = c.itinerary;
        nc.itinerary.push_back(static_cast<std::uint32_t>(bi));
      }
      if (!out.empty() && nc.b - nc.a <= kMergeTolerance) {
        out.back().b = nc.b;
        continue;
      }
      out.push_back(std::move(nc));
      if (out.size() > cap) {
        throw ResourceError("composition partition has too many cells", cap);
      }
      xa = xb;
    }
  }
  return out;
}

/// Cells of T_start^end (start applied first).
inline std::vector<CompositionCell> composition_cells(const MapSequence& seq, std::size_t start, std::size_t end,
                                                      std::size_t cap = kDefaultPartitionCap) {
  if (start == 0 || end < start) throw ArgumentError("composition_partition requires 1 <= start <= end");
  const auto maps = seq.maps(start, end);
  bool affine = true;
  for (const auto& m : maps) affine = affine && m.is_affine();
  std::vector<CompositionCell> cells{CompositionCell{}};
  std::vector<IntervalMap> applied;
  for (const auto& m : maps) {
    cells = refine_cells(cells, applied, m, !affine, cap);
    if (!affine) applied.push_back(m);
  }
  return cells;
}

/// The monotonicity partition of T_start^end.
inline Partition composition_partition(const MapSequence& seq, std::size_t start, std::size_t end,
                                       std::size_t cap = kDefaultPartitionCap) {
  const auto cells = composition_cells(seq, start, end, cap);
  Partition p;
  p.start = start;
  p.end = end;
  p.breakpoints.reserve(cells.size() + 1);
  for (const auto& c : cells) p.breakpoints.push_back(c.a);
  p.breakpoints.push_back(1.0);
  p.breakpoints.front() = 0.0;
  return p;
}

}  // namespace seqdyn
