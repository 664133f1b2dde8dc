#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/maps/partition.hpp"
#include "seqdyn/maps/sequence.hpp"
#include "seqdyn/transfer/piecewise.hpp"

namespace seqdyn {

inline constexpr std::size_t kDefaultUlamBins = std::size_t{1} << 14;

struct TransferOptions {
  std::size_t cap = kDefaultPartitionCap;  // breakpoints allowed in an exact representation
  std::size_t ulam_bins = kDefaultUlamBins;
};

/// P_T f for a map with affine branches, exactly on breakpoints.
inline PiecewiseFn apply_transfer(const IntervalMap& map, const PiecewiseFn& f, std::size_t cap = kDefaultPartitionCap) {
  if (!map.is_affine()) {
    throw UnsupportedError("exact transfer needs affine branches; map '" + map.label() + "' is not affine");
  }
  const auto& fb = f.breakpoints();
  std::vector<double> pts;
  pts.reserve(fb.size() + 2 * map.branches().size());
  for (const auto& br : map.branches()) {
    pts.push_back(br.image_lo());
    pts.push_back(br.image_hi());
    auto first = std::upper_bound(fb.begin(), fb.end(), br.lo());
    for (auto it = first; it != fb.end() && *it < br.hi(); ++it) pts.push_back(br.value(*it));
  }
  auto bp = PiecewiseFn::dedupe(std::move(pts));
  if (bp.size() > cap + 1) throw ResourceError("transfer output has too many breakpoints", cap);
  std::vector<double> v(bp.size() - 1, 0.0);
  for (const auto& br : map.branches()) {
    const double lo = br.image_lo();
    const double hi = br.image_hi();
    const double weight = 1.0 / std::abs(br.slope());
    // Cells whose midpoint lies inside the branch image.
    auto c = static_cast<std::size_t>(std::upper_bound(bp.begin(), bp.end(), lo) - bp.begin());
    c = c == 0 ? 0 : c - 1;
    for (; c + 1 < bp.size() && bp[c] < hi; ++c) {
      const double mid = 0.5 * (bp[c] + bp[c + 1]);
      if (mid <= lo || mid >= hi) continue;
      const double x = std::clamp(br.inverse(mid), br.lo(), std::nextafter(br.hi(), 0.0));
      v[c] += f.values()[f.cell_index(x)] * weight;
    }
  }
  return PiecewiseFn(std::move(bp), std::move(v)).simplified();
}

/// Ulam discretization of P_T: mass of every source bin is sent to the target
/// bins in proportion to the Lebesgue measure of the matching preimage pieces.
inline GridFn apply_transfer_ulam(const IntervalMap& map, const GridFn& f) {
  const std::size_t bins = f.bins();
  const double w = f.bin_width();
  const auto scale = static_cast<double>(bins);
  std::vector<double> mass(bins, 0.0);
  std::vector<double> cuts;
  for (const auto& br : map.branches()) {
    cuts.clear();
    cuts.push_back(br.lo());
    // Source bin boundaries inside the domain.
    for (auto i = static_cast<std::size_t>(std::floor(br.lo() * scale)) + 1; static_cast<double>(i) * w < br.hi(); ++i) {
      cuts.push_back(static_cast<double>(i) * w);
    }
    // Preimages of target bin boundaries inside the image.
    const double ilo = br.image_lo();
    const double ihi = br.image_hi();
    for (auto j = static_cast<std::size_t>(std::floor(ilo * scale)) + 1; static_cast<double>(j) * w < ihi; ++j) {
      cuts.push_back(br.inverse(static_cast<double>(j) * w));
    }
    cuts.push_back(br.hi());
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      const double len = cuts[k + 1] - cuts[k];
      if (len <= 0.0) continue;
      const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
      const auto src = std::min(bins - 1, static_cast<std::size_t>(mid * scale));
      const double y = std::clamp(br.value(mid), 0.0, std::nextafter(1.0, 0.0));
      const auto dst = std::min(bins - 1, static_cast<std::size_t>(y * scale));
      mass[dst] += f.values()[src] * len;
    }
  }
  for (double& m : mass) m /= w;
  return GridFn(std::move(mass));
}

/// A density being pushed along a sequence. Stays exact while the maps are
/// affine and the breakpoint cap holds; afterwards continues on the Ulam grid.
class Transport {
 public:
  explicit Transport(PiecewiseFn f, TransferOptions opts = {}) : exact_(std::move(f)), opts_(opts) {}

  void step(const IntervalMap& map) {
    if (!grid_) {
      if (map.is_affine()) {
        try {
          exact_ = apply_transfer(map, exact_, opts_.cap);
          return;
        } catch (const ResourceError&) {
        }
      }
      grid_ = GridFn::project(exact_, opts_.ulam_bins);
    }
    grid_ = apply_transfer_ulam(map, *grid_);
  }

  bool on_grid() const noexcept { return grid_.has_value(); }
  PiecewiseFn current() const { return grid_ ? grid_->to_piecewise() : exact_; }

 private:
  PiecewiseFn exact_;
  std::optional<GridFn> grid_;
  TransferOptions opts_;
};

/// P_first ... applied through P_last to f (P_first first). Returns f when last < first.
inline PiecewiseFn transport(const MapSequence& seq, const PiecewiseFn& f, std::size_t first, std::size_t last,
                             const TransferOptions& opts = {}, bool* used_grid = nullptr) {
  Transport t(f, opts);
  for (std::size_t k = first; k <= last; ++k) t.step(seq.map(k));
  if (used_grid) *used_grid = t.on_grid();
  return t.current();
}

struct Pushforward {
  std::vector<PiecewiseFn> densities;   // densities[k] = P_1^k 1
  std::optional<std::size_t> ulam_from;  // first k computed on the grid, if any
};

inline Pushforward pushforward_densities(const MapSequence& seq, std::size_t n, const TransferOptions& opts = {}) {
  Pushforward out;
  out.densities.reserve(n + 1);
  Transport t(PiecewiseFn::constant(1.0), opts);
  out.densities.push_back(t.current());
  for (std::size_t k = 1; k <= n; ++k) {
    t.step(seq.map(k));
    if (t.on_grid() && !out.ulam_from) out.ulam_from = k;
    out.densities.push_back(t.current());
  }
  return out;
}

/// P_1^n 1.
inline PiecewiseFn pushforward_density(const MapSequence& seq, std::size_t n, const TransferOptions& opts = {}) {
  return transport(seq, PiecewiseFn::constant(1.0), 1, n, opts);
}

}  // namespace seqdyn
