#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "seqdyn/errors.hpp"
#include "seqdyn/maps/partition.hpp"
#include "seqdyn/maps/sequence.hpp"
#include "seqdyn/stochastic/observable.hpp"

namespace seqdyn {

/// E[K(x_0, ..., x_{n-1}) | x_p] along the process x_k = T_1^k x_0, x_0 uniform:
///
///   (1 / P_1^p 1(x_p)) sum_{T_1^p y = x_p} K(y, T_1 y, ..., T_1^{p-1} y, x_p, x_{p+1}, ...) / |(T_1^p)'(y)|
///
/// with coordinates past p following x_p forward. Preimages are enumerated
/// branch by branch from T_p down to T_1.
inline double conditional_expectation_kp(const MapSequence& seq, const Observable& k, std::size_t p, double x_p,
                                         std::size_t cap = kDefaultPartitionCap) {
  if (p == 0) throw ArgumentError("conditional_expectation_kp requires p >= 1");
  if (!(x_p >= 0.0 && x_p < 1.0)) throw DomainError("x_p outside [0,1): " + std::to_string(x_p));
  const std::size_t arity = k.arity();
  const std::size_t width = std::max(arity, p + 1);
  // Each path stores (x_0 .. x_{width-1}); filled from x_p outward.
  struct Path {
    std::vector<double> x;
    double weight;
  };
  Path root{std::vector<double>(width, 0.0), 1.0};
  root.x[p] = x_p;
  for (std::size_t i = p + 1; i < width; ++i) root.x[i] = seq.map(i)(root.x[i - 1]);
  std::vector<Path> paths{std::move(root)};
  for (std::size_t level = p; level >= 1; --level) {
    const auto m = seq.map(level);
    std::vector<Path> next;
    next.reserve(paths.size() * m.branches().size());
    for (const auto& path : paths) {
      for (const auto& pre : m.preimages(path.x[level])) {
        Path q = path;
        q.x[level - 1] = pre.point;
        q.weight /= pre.abs_derivative;
        next.push_back(std::move(q));
        if (next.size() > cap) throw ResourceError("too many preimages of T_1^" + std::to_string(p), cap);
      }
    }
    paths = std::move(next);
  }
  double mass = 0.0, acc = 0.0;
  for (const auto& path : paths) {
    mass += path.weight;
    acc += path.weight * k(path.x);
  }
  if (mass < 1e-12) {
    throw MinorationError("P_1^" + std::to_string(p) + " 1 vanishes at x_p = " + std::to_string(x_p));
  }
  return acc / mass;
}

}  // namespace seqdyn
