#pragma once

#include "coneflow/types.hpp"

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace coneflow {

/// res^n points of a tensor grid on the box (endpoints included); res == 1
/// yields the box centre. Index k enumerates coordinate 0 fastest.
inline std::vector<Vec> tensor_grid(const Box& box, int res) {
  if (res < 1) throw PreconditionError("grid resolution must be at least 1");
  const auto n = static_cast<Eigen::Index>(box.dim());
  const auto r = static_cast<std::size_t>(res);
  std::size_t total = 1;
  for (Eigen::Index i = 0; i < n; ++i) total *= r;
  std::vector<Vec> pts(total, Vec(n));
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rem = k;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto j = static_cast<double>(rem % r);
      rem /= r;
      pts[k][i] = res == 1 ? 0.5 * (box.lo[i] + box.hi[i])
                           : box.lo[i] + (box.hi[i] - box.lo[i]) * j / (res - 1);
    }
  }
  return pts;
}

/// Uniform points in the box from a seeded mt19937_64.
inline std::vector<Vec> random_points(const Box& box, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec> pts(count, Vec(static_cast<Eigen::Index>(box.dim())));
  for (auto& p : pts)
    for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * u(rng);
  return pts;
}

using PointPair = std::pair<Vec, Vec>;

/// Independent uniform pairs (p, q) in the box.
inline std::vector<PointPair> random_pairs(const Box& box, std::size_t count, std::uint64_t seed) {
  const auto pts = random_points(box, 2 * count, seed);
  std::vector<PointPair> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.emplace_back(pts[2 * k], pts[2 * k + 1]);
  return out;
}

}  // namespace coneflow
