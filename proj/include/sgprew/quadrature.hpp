#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace sgprew {

/// Gauss-Legendre rule mapped to [0, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int size() const { return static_cast<int>(nodes.size()); }
};

inline QuadratureRule make_gauss_legendre(int q) {
  if (q < 1) throw std::invalid_argument("gauss_legendre: need q >= 1");
  QuadratureRule rule;
  rule.nodes.resize(q);
  rule.weights.resize(q);
  for (int k = 0; k < q; ++k) {
    // Newton on P_q starting from the Chebyshev-like guess
    double x = std::cos(std::numbers::pi * (k + 0.75) / (q + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= q; ++j) {
        double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (q == 1) p0 = 1.0;
      dp = q * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int j = 2; j <= q; ++j) {
        double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      if (q == 1) p0 = 1.0;
      dp = q * (x * p1 - p0) / (x * x - 1.0);
    }
    rule.nodes[q - 1 - k] = 0.5 * (1.0 + x);
    rule.weights[q - 1 - k] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

inline const QuadratureRule& gauss_legendre(int q) {
  static std::mutex mutex;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(q);
  if (it == cache.end()) it = cache.emplace(q, make_gauss_legendre(q)).first;
  return it->second;
}

/// Points per cell on 1-D level k: at least q, raised on coarse levels (up to
/// kMaxCoarseOrder) so [0, 1] sees about kMinPointsPerDirection samples. The
/// quadrature error of a coarse direction would otherwise stay fixed while
/// the other directions refine and show up as an error floor.
inline constexpr int kMinPointsPerDirection = 32;
inline constexpr int kMaxCoarseOrder = 8;

inline int level_quad_order(int q, int k) {
  const long cells = 2L << k;
  const int coarse = static_cast<int>(std::min<long>(kMaxCoarseOrder, (kMinPointsPerDirection + cells - 1) / cells));
  return std::max(q, coarse);
}

/// Points per cell for 1-D integrals against a variable factor. Quadrature
/// error on a coarse level does not shrink as other directions refine, so
/// these cheap integrals are made accurate to roundoff.
inline constexpr int kMinOrder1D = 8;

inline int level_quad_order_1d(int q, int k) { return std::max(level_quad_order(q, k), kMinOrder1D); }

}  // namespace sgprew
