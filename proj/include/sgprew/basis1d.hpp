#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"

namespace sgprew {

/// Exact rational constant, converted to double at the point of use.
struct Rational {
  long long num;
  long long den;
  constexpr double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

namespace prewavelet_weights {
inline constexpr Rational kBoundaryCenter{9, 10};
inline constexpr Rational kNeighbor{-3, 5};
inline constexpr Rational kOuter{1, 10};
inline constexpr Rational kCenter{1, 1};
inline constexpr Rational kHalf{1, 2};
}  // namespace prewavelet_weights

namespace testing_hooks {
/// Added to the boundary pre-wavelet weight 9/10. Zero except in fault-injection runs.
inline double boundary_weight_perturbation = 0.0;
}  // namespace testing_hooks

/// Nodal expansion of phi_{t,i}: coefficients on nodal indices first .. first+count-1.
struct PrewaveletStencil {
  long first = 1;
  int count = 0;
  std::array<double, 5> coeff{};
};

inline PrewaveletStencil prewavelet_stencil(int t, long i) {
  using namespace prewavelet_weights;
  if (!in_xi(t, i) || i < 1 || i > level_size(t)) throw std::out_of_range("prewavelet_stencil: index not in Xi_t");
  PrewaveletStencil st;
  if (t == 0) {
    st.first = 1;
    st.count = 1;
    st.coeff[0] = 1.0;
    return st;
  }
  const long last = level_size(t);
  const double boundary = kBoundaryCenter.value() + testing_hooks::boundary_weight_perturbation;
  if (i == 1) {
    st.first = 1;
    st.count = 3;
    st.coeff = {boundary, kNeighbor.value(), kOuter.value(), 0.0, 0.0};
  } else if (i == last) {
    st.first = last - 2;
    st.count = 3;
    st.coeff = {kOuter.value(), kNeighbor.value(), boundary, 0.0, 0.0};
  } else {
    st.first = i - 2;
    st.count = 5;
    st.coeff = {kOuter.value(), kNeighbor.value(), kCenter.value(), kNeighbor.value(), kOuter.value()};
  }
  return st;
}

// ---------------------------------------------------------------------------
// Pointwise evaluation
// ---------------------------------------------------------------------------

inline double hat_value(int k, long i, double x) {
  const double r = std::abs(std::ldexp(x, k + 1) - static_cast<double>(i));
  return r < 1.0 ? 1.0 - r : 0.0;
}

inline double hat_derivative(int k, long i, double x) {
  const double y = std::ldexp(x, k + 1) - static_cast<double>(i);
  const double inv_h = std::ldexp(1.0, k + 1);
  if (y <= -1.0 || y >= 1.0) return 0.0;
  return y < 0.0 ? inv_h : -inv_h;
}

inline double prewavelet_value(int t, long i, double x) {
  const auto st = prewavelet_stencil(t, i);
  double v = 0.0;
  for (int k = 0; k < st.count; ++k) v += st.coeff[k] * hat_value(t, st.first + k, x);
  return v;
}

// ---------------------------------------------------------------------------
// Transfer operators between levels t-1 and t
// ---------------------------------------------------------------------------

namespace detail {
inline void check_pair(std::size_t coarse, std::size_t fine, const char* what) {
  if (fine != 2 * coarse + 1 || fine < 1) throw std::invalid_argument(std::string(what) + ": length mismatch");
}
inline int level_of_length(std::size_t len) {
  int k = 0;
  while (static_cast<std::size_t>(level_size(k)) < len) ++k;
  if (static_cast<std::size_t>(level_size(k)) != len) throw std::invalid_argument("length is not 2^{k+1}-1");
  return k;
}
}  // namespace detail

/// Nodal interpolation from level t-1 to level t (M^prol).
inline void prolong_1d(std::span<const double> coarse, std::span<double> fine) {
  detail::check_pair(coarse.size(), fine.size(), "prolong_1d");
  const std::size_t nc = coarse.size();
  for (std::size_t j = 0; j < nc; ++j) fine[2 * j + 1] = coarse[j];
  fine[0] = 0.5 * (nc ? coarse[0] : 0.0);
  for (std::size_t j = 1; j < nc; ++j) fine[2 * j] = 0.5 * (coarse[j - 1] + coarse[j]);
  fine[2 * nc] = 0.5 * (nc ? coarse[nc - 1] : 0.0);
}

/// Restriction of functionals from level t to t-1 (M^res, the transpose of prolong_1d).
inline void restrict_1d(std::span<const double> fine, std::span<double> coarse) {
  detail::check_pair(coarse.size(), fine.size(), "restrict_1d");
  for (std::size_t j = 0; j < coarse.size(); ++j) coarse[j] = fine[2 * j + 1] + 0.5 * (fine[2 * j] + fine[2 * j + 2]);
}

/// Point values on level t-1 taken from point values on level t.
inline void inject_1d(std::span<const double> fine, std::span<double> coarse) {
  detail::check_pair(coarse.size(), fine.size(), "inject_1d");
  for (std::size_t j = 0; j < coarse.size(); ++j) coarse[j] = fine[2 * j + 1];
}

// ---------------------------------------------------------------------------
// Change of basis on one level
// ---------------------------------------------------------------------------

/// Matrix whose odd columns are the nodal values of phi_{t,j} and whose even
/// columns are the level t-1 hats centred at j. Banded, |i-j| <= 2, factored
/// without pivoting on construction.
class BandedBasisMatrix {
 public:
  explicit BandedBasisMatrix(int t) : level_(t), n_(level_size(t)), lu_(static_cast<std::size_t>(n_)) {
    for (long i = 0; i < n_; ++i)
      for (int k = 0; k < 5; ++k) {
        long j = i + k - 2;
        lu_[i][k] = (j >= 0 && j < n_) ? entry(i, j) : 0.0;
      }
    factor();
  }

  /// Entry (row, col), 0-based.
  double entry(long row, long col) const {
    const long j = col + 1;  // 1-based column index
    if (level_ == 0) return row == col ? 1.0 : 0.0;
    if (j % 2 == 1) {
      const auto st = prewavelet_stencil(level_, j);
      const long k = row + 1 - st.first;
      return (k >= 0 && k < st.count) ? st.coeff[k] : 0.0;
    }
    const long d = row - col;
    if (d == 0) return prewavelet_weights::kCenter.value();
    if (d == 1 || d == -1) return prewavelet_weights::kHalf.value();
    return 0.0;
  }

  int level() const { return level_; }
  long size() const { return n_; }

  /// Solves M x = b in place.
  void solve(std::span<double> b) const {
    if (static_cast<long>(b.size()) != n_) throw std::invalid_argument("BandedBasisMatrix::solve: length mismatch");
    for (long i = 1; i < n_; ++i) {
      double s = b[i];
      for (long j = std::max(0L, i - 2); j < i; ++j) s -= lu_[i][j - i + 2] * b[j];
      b[i] = s;
    }
    for (long i = n_ - 1; i >= 0; --i) {
      double s = b[i];
      for (long j = i + 1; j <= std::min(n_ - 1, i + 2); ++j) s -= lu_[i][j - i + 2] * b[j];
      b[i] = s / lu_[i][2];
    }
  }

  /// Shared factorization per level.
  static const BandedBasisMatrix& for_level(int t) {
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<BandedBasisMatrix>> cache;
    static double cached_perturbation = 0.0;
    std::lock_guard lock(mutex);
    if (cached_perturbation != testing_hooks::boundary_weight_perturbation) {
      cache.clear();
      cached_perturbation = testing_hooks::boundary_weight_perturbation;
    }
    auto& slot = cache[t];
    if (!slot) slot = std::make_unique<BandedBasisMatrix>(t);
    return *slot;
  }

 private:
  void factor() {
    for (long k = 0; k < n_; ++k) {
      const double pivot = lu_[k][2];
      if (!(std::abs(pivot) > 1e-12)) throw std::runtime_error("BandedBasisMatrix: singular factorization");
      for (long i = k + 1; i <= std::min(n_ - 1, k + 2); ++i) {
        double& lik = lu_[i][k - i + 2];
        lik /= pivot;
        for (long j = k + 1; j <= std::min(n_ - 1, k + 2); ++j) lu_[i][j - i + 2] -= lik * lu_[k][j - k + 2];
      }
    }
  }

  int level_;
  long n_;
  std::vector<std::array<double, 5>> lu_;
};

/// Nodal values on level t of sum_{i in Xi_t} c_i phi_{t,i}; `coeff` has full
/// level length and only its Xi_t entries are read.
inline void prewavelet_synthesis_1d(int t, std::span<const double> coeff, std::span<double> nodal) {
  const long n = level_size(t);
  if (static_cast<long>(coeff.size()) != n || static_cast<long>(nodal.size()) != n)
    throw std::invalid_argument("prewavelet_synthesis_1d: length mismatch");
  if (t == 0) {
    nodal[0] = coeff[0];
    return;
  }
  std::fill(nodal.begin(), nodal.end(), 0.0);
  for (long i = 1; i <= n; i += 2) {
    const double c = coeff[i - 1];
    if (c == 0.0) continue;
    const auto st = prewavelet_stencil(t, i);
    for (int k = 0; k < st.count; ++k) nodal[st.first - 1 + k] += c * st.coeff[k];
  }
}

/// In-place Q_t on one fiber: nodal values become pre-wavelet coefficients on
/// Xi_t, the coarse part (even entries) is discarded.
inline void prewavelet_analysis_1d(int t, std::span<double> values) {
  if (t == 0) return;
  BandedBasisMatrix::for_level(t).solve(values);
  for (std::size_t j = 1; j < values.size(); j += 2) values[j] = 0.0;
}

struct PrewaveletSplit {
  std::vector<double> prewavelet;  // coefficients of phi_{t,i}, i in Xi_t, ascending i
  std::vector<double> coarse;      // nodal coefficients on level t-1
};

/// Splits nodal values on level t >= 1 into W_t and V_{t-1} parts.
inline PrewaveletSplit prewavelet_transform_1d(int t, std::span<const double> nodal) {
  if (t < 1) throw std::invalid_argument("prewavelet_transform_1d: need t >= 1");
  if (static_cast<long>(nodal.size()) != level_size(t)) throw std::invalid_argument("prewavelet_transform_1d: length mismatch");
  std::vector<double> x(nodal.begin(), nodal.end());
  BandedBasisMatrix::for_level(t).solve(x);
  PrewaveletSplit out;
  for (std::size_t j = 0; j < x.size(); ++j) (j % 2 == 0 ? out.prewavelet : out.coarse).push_back(x[j]);
  return out;
}

/// F(phi_{t,i}) for i in Xi_t from F(v_{t,j}); result stored at Xi_t
/// positions of `out`, zeros elsewhere.
inline void prewavelet_dual_stencil_1d(int t, std::span<const double> functional, std::span<double> out) {
  const long n = level_size(t);
  if (static_cast<long>(functional.size()) != n || static_cast<long>(out.size()) != n)
    throw std::invalid_argument("prewavelet_dual_stencil_1d: length mismatch");
  if (t == 0) {
    out[0] = functional[0];
    return;
  }
  for (long i = 1; i <= n; ++i) {
    if (i % 2 == 0) {
      out[i - 1] = 0.0;
      continue;
    }
    const auto st = prewavelet_stencil(t, i);
    double s = 0.0;
    for (int k = 0; k < st.count; ++k) s += st.coeff[k] * functional[st.first - 1 + k];
    out[i - 1] = s;
  }
}

// ---------------------------------------------------------------------------
// Exact 1-D integrals of hats and pre-wavelets
// ---------------------------------------------------------------------------

enum class IntegralKind { Mass, Stiffness };
enum class Basis1D { Hat, Prewavelet };

/// Nodal coefficients on level `target` >= t of hat_{t,i} or phi_{t,i}.
inline std::vector<double> nodal_expansion_1d(Basis1D basis, int t, long i, int target) {
  if (target < t) throw std::invalid_argument("nodal_expansion_1d: target level below source level");
  std::vector<double> v(static_cast<std::size_t>(level_size(t)), 0.0);
  if (basis == Basis1D::Hat) {
    v.at(static_cast<std::size_t>(i - 1)) = 1.0;
  } else {
    const auto st = prewavelet_stencil(t, i);
    for (int k = 0; k < st.count; ++k) v[st.first - 1 + k] = st.coeff[k];
  }
  for (int k = t + 1; k <= target; ++k) {
    std::vector<double> fine(static_cast<std::size_t>(level_size(k)));
    prolong_1d(v, fine);
    v = std::move(fine);
  }
  return v;
}

/// Exact integral over (0,1) of the product (mass) or product of derivatives
/// (stiffness) of two hats/pre-wavelets, by piecewise-linear integration on
/// the finer of the two levels.
inline double exact_1d_integral(IntegralKind kind, Basis1D b1, int t1, long i1, Basis1D b2, int t2, long i2) {
  const int level = std::max(t1, t2);
  const auto u = nodal_expansion_1d(b1, t1, i1, level);
  const auto v = nodal_expansion_1d(b2, t2, i2, level);
  const double h = mesh_size(level);
  const std::size_t n = u.size();
  double sum = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double left = j > 0 ? v[j - 1] : 0.0;
    const double right = j + 1 < n ? v[j + 1] : 0.0;
    if (kind == IntegralKind::Mass)
      sum += u[j] * (h / 6.0) * (4.0 * v[j] + left + right);
    else
      sum += u[j] * (2.0 * v[j] - left - right) / h;
  }
  return sum;
}

inline double exact_1d_integrals(int t, long i, int t2, long i2, IntegralKind kind) {
  return exact_1d_integral(kind, Basis1D::Prewavelet, t, i, Basis1D::Prewavelet, t2, i2);
}

}  // namespace sgprew
