#pragma once

#include <algorithm>
#include <array>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "basis1d.hpp"
#include "coefficients.hpp"
#include "grid.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "stencil.hpp"

namespace sgprew {

/// Level-wise Galerkin operator on the nodal spaces V_t, |t| <= depth.
class LevelOperator {
 public:
  virtual ~LevelOperator() = default;
  virtual int dim() const = 0;
  virtual int depth() const = 0;
  /// out = a(sum_j in_j v_{t,j}, v_{t,i}) for all i in I_t.
  virtual void apply(const MultiIndex& t, std::span<const double> in, std::span<double> out) const = 0;
  /// a(phi_{t,i}, phi_{t,i}).
  virtual double energy(const MultiIndex& t, std::span<const long> i) const = 0;
  /// Dense per-point stencil of level t (used by tests and diagnostics).
  virtual StencilField stencil(const MultiIndex& t) const = 0;
};

// ---------------------------------------------------------------------------
// Generic path: precomputed 3^d stencil fields.
// ---------------------------------------------------------------------------

class StencilOperator final : public LevelOperator {
 public:
  StencilOperator(const CoefficientField& coeff, int n, int q, int threads = 1) : d_(coeff.dim), n_(n) {
    const auto levels = iterate_levels(n, d_);
    fields_.resize(levels.size());
    parallel_for(levels.size(), threads, [&](std::size_t k) { fields_[k] = assemble_stencil(levels[k], coeff, q); });
    table_ = levels;  // lexicographic, so lower_bound finds a level
  }

  int dim() const override { return d_; }
  int depth() const override { return n_; }

  const StencilField& field(const MultiIndex& t) const {
    const auto it = std::lower_bound(table_.begin(), table_.end(), t);
    if (it == table_.end() || !(*it == t)) throw std::out_of_range("StencilOperator: missing stencil level");
    return fields_[static_cast<std::size_t>(it - table_.begin())];
  }

  void apply(const MultiIndex& t, std::span<const double> in, std::span<double> out) const override {
    apply_stencil(field(t), in, out);
  }

  double energy(const MultiIndex& t, std::span<const long> i) const override {
    const auto& S = field(t);
    const auto& shape = S.shape;
    const int d = d_;
    std::array<PrewaveletStencil, kMaxDim> st;
    long count = 1;
    for (int s = 0; s < d; ++s) {
      st[s] = prewavelet_stencil(t[s], i[s]);
      count *= st[s].count;
    }
    double sum = 0.0;
    std::array<int, kMaxDim> a{};
    for (long k = 0; k < count; ++k) {
      double ca = 1.0;
      long off = 0;
      for (int s = 0; s < d; ++s) {
        ca *= st[s].coeff[a[s]];
        off += (st[s].first + a[s] - 1) * shape.stride[s];
      }
      for (int o = 0; o < S.width; ++o) {
        const auto ov = offset_of(o, d);
        double cb = 1.0;
        for (int s = 0; s < d && cb != 0.0; ++s) {
          const int b = a[s] + ov[s];
          cb = (b >= 0 && b < st[s].count) ? cb * st[s].coeff[b] : 0.0;
        }
        if (cb != 0.0) sum += ca * S.weight(off, o) * cb;
      }
      for (int s = 0; s < d; ++s) {
        if (++a[s] < st[s].count) break;
        a[s] = 0;
      }
    }
    return sum;
  }

  StencilField stencil(const MultiIndex& t) const override { return field(t); }

 private:
  int d_;
  int n_;
  std::vector<StencilField> fields_;
  std::vector<MultiIndex> table_;
};

// ---------------------------------------------------------------------------
// Separable path: sums of Kronecker products of 1-D tridiagonal matrices.
// ---------------------------------------------------------------------------

/// Tridiagonal 1-D matrix; row i couples to i-1 (lower), i (diag), i+1 (upper).
struct Tridiagonal {
  std::vector<double> lower, diag, upper;
  long size() const { return static_cast<long>(diag.size()); }
};

/// Entries int f(x) D_trial v_j D_test v_i on 1-D level k, Gauss per cell
/// (q points for f = 1, where that is exact, level_quad_order_1d otherwise).
inline Tridiagonal assemble_tridiagonal(int k, bool trial_deriv, bool test_deriv, const Function1D& f, int q) {
  const long n = level_size(k);
  const double h = mesh_size(k);
  const auto& rule = gauss_legendre(f ? level_quad_order_1d(q, k) : std::max(q, 2));
  Tridiagonal T;
  T.lower.assign(n, 0.0);
  T.diag.assign(n, 0.0);
  T.upper.assign(n, 0.0);
  for (long c = 0; c <= n; ++c) {
    // cell [c h, (c+1) h], local nodes c (left) and c+1 (right)
    double e[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (int p = 0; p < rule.size(); ++p) {
      const double xi = rule.nodes[p];
      const double fx = f ? f((static_cast<double>(c) + xi) * h) : 1.0;
      const double w = rule.weights[p] * h * fx;
      const double trial[2] = {trial_deriv ? -1.0 / h : 1.0 - xi, trial_deriv ? 1.0 / h : xi};
      const double test[2] = {test_deriv ? -1.0 / h : 1.0 - xi, test_deriv ? 1.0 / h : xi};
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) e[a][b] += w * trial[b] * test[a];
    }
    const long left = c, right = c + 1;  // 1-based node numbers
    const bool has_left = left >= 1, has_right = right <= n;
    if (has_left) T.diag[left - 1] += e[0][0];
    if (has_right) T.diag[right - 1] += e[1][1];
    if (has_left && has_right) {
      T.upper[left - 1] += e[0][1];   // test left, trial right
      T.lower[right - 1] += e[1][0];  // test right, trial left
    }
  }
  return T;
}

/// In-place y = T x along direction dir of a block.
inline void apply_tridiagonal_along(std::span<double> data, const BlockShape& shape, int dir, const Tridiagonal& T,
                                    std::vector<double>& prev) {
  const long n = shape.extent[dir];
  const long st = shape.stride[dir];
  const long outer = shape.size / (n * st);
  prev.resize(static_cast<std::size_t>(st));
  for (long o = 0; o < outer; ++o) {
    double* base = data.data() + o * n * st;
    std::fill(prev.begin(), prev.end(), 0.0);
    for (long k = 0; k < n; ++k) {
      double* row = base + k * st;
      const double l = T.lower[k], dg = T.diag[k], u = T.upper[k];
      if (k + 1 < n) {
        const double* next = row + st;
        for (long j = 0; j < st; ++j) {
          const double cur = row[j];
          row[j] = l * prev[j] + dg * cur + u * next[j];
          prev[j] = cur;
        }
      } else {
        for (long j = 0; j < st; ++j) {
          const double cur = row[j];
          row[j] = l * prev[j] + dg * cur;
          prev[j] = cur;
        }
      }
    }
  }
}

class SeparableOperator final : public LevelOperator {
 public:
  SeparableOperator(const std::vector<SeparableTerm>& terms, int d, int n, int q) : d_(d), n_(n) {
    if (terms.empty()) throw std::invalid_argument("SeparableOperator: no terms");
    for (const auto& term : terms) {
      if (static_cast<int>(term.factors.size()) != d) throw std::invalid_argument("SeparableOperator: wrong factor count");
      Term tm;
      tm.mats.resize(d);
      tm.forms.resize(d);
      for (int r = 0; r < d; ++r) {
        for (int k = 0; k <= n; ++k) {
          tm.mats[r].push_back(assemble_tridiagonal(k, term.trial_dir == r, term.test_dir == r, term.factors[r], q));
          // phi^T T phi for every phi_{k,i}, i in Xi_k (indexed by i)
          const auto& T = tm.mats[r].back();
          std::vector<double> form(static_cast<std::size_t>(level_size(k)) + 1, 0.0);
          for (long i = 1; i <= level_size(k); ++i) {
            if (!in_xi(k, i)) continue;
            const auto st = prewavelet_stencil(k, i);
            double sum = 0.0;
            for (int a = 0; a < st.count; ++a) {
              const long row = st.first + a - 1;
              double y = T.diag[row] * st.coeff[a];
              if (a > 0) y += T.lower[row] * st.coeff[a - 1];
              if (a + 1 < st.count) y += T.upper[row] * st.coeff[a + 1];
              sum += st.coeff[a] * y;
            }
            form[i] = sum;
          }
          tm.forms[r].push_back(std::move(form));
        }
      }
      terms_.push_back(std::move(tm));
    }
  }

  static SeparableOperator from_field(const CoefficientField& coeff, int n, int q) {
    if (!coeff.separable) throw std::invalid_argument("SeparableOperator: coefficient field has no separable form");
    return SeparableOperator(*coeff.separable, coeff.dim, n, q);
  }

  int dim() const override { return d_; }
  int depth() const override { return n_; }

  void apply(const MultiIndex& t, std::span<const double> in, std::span<double> out) const override {
    const BlockShape shape(t);
    if (static_cast<long>(in.size()) != shape.size || static_cast<long>(out.size()) != shape.size)
      throw std::invalid_argument("SeparableOperator: shape mismatch");
    if (t.norm() > n_) throw std::out_of_range("SeparableOperator: missing stencil level");
    thread_local std::vector<double> tmp, prev;
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& term : terms_) {
      tmp.assign(in.begin(), in.end());
      for (int r = 0; r < d_; ++r) apply_tridiagonal_along(tmp, shape, r, term.mats[r][t[r]], prev);
      for (long k = 0; k < shape.size; ++k) out[k] += tmp[k];
    }
  }

  double energy(const MultiIndex& t, std::span<const long> i) const override {
    double sum = 0.0;
    for (const auto& term : terms_) {
      double p = 1.0;
      for (int r = 0; r < d_; ++r) p *= term.forms[r][t[r]][i[r]];
      sum += p;
    }
    return sum;
  }

  StencilField stencil(const MultiIndex& t) const override {
    StencilField S(t);
    const auto& shape = S.shape;
    for (long off = 0; off < shape.size; ++off) {
      const auto i = shape.index_of(off);
      for (int o = 0; o < S.width; ++o) {
        const auto ov = offset_of(o, d_);
        double sum = 0.0;
        for (const auto& term : terms_) {
          double p = 1.0;
          for (int r = 0; r < d_ && p != 0.0; ++r) {
            const auto& T = term.mats[r][t[r]];
            const long row = i[r] - 1;
            const long col = row + ov[r];
            if (col < 0 || col >= T.size()) {
              p = 0.0;
              break;
            }
            p *= ov[r] < 0 ? T.lower[row] : (ov[r] > 0 ? T.upper[row] : T.diag[row]);
          }
          sum += p;
        }
        S.weight(off, o) = sum;
      }
    }
    return S;
  }

 private:
  struct Term {
    std::vector<std::vector<Tridiagonal>> mats;                // [direction][level]
    std::vector<std::vector<std::vector<double>>> forms;       // [direction][level][i]
  };
  int d_;
  int n_;
  std::vector<Term> terms_;
};

/// Separable fast path when available, element assembly otherwise.
inline std::unique_ptr<LevelOperator> make_level_operator(const CoefficientField& coeff, int n, int q, int threads = 1,
                                                          bool allow_separable = true) {
  if (allow_separable && coeff.separable) return std::make_unique<SeparableOperator>(SeparableOperator::from_field(coeff, n, q));
  return std::make_unique<StencilOperator>(coeff, n, q, threads);
}

}  // namespace sgprew
