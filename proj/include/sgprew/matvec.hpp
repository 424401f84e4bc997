#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "basis1d.hpp"
#include "fiber.hpp"
#include "grid.hpp"
#include "operator.hpp"
#include "parallel.hpp"

namespace sgprew {

/// One of the 2^d passes. Direction s is a restriction direction (s in R)
/// when the trial level is strictly finer than the test level in s.
struct PassPlan {
  unsigned mask = 0;
  int dim = 0;

  bool restricts(int s) const { return (mask >> s) & 1u; }
  int num_restrictions() const { return std::popcount(mask); }

  /// Whether the ordered pair (test t, trial tp) belongs to this pass.
  bool covers(const MultiIndex& t, const MultiIndex& tp) const {
    for (int s = 0; s < dim; ++s)
      if (restricts(s) != (tp[s] > t[s])) return false;
    return true;
  }

  /// All passes in binary-counter order of R.
  static std::vector<PassPlan> all(int d) {
    std::vector<PassPlan> out;
    for (unsigned m = 0; m < (1u << d); ++m) out.push_back({m, d});
    return out;
  }
};

namespace detail {

/// Contribution of a single pass: functionals on every Xi_t, compact order.
inline void semiortho_pass(const SparseGridArray& layout, std::span<const double> x, const LevelOperator& op,
                           const PassPlan& pass, std::span<double> out) {
  const int d = layout.dim();
  const std::size_t nb = layout.num_blocks();
  SparseGridArray A = layout;
  A.scatter_xi(x);

  // trial side: pre-wavelet coefficients -> nodal values on level m, summed over
  // trial levels at or below m in directions outside R
  for (int s = 0; s < d; ++s) {
    for (std::size_t b = 0; b < nb; ++b) {  // t - e_s precedes t in storage order
      auto& blk = A.block(b);
      const auto& t = blk.level();
      synthesis_block(blk.values(), blk.shape(), s);
      if (!pass.restricts(s) && t[s] > 0) {
        const auto& c = A.at(t.lowered(s));
        prolong_block(c.values(), c.shape(), blk.values(), blk.shape(), s, FiberWrite::Add);
      }
    }
  }

  // level stencils
  SparseGridArray Z = layout;
  for (std::size_t b = 0; b < nb; ++b) op.apply(A.block(b).level(), A.block(b).values(), Z.block(b).values());

  // test side: functionals on level m, restricted to strictly coarser test
  // levels in directions of R
  SparseGridArray& G = A;
  std::vector<double> sum;
  for (int s = 0; s < d; ++s) {
    if (!pass.restricts(s)) continue;
    for (std::size_t b = nb; b-- > 0;) {  // t + e_s is processed before t
      auto& g = G.block(b);
      const auto up = g.level().raised(s);
      const int bu = layout.find(up);
      if (bu < 0) {
        std::ranges::fill(g.values(), 0.0);
        continue;
      }
      const auto z = Z.block(bu).values();
      const auto gu = G.block(bu).values();
      sum.resize(z.size());
      for (std::size_t k = 0; k < z.size(); ++k) sum[k] = z[k] + gu[k];
      restrict_block(sum, BlockShape(up), g.values(), g.shape(), s, FiberWrite::Assign);
    }
    std::swap(G, Z);
  }

  // nodal functionals -> pre-wavelet test functions
  for (std::size_t b = 0; b < nb; ++b) {
    auto& blk = Z.block(b);
    for (int s = 0; s < d; ++s) dual_block(blk.values(), blk.shape(), s);
    const auto vals = blk.values();
    const auto offs = layout.xi_offsets(b);
    const std::size_t begin = layout.dof_begin(b);
    for (std::size_t k = 0; k < offs.size(); ++k) out[begin + k] = vals[offs[k]];
  }
}

}  // namespace detail

/// y = A_n x for the semi-orthogonal stiffness matrix, x and y in compact
/// DOF order of a SparseGridArray(n, d). Passes are reduced in canonical
/// order, so the result does not depend on the thread count.
class SemiOrthoMatvec {
 public:
  SemiOrthoMatvec(const LevelOperator& op, int n, int threads = 1)
      : op_(op), layout_(n, op.dim(), ValueFormat::PrewaveletCoeff), threads_(threads) {
    if (op.depth() < n) throw std::out_of_range("semiortho_matvec: missing stencil level");
  }

  std::size_t dof() const { return layout_.dof(); }
  const SparseGridArray& layout() const { return layout_; }

  void operator()(std::span<const double> x, std::span<double> y) const { apply(x, y, PassPlan::all(layout_.dim())); }

  void apply(std::span<const double> x, std::span<double> y, const std::vector<PassPlan>& passes) const {
    if (x.size() != dof() || y.size() != dof()) throw std::invalid_argument("semiortho_matvec: length mismatch");
    std::ranges::fill(y, 0.0);
    if (threads_ <= 1 || passes.size() <= 1) {
      std::vector<double> part(dof());
      for (const auto& p : passes) {
        detail::semiortho_pass(layout_, x, op_, p, part);
        for (std::size_t k = 0; k < part.size(); ++k) y[k] += part[k];
      }
      return;
    }
    std::vector<std::vector<double>> parts(passes.size(), std::vector<double>(dof()));
    parallel_for(passes.size(), threads_,
                 [&](std::size_t k) { detail::semiortho_pass(layout_, x, op_, passes[k], parts[k]); });
    for (const auto& part : parts)
      for (std::size_t k = 0; k < part.size(); ++k) y[k] += part[k];
  }

 private:
  const LevelOperator& op_;
  SparseGridArray layout_;
  int threads_;
};

/// Functionals F = A_n U for U in pre-wavelet format.
inline SparseGridArray semiortho_matvec(const SparseGridArray& U, const LevelOperator& op, int threads = 1) {
  if (U.format() != ValueFormat::PrewaveletCoeff) throw std::invalid_argument("semiortho_matvec: expected pre-wavelet coefficients");
  SemiOrthoMatvec mv(op, U.depth(), threads);
  const auto x = U.gather_xi();
  std::vector<double> y(x.size());
  mv(x, y);
  SparseGridArray F(U.depth(), U.dim(), ValueFormat::Functional);
  F.scatter_xi(y);
  return F;
}

/// a(phi_{t,i}, phi_{t,i}) for every DOF in compact order.
inline std::vector<double> semiortho_diagonal(int n, const LevelOperator& op) {
  const SparseGridArray layout(n, op.dim(), ValueFormat::PrewaveletCoeff);
  std::vector<double> diag(layout.dof());
  for (std::size_t b = 0; b < layout.num_blocks(); ++b) {
    const auto& shape = layout.block(b).shape();
    const auto offs = layout.xi_offsets(b);
    for (std::size_t k = 0; k < offs.size(); ++k) {
      const auto i = shape.index_of(offs[k]);
      diag[layout.dof_begin(b) + k] = op.energy(shape.level, std::span<const long>(i.data(), shape.dim()));
    }
  }
  return diag;
}

/// Level and point index of every DOF in compact order.
struct DofEntry {
  MultiIndex level;
  std::array<long, kMaxDim> index{};
};

inline std::vector<DofEntry> dof_table(const SparseGridArray& layout) {
  std::vector<DofEntry> out;
  out.reserve(layout.dof());
  for (std::size_t b = 0; b < layout.num_blocks(); ++b) {
    const auto& shape = layout.block(b).shape();
    for (long off : layout.xi_offsets(b)) out.push_back({shape.level, shape.index_of(off)});
  }
  return out;
}

/// Nodal coefficients of phi_{t,i} on the finer level m (dense block over I_m).
inline std::vector<double> prewavelet_on_level(const MultiIndex& t, std::span<const long> i, const MultiIndex& m) {
  const int d = t.dim();
  const BlockShape shape(m);
  std::vector<std::vector<double>> f(d);
  for (int s = 0; s < d; ++s) f[s] = nodal_expansion_1d(Basis1D::Prewavelet, t[s], i[s], m[s]);
  std::vector<double> out(static_cast<std::size_t>(shape.size));
  for (long off = 0; off < shape.size; ++off) {
    long r = off;
    double p = 1.0;
    for (int s = 0; s < d && p != 0.0; ++s) {
      p *= f[s][r % shape.extent[s]];
      r /= shape.extent[s];
    }
    out[off] = p;
  }
  return out;
}

/// Dense Galerkin matrix in compact DOF order by expansion on level max(t,t').
/// Entries with |max(t,t')| > n are 0 when `drop_outside` is set; otherwise
/// `op` must cover those levels.
inline Eigen::MatrixXd assemble_dense(int n, const LevelOperator& op, std::size_t cap = 20000, bool drop_outside = true) {
  const SparseGridArray layout(n, op.dim(), ValueFormat::PrewaveletCoeff);
  const std::size_t N = layout.dof();
  if (N > cap) throw std::length_error("assemble_dense: DOF cap exceeded");
  const auto dofs = dof_table(layout);
  const int d = op.dim();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  for (std::size_t col = 0; col < N; ++col) {
    const auto& tc = dofs[col];
    std::map<MultiIndex, std::vector<double>> z_cache;  // a(phi_col, v_{m,.}) per level m
    for (std::size_t row = 0; row < N; ++row) {
      const auto& tr = dofs[row];
      const auto m = max(tr.level, tc.level);
      if (m.norm() > n && drop_outside) continue;
      auto it = z_cache.find(m);
      if (it == z_cache.end()) {
        const auto u = prewavelet_on_level(tc.level, std::span<const long>(tc.index.data(), d), m);
        std::vector<double> z(u.size());
        op.apply(m, u, z);
        it = z_cache.emplace(m, std::move(z)).first;
      }
      const auto v = prewavelet_on_level(tr.level, std::span<const long>(tr.index.data(), d), m);
      double sum = 0.0;
      for (std::size_t k = 0; k < v.size(); ++k) sum += v[k] * it->second[k];
      M(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = sum;
    }
  }
  return M;
}

}  // namespace sgprew
