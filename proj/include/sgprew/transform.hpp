#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "basis1d.hpp"
#include "fiber.hpp"
#include "grid.hpp"

namespace sgprew {

namespace detail {

/// Levels t with t[dir] = tdir, components above dir copied from `base` and
/// sum of components below dir <= budget (or == budget when `exact`).
inline std::vector<MultiIndex> sublevels(const MultiIndex& base, int dir, int tdir, int budget, bool exact) {
  std::vector<MultiIndex> out;
  if (budget < 0) return out;
  MultiIndex t = base;
  t[dir] = tdir;
  auto rec = [&](auto&& self, int s, int left) -> void {
    if (s == dir) {
      if (!exact || left == 0) out.push_back(t);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      t[s] = k;
      self(self, s + 1, left - k);
    }
    t[s] = 0;
  };
  rec(rec, 0, budget);
  return out;
}

/// Scratch blocks indexed like the blocks of a SparseGridArray.
class ScratchBlocks {
 public:
  explicit ScratchBlocks(const SparseGridArray& grid) : grid_(grid), data_(grid.num_blocks()) {}

  std::vector<double>& operator[](const MultiIndex& t) {
    auto& v = data_[index(t)];
    if (v.empty()) v.assign(grid_.at(t).size(), 0.0);
    return v;
  }
  void release() {
    for (auto& v : data_) std::vector<double>().swap(v);
  }

 private:
  std::size_t index(const MultiIndex& t) const {
    int b = grid_.find(t);
    if (b < 0) throw std::out_of_range("ScratchBlocks: level outside sparse grid");
    return static_cast<std::size_t>(b);
  }
  const SparseGridArray& grid_;
  std::vector<std::vector<double>> data_;
};

/// Signed combination sum_{alpha != 0} (-1)^{|alpha|+1} I_t(W_{t-alpha}) over
/// binary offsets alpha in directions 0 .. dir-1.
inline void combine_from_neighbours(ScratchBlocks& w, const MultiIndex& t, int dir, std::vector<double>& out) {
  const BlockShape target(t);
  out.assign(static_cast<std::size_t>(target.size), 0.0);
  std::vector<double> cur, next;
  for (unsigned alpha = 1; alpha < (1u << dir); ++alpha) {
    bool valid = true;
    int bits = 0;
    for (int s = 0; s < dir; ++s)
      if (alpha & (1u << s)) {
        valid = valid && t[s] > 0;
        ++bits;
      }
    if (!valid) continue;
    MultiIndex lvl = t;
    for (int s = 0; s < dir; ++s)
      if (alpha & (1u << s)) lvl[s] -= 1;
    cur = w[lvl];
    for (int s = 0; s < dir; ++s) {
      if (!(alpha & (1u << s))) continue;
      const BlockShape from(lvl);
      lvl[s] += 1;
      const BlockShape to(lvl);
      next.assign(static_cast<std::size_t>(to.size), 0.0);
      prolong_block(cur, from, next, to, s, FiberWrite::Assign);
      cur.swap(next);
    }
    const double sign = (bits % 2 == 1) ? 1.0 : -1.0;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += sign * cur[k];
  }
}

inline void decompose_rec(SparseGridArray& u, ScratchBlocks& w, int dbar, int m, const MultiIndex& base) {
  const int dir = dbar - 1;
  for (int tb = m; tb >= 0; --tb) {
    // 1. pre-wavelet coefficients in direction dir
    const auto top = sublevels(base, dir, tb, m - tb, false);
    for (const auto& t : top) {
      auto& blk = u.at(t);
      analysis_block(blk.values(), blk.shape(), dir);
      auto& wt = w[t];
      std::copy(blk.values().begin(), blk.values().end(), wt.begin());
      if (tb > 0) synthesis_block(wt, blk.shape(), dir);  // surplus as nodal values in dir
    }
    // 2. subtract the surplus from all coarser levels in direction dir
    std::vector<double> comb;
    for (int tp = tb; tp >= 1; --tp) {
      for (const auto& t : sublevels(base, dir, tp, m - tp, false)) {
        const auto c = t.lowered(dir);
        auto& wc = w[c];
        inject_block(w[t], BlockShape(t), wc, BlockShape(c), dir, FiberWrite::Assign);
        auto vals = u.at(c).values();
        for (std::size_t k = 0; k < vals.size(); ++k) vals[k] -= wc[k];
      }
      if (dbar > 1) {
        for (const auto& t : sublevels(base, dir, tp - 1, m - tp + 1, true)) {
          combine_from_neighbours(w, t, dir, comb);
          w[t] = comb;
          auto vals = u.at(t).values();
          for (std::size_t k = 0; k < vals.size(); ++k) vals[k] -= comb[k];
        }
      }
    }
    w.release();
    // 3. recursion into the lower directions
    if (dbar > 1 && m - tb > 0) {
      MultiIndex sub = base;
      sub[dir] = tb;
      decompose_rec(u, w, dbar - 1, m - tb, sub);
    }
  }
}

inline void reconstruct_rec(SparseGridArray& u, ScratchBlocks& w, int dbar, int m, const MultiIndex& base) {
  const int dir = dbar - 1;
  for (int tb = 0; tb <= m; ++tb) {
    // 1. recursion into the lower directions
    if (dbar > 1 && m - tb > 0) {
      MultiIndex sub = base;
      sub[dir] = tb;
      reconstruct_rec(u, w, dbar - 1, m - tb, sub);
    }
    if (tb == 0) continue;
    // 2. back transform in direction dir, adding the coarser part
    for (const auto& t : sublevels(base, dir, tb, m - tb, false)) {
      auto& blk = u.at(t);
      auto& wt = w[t];
      std::copy(blk.values().begin(), blk.values().end(), wt.begin());
      synthesis_block(wt, blk.shape(), dir);
      std::copy(wt.begin(), wt.end(), blk.values().begin());
      const auto c = t.lowered(dir);
      prolong_block(u.at(c).values(), BlockShape(c), blk.values(), blk.shape(), dir, FiberWrite::Add);
    }
    // 3. add the surplus on all coarser levels in direction dir
    std::vector<double> comb;
    for (int tp = tb; tp >= 1; --tp) {
      for (const auto& t : sublevels(base, dir, tp, m - tp, false)) {
        const auto c = t.lowered(dir);
        auto& wc = w[c];
        inject_block(w[t], BlockShape(t), wc, BlockShape(c), dir, FiberWrite::Assign);
        auto vals = u.at(c).values();
        for (std::size_t k = 0; k < vals.size(); ++k) vals[k] += wc[k];
      }
      if (dbar > 1) {
        for (const auto& t : sublevels(base, dir, tp - 1, m - tp + 1, true)) {
          combine_from_neighbours(w, t, dir, comb);
          w[t] = comb;
          auto vals = u.at(t).values();
          for (std::size_t k = 0; k < vals.size(); ++k) vals[k] += comb[k];
        }
      }
    }
    w.release();
  }
}

}  // namespace detail

/// Point values at every sparse grid point -> pre-wavelet coefficients of the
/// sparse grid interpolant. Directions are processed from the last to the
/// first, levels from fine to coarse.
inline void decompose(SparseGridArray& u) {
  if (u.format() != ValueFormat::NodalCoeff) throw std::invalid_argument("decompose: expected nodal point values");
  detail::ScratchBlocks w(u);
  detail::decompose_rec(u, w, u.dim(), u.depth(), MultiIndex(u.dim(), 0));
  u.set_format(ValueFormat::PrewaveletCoeff);
}

/// Inverse of decompose: pre-wavelet coefficients -> point values.
inline void reconstruct(SparseGridArray& u) {
  if (u.format() != ValueFormat::PrewaveletCoeff) throw std::invalid_argument("reconstruct: expected pre-wavelet coefficients");
  detail::ScratchBlocks w(u);
  detail::reconstruct_rec(u, w, u.dim(), u.depth(), MultiIndex(u.dim(), 0));
  u.set_format(ValueFormat::NodalCoeff);
}

/// Samples f at every point of every block, tagged as point values.
template <class F>
SparseGridArray sample(int n, int d, F&& f) {
  SparseGridArray u(n, d, ValueFormat::NodalCoeff);
  std::vector<double> x(d);
  for (std::size_t b = 0; b < u.num_blocks(); ++b) {
    auto& blk = u.block(b);
    const auto& shape = blk.shape();
    auto vals = blk.values();
    for (long off = 0; off < shape.size; ++off) {
      auto i = shape.index_of(off);
      for (int s = 0; s < d; ++s) x[s] = point_coord_1d(shape.level[s], i[s]);
      vals[off] = f(std::span<const double>(x));
    }
  }
  return u;
}

/// sum c_{t,i} phi_{t,i}(x) for coefficients in pre-wavelet format.
inline double evaluate_at(const SparseGridArray& c, std::span<const double> x) {
  if (c.format() != ValueFormat::PrewaveletCoeff) throw std::invalid_argument("evaluate_at: expected pre-wavelet coefficients");
  const int d = c.dim();
  if (static_cast<int>(x.size()) != d) throw std::invalid_argument("evaluate_at: dimension mismatch");
  for (double xs : x)
    if (!(xs >= 0.0 && xs <= 1.0)) throw std::out_of_range("evaluate_at: point outside the unit cube");
  // phi values per direction and 1-D level, indexed by 1-based i
  std::vector<std::vector<std::vector<double>>> phi(d, std::vector<std::vector<double>>(c.depth() + 1));
  for (int s = 0; s < d; ++s)
    for (int k = 0; k <= c.depth(); ++k) {
      auto& v = phi[s][k];
      v.assign(static_cast<std::size_t>(level_size(k)) + 1, 0.0);
      for (long i = 1; i <= level_size(k); i += (k == 0 ? 1 : 2)) v[i] = prewavelet_value(k, i, x[s]);
    }
  double sum = 0.0;
  for (std::size_t b = 0; b < c.num_blocks(); ++b) {
    const auto& blk = c.block(b);
    const auto& shape = blk.shape();
    auto vals = blk.values();
    for (long off : c.xi_offsets(b)) {
      if (vals[off] == 0.0) continue;
      auto i = shape.index_of(off);
      double p = vals[off];
      for (int s = 0; s < d && p != 0.0; ++s) p *= phi[s][shape.level[s]][i[s]];
      sum += p;
    }
  }
  return sum;
}

}  // namespace sgprew
