#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "multi_index.hpp"

namespace sgprew {

// ---------------------------------------------------------------------------
// 1-D level grids. Level k has mesh size 2^{-k-1} and interior points
// i = 1, ..., 2^{k+1}-1. Boundary points are never stored.
// ---------------------------------------------------------------------------

inline constexpr long level_size(int k) { return (2L << k) - 1; }

/// |Xi_k|: 1 on level 0, 2^k otherwise.
inline constexpr long xi_size(int k) { return k == 0 ? 1 : (1L << k); }

inline double mesh_size(int k) { return std::ldexp(1.0, -k - 1); }

/// Whether 1-based index i of level k belongs to Xi_k.
inline constexpr bool in_xi(int k, long i) { return k == 0 ? i == 1 : (i % 2) == 1; }

inline double point_coord_1d(int k, long i) { return std::ldexp(static_cast<double>(i), -k - 1); }

/// Number of pre-wavelet degrees of freedom sum_{|t|<=n} prod_s |Xi_{t_s}|.
inline std::size_t sparse_dof(int n, int d) {
  if (n < 0 || d < 1) throw std::invalid_argument("sparse_dof: need n >= 0, d >= 1");
  // count[m] = number of DOF with |t| = m, built one dimension at a time
  std::vector<std::size_t> count(n + 1, 0);
  for (int k = 0; k <= n; ++k) count[k] = static_cast<std::size_t>(xi_size(k));
  for (int s = 1; s < d; ++s) {
    std::vector<std::size_t> next(n + 1, 0);
    for (int m = 0; m <= n; ++m)
      for (int k = 0; k <= m; ++k) next[m] += count[m - k] * static_cast<std::size_t>(xi_size(k));
    count = std::move(next);
  }
  std::size_t total = 0;
  for (auto c : count) total += c;
  return total;
}

using LevelPredicate = std::function<bool(const MultiIndex&)>;

/// All levels t with |t| <= n in lexicographic order (first component most
/// significant), optionally filtered.
inline std::vector<MultiIndex> iterate_levels(int n, int d, const LevelPredicate& keep = {}) {
  if (d < 1 || d > kMaxDim) throw std::invalid_argument("iterate_levels: bad dimension");
  std::vector<MultiIndex> out;
  if (n < 0) return out;
  MultiIndex t(d, 0);
  auto rec = [&](auto&& self, int s, int budget) -> void {
    if (s == d) {
      if (!keep || keep(t)) out.push_back(t);
      return;
    }
    for (int k = 0; k <= budget; ++k) {
      t[s] = k;
      self(self, s + 1, budget - k);
    }
    t[s] = 0;
  };
  rec(rec, 0, n);
  return out;
}

/// Coordinates of grid point i (1-based per direction) on level t.
inline std::vector<double> point_coords(const MultiIndex& t, std::span<const long> i) {
  if (static_cast<int>(i.size()) != t.dim()) throw std::invalid_argument("point_coords: dimension mismatch");
  std::vector<double> x(t.dim());
  for (int s = 0; s < t.dim(); ++s) {
    if (i[s] < 1 || i[s] > level_size(t[s])) throw std::out_of_range("point_coords: index out of range");
    x[s] = point_coord_1d(t[s], i[s]);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Semi-coarsened full grid blocks.
// ---------------------------------------------------------------------------

/// Extents and strides of the dense array over I_t; direction 0 varies fastest.
struct BlockShape {
  MultiIndex level;
  std::array<long, kMaxDim> extent{};
  std::array<long, kMaxDim> stride{};
  long size = 0;

  BlockShape() = default;
  explicit BlockShape(const MultiIndex& t) : level(t) {
    long s = 1;
    for (int k = 0; k < t.dim(); ++k) {
      extent[k] = level_size(t[k]);
      stride[k] = s;
      s *= extent[k];
    }
    size = s;
  }

  int dim() const { return level.dim(); }

  /// Offset of the 1-based point index i.
  long offset(std::span<const long> i) const {
    long off = 0;
    for (int k = 0; k < dim(); ++k) off += (i[k] - 1) * stride[k];
    return off;
  }

  /// 1-based point index of storage offset `off`.
  std::array<long, kMaxDim> index_of(long off) const {
    std::array<long, kMaxDim> i{};
    for (int k = 0; k < dim(); ++k) {
      i[k] = off % extent[k] + 1;
      off /= extent[k];
    }
    return i;
  }
};

enum class ValueFormat { NodalCoeff, PrewaveletCoeff, Functional };

inline const char* to_string(ValueFormat f) {
  switch (f) {
    case ValueFormat::NodalCoeff: return "nodal";
    case ValueFormat::PrewaveletCoeff: return "prewavelet";
    case ValueFormat::Functional: return "functional";
  }
  return "?";
}

/// Dense values over I_t with a tag recording how they were set.
class LevelBlock {
 public:
  LevelBlock() = default;
  LevelBlock(const MultiIndex& t, ValueFormat format)
      : shape_(t), format_(format), values_(static_cast<std::size_t>(shape_.size), 0.0) {}

  const MultiIndex& level() const { return shape_.level; }
  const BlockShape& shape() const { return shape_; }
  ValueFormat format() const { return format_; }
  void set_format(ValueFormat f) { format_ = f; }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

 private:
  BlockShape shape_;
  ValueFormat format_ = ValueFormat::NodalCoeff;
  std::vector<double> values_;
};

/// One LevelBlock for every level |t| <= n.
class SparseGridArray {
 public:
  SparseGridArray() = default;

  SparseGridArray(int n, int d, ValueFormat format) : n_(n), d_(d) {
    if (n < 0 || d < 1 || d > kMaxDim) throw std::invalid_argument("SparseGridArray: bad depth or dimension");
    double table = std::pow(static_cast<double>(n + 1), d);
    if (table > 5e7) throw std::invalid_argument("SparseGridArray: depth/dimension too large");
    lookup_.assign(static_cast<std::size_t>(table), -1);
    for (const auto& t : iterate_levels(n, d)) {
      lookup_[key(t)] = static_cast<int>(blocks_.size());
      blocks_.emplace_back(t, format);
    }
    dof_offset_.resize(blocks_.size() + 1, 0);
    xi_offsets_.resize(blocks_.size());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const auto& shape = blocks_[b].shape();
      auto& offs = xi_offsets_[b];
      for (long off = 0; off < shape.size; ++off) {
        auto i = shape.index_of(off);
        bool keep = true;
        for (int s = 0; s < d && keep; ++s) keep = in_xi(shape.level[s], i[s]);
        if (keep) offs.push_back(off);
      }
      dof_offset_[b + 1] = dof_offset_[b] + offs.size();
    }
  }

  int depth() const { return n_; }
  int dim() const { return d_; }
  std::size_t num_blocks() const { return blocks_.size(); }
  std::size_t dof() const { return dof_offset_.back(); }

  LevelBlock& block(std::size_t b) { return blocks_[b]; }
  const LevelBlock& block(std::size_t b) const { return blocks_[b]; }

  /// Block index of level t, or -1 when |t| > n.
  int find(const MultiIndex& t) const {
    if (t.dim() != d_ || t.norm() > n_) return -1;
    return lookup_[key(t)];
  }
  bool contains(const MultiIndex& t) const { return find(t) >= 0; }

  LevelBlock& at(const MultiIndex& t) {
    int b = find(t);
    if (b < 0) throw std::out_of_range("SparseGridArray: level not stored");
    return blocks_[b];
  }
  const LevelBlock& at(const MultiIndex& t) const { return const_cast<SparseGridArray*>(this)->at(t); }

  /// Storage offsets of the Xi_t points of block b.
  std::span<const long> xi_offsets(std::size_t b) const { return xi_offsets_[b]; }
  std::size_t dof_begin(std::size_t b) const { return dof_offset_[b]; }

  void set_format(ValueFormat f) {
    for (auto& blk : blocks_) blk.set_format(f);
  }

  /// Format shared by all blocks; throws if they disagree.
  ValueFormat format() const {
    if (blocks_.empty()) return ValueFormat::NodalCoeff;
    ValueFormat f = blocks_.front().format();
    for (const auto& blk : blocks_)
      if (blk.format() != f) throw std::logic_error("SparseGridArray: mixed block formats");
    return f;
  }

  void fill(double v) {
    for (auto& blk : blocks_) std::ranges::fill(blk.values(), v);
  }

  /// Compact vector of the Xi_t entries of every block (one entry per DOF).
  std::vector<double> gather_xi() const {
    std::vector<double> out(dof());
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      auto vals = blocks_[b].values();
      auto offs = xi_offsets(b);
      for (std::size_t k = 0; k < offs.size(); ++k) out[dof_offset_[b] + k] = vals[offs[k]];
    }
    return out;
  }

  /// Inverse of gather_xi: writes Xi_t entries, zeros everything else.
  void scatter_xi(std::span<const double> compact) {
    if (compact.size() != dof()) throw std::invalid_argument("scatter_xi: length mismatch");
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      auto vals = blocks_[b].values();
      std::ranges::fill(vals, 0.0);
      auto offs = xi_offsets(b);
      for (std::size_t k = 0; k < offs.size(); ++k) vals[offs[k]] = compact[dof_offset_[b] + k];
    }
  }

  /// Total stored values over all blocks.
  std::size_t storage_size() const {
    std::size_t s = 0;
    for (const auto& blk : blocks_) s += blk.size();
    return s;
  }

 private:
  std::size_t key(const MultiIndex& t) const {
    std::size_t k = 0;
    for (int s = d_ - 1; s >= 0; --s) k = k * static_cast<std::size_t>(n_ + 1) + static_cast<std::size_t>(t[s]);
    return k;
  }

  int n_ = 0;
  int d_ = 0;
  std::vector<LevelBlock> blocks_;
  std::vector<int> lookup_;
  std::vector<std::vector<long>> xi_offsets_;
  std::vector<std::size_t> dof_offset_;
};

}  // namespace sgprew
