#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <compare>
#include <initializer_list>
#include <ostream>
#include <span>
#include <stdexcept>

namespace sgprew {

inline constexpr int kMaxDim = 12;

/// Level vector t = (t_1, ..., t_d) of a semi-coarsened grid.
///
/// Ordering via operator<=> is lexicographic (first component most
/// significant) and only used for containers and iteration order; the
/// componentwise partial order is `componentwise_le`.
class MultiIndex {
 public:
  MultiIndex() = default;

  explicit MultiIndex(int dim, int fill = 0) : dim_(dim) {
    if (dim < 0 || dim > kMaxDim) throw std::invalid_argument("MultiIndex: dimension out of range");
    if (fill < 0) throw std::invalid_argument("MultiIndex: negative level");
    std::fill_n(v_.begin(), dim, fill);
  }

  MultiIndex(std::initializer_list<int> values) : dim_(static_cast<int>(values.size())) {
    if (dim_ > kMaxDim) throw std::invalid_argument("MultiIndex: dimension out of range");
    std::copy(values.begin(), values.end(), v_.begin());
    for (int s = 0; s < dim_; ++s)
      if (v_[s] < 0) throw std::invalid_argument("MultiIndex: negative level");
  }

  int dim() const { return dim_; }
  int operator[](int s) const { return v_[s]; }
  int& operator[](int s) { return v_[s]; }
  std::span<const int> components() const { return {v_.data(), static_cast<std::size_t>(dim_)}; }

  /// |t| = sum of all components.
  int norm() const { return partial_norm(dim_); }

  /// |t|_dbar = sum of the first `dbar` components.
  int partial_norm(int dbar) const {
    int sum = 0;
    for (int s = 0; s < dbar; ++s) sum += v_[s];
    return sum;
  }

  int max_component() const {
    int m = 0;
    for (int s = 0; s < dim_; ++s) m = std::max(m, v_[s]);
    return m;
  }

  /// t + e_s
  MultiIndex raised(int s) const {
    MultiIndex r = *this;
    ++r.v_[s];
    return r;
  }

  /// t - e_s; caller guarantees t_s > 0.
  MultiIndex lowered(int s) const {
    assert(v_[s] > 0);
    MultiIndex r = *this;
    --r.v_[s];
    return r;
  }

  friend bool operator==(const MultiIndex& a, const MultiIndex& b) {
    return a.dim_ == b.dim_ && std::equal(a.v_.begin(), a.v_.begin() + a.dim_, b.v_.begin());
  }

  friend std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b) {
    if (auto c = a.dim_ <=> b.dim_; c != 0) return c;
    for (int s = 0; s < a.dim_; ++s)
      if (auto c = a.v_[s] <=> b.v_[s]; c != 0) return c;
    return std::strong_ordering::equal;
  }

  friend std::ostream& operator<<(std::ostream& os, const MultiIndex& t) {
    os << '(';
    for (int s = 0; s < t.dim_; ++s) os << (s ? "," : "") << t.v_[s];
    return os << ')';
  }

 private:
  std::array<int, kMaxDim> v_{};
  int dim_ = 0;
};

/// Componentwise maximum.
inline MultiIndex max(const MultiIndex& a, const MultiIndex& b) {
  assert(a.dim() == b.dim());
  MultiIndex r = a;
  for (int s = 0; s < a.dim(); ++s) r[s] = std::max(a[s], b[s]);
  return r;
}

/// t <= t' in every component.
inline bool componentwise_le(const MultiIndex& a, const MultiIndex& b) {
  assert(a.dim() == b.dim());
  for (int s = 0; s < a.dim(); ++s)
    if (a[s] > b[s]) return false;
  return true;
}

}  // namespace sgprew
