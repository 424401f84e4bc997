#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "basis1d.hpp"
#include "grid.hpp"

namespace sgprew {

enum class FiberWrite { Assign, Add, Subtract };

/// Runs `kernel(in_fiber, out_fiber)` on every 1-D fiber along direction
/// `dir`. Input and output shapes may differ only in direction `dir`.
/// Fibers are gathered into contiguous scratch buffers.
template <class Kernel>
void apply_along(std::span<const double> in, const BlockShape& in_shape, std::span<double> out, const BlockShape& out_shape,
                 int dir, FiberWrite mode, Kernel&& kernel) {
  const int d = in_shape.dim();
  if (out_shape.dim() != d) throw std::invalid_argument("apply_along: dimension mismatch");
  for (int s = 0; s < d; ++s)
    if (s != dir && in_shape.extent[s] != out_shape.extent[s]) throw std::invalid_argument("apply_along: shape mismatch");
  const long n_in = in_shape.extent[dir];
  const long n_out = out_shape.extent[dir];
  const long si = in_shape.stride[dir];
  const long so = out_shape.stride[dir];
  std::vector<double> buf_in(static_cast<std::size_t>(n_in));
  std::vector<double> buf_out(static_cast<std::size_t>(n_out));

  long fibers = 1;
  for (int s = 0; s < d; ++s)
    if (s != dir) fibers *= in_shape.extent[s];

  std::array<long, kMaxDim> idx{};
  for (long f = 0; f < fibers; ++f) {
    long base_in = 0;
    long base_out = 0;
    for (int s = 0; s < d; ++s) {
      base_in += idx[s] * in_shape.stride[s];
      base_out += idx[s] * out_shape.stride[s];
    }
    for (long k = 0; k < n_in; ++k) buf_in[k] = in[base_in + k * si];
    kernel(std::span<const double>(buf_in), std::span<double>(buf_out));
    switch (mode) {
      case FiberWrite::Assign:
        for (long k = 0; k < n_out; ++k) out[base_out + k * so] = buf_out[k];
        break;
      case FiberWrite::Add:
        for (long k = 0; k < n_out; ++k) out[base_out + k * so] += buf_out[k];
        break;
      case FiberWrite::Subtract:
        for (long k = 0; k < n_out; ++k) out[base_out + k * so] -= buf_out[k];
        break;
    }
    for (int s = 0; s < d; ++s) {
      if (s == dir) continue;
      if (++idx[s] < in_shape.extent[s]) break;
      idx[s] = 0;
    }
  }
}

/// In-place variant for kernels that keep the fiber length.
template <class Kernel>
void apply_along_inplace(std::span<double> data, const BlockShape& shape, int dir, Kernel&& kernel) {
  const int d = shape.dim();
  const long n = shape.extent[dir];
  const long st = shape.stride[dir];
  std::vector<double> buf(static_cast<std::size_t>(n));
  long fibers = shape.size / n;
  std::array<long, kMaxDim> idx{};
  for (long f = 0; f < fibers; ++f) {
    long base = 0;
    for (int s = 0; s < d; ++s) base += idx[s] * shape.stride[s];
    for (long k = 0; k < n; ++k) buf[k] = data[base + k * st];
    kernel(std::span<double>(buf));
    for (long k = 0; k < n; ++k) data[base + k * st] = buf[k];
    for (int s = 0; s < d; ++s) {
      if (s == dir) continue;
      if (++idx[s] < shape.extent[s]) break;
      idx[s] = 0;
    }
  }
}

// Block-level wrappers over the 1-D kernels.

inline void prolong_block(std::span<const double> coarse, const BlockShape& coarse_shape, std::span<double> fine,
                          const BlockShape& fine_shape, int dir, FiberWrite mode) {
  apply_along(coarse, coarse_shape, fine, fine_shape, dir, mode,
              [](std::span<const double> c, std::span<double> f) { prolong_1d(c, f); });
}

inline void restrict_block(std::span<const double> fine, const BlockShape& fine_shape, std::span<double> coarse,
                           const BlockShape& coarse_shape, int dir, FiberWrite mode) {
  apply_along(fine, fine_shape, coarse, coarse_shape, dir, mode,
              [](std::span<const double> f, std::span<double> c) { restrict_1d(f, c); });
}

inline void inject_block(std::span<const double> fine, const BlockShape& fine_shape, std::span<double> coarse,
                         const BlockShape& coarse_shape, int dir, FiberWrite mode) {
  apply_along(fine, fine_shape, coarse, coarse_shape, dir, mode,
              [](std::span<const double> f, std::span<double> c) { inject_1d(f, c); });
}

inline void synthesis_block(std::span<double> data, const BlockShape& shape, int dir) {
  const int t = shape.level[dir];
  if (t == 0) return;
  std::vector<double> tmp(static_cast<std::size_t>(shape.extent[dir]));
  apply_along_inplace(data, shape, dir, [&](std::span<double> fib) {
    prewavelet_synthesis_1d(t, fib, tmp);
    std::copy(tmp.begin(), tmp.end(), fib.begin());
  });
}

inline void analysis_block(std::span<double> data, const BlockShape& shape, int dir) {
  const int t = shape.level[dir];
  if (t == 0) return;
  const auto& m = BandedBasisMatrix::for_level(t);
  apply_along_inplace(data, shape, dir, [&](std::span<double> fib) {
    m.solve(fib);
    for (std::size_t j = 1; j < fib.size(); j += 2) fib[j] = 0.0;
  });
}

inline void dual_block(std::span<double> data, const BlockShape& shape, int dir) {
  const int t = shape.level[dir];
  if (t == 0) return;
  std::vector<double> tmp(static_cast<std::size_t>(shape.extent[dir]));
  apply_along_inplace(data, shape, dir, [&](std::span<double> fib) {
    prewavelet_dual_stencil_1d(t, fib, tmp);
    std::copy(tmp.begin(), tmp.end(), fib.begin());
  });
}

}  // namespace sgprew
