#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <vector>

#include "coefficients.hpp"
#include "grid.hpp"
#include "quadrature.hpp"

namespace sgprew {

inline int num_offsets(int d) {
  int n = 1;
  for (int s = 0; s < d; ++s) n *= 3;
  return n;
}

/// Offset o in {-1,0,1}^d <-> index sum_s (o_s + 1) 3^s.
inline int offset_index(std::span<const int> o) {
  int k = 0, p = 1;
  for (int v : o) {
    k += (v + 1) * p;
    p *= 3;
  }
  return k;
}

inline std::array<int, kMaxDim> offset_of(int k, int d) {
  std::array<int, kMaxDim> o{};
  for (int s = 0; s < d; ++s) {
    o[s] = k % 3 - 1;
    k /= 3;
  }
  return o;
}

/// 3^d Galerkin couplings a(v_{t,i+o}, v_{t,i}) for every point i of level t.
struct StencilField {
  BlockShape shape;
  int width = 0;                 // 3^d
  std::vector<double> weights;   // weights[off * width + o]

  StencilField() = default;
  explicit StencilField(const MultiIndex& t)
      : shape(t), width(num_offsets(t.dim())), weights(static_cast<std::size_t>(shape.size) * width, 0.0) {}

  const MultiIndex& level() const { return shape.level; }
  double weight(long off, int o) const { return weights[static_cast<std::size_t>(off) * width + o]; }
  double& weight(long off, int o) { return weights[static_cast<std::size_t>(off) * width + o]; }
};

namespace detail {

/// Reference multilinear shape functions on [0,1]^d at tensor quadrature points.
struct ReferenceCell {
  int d = 0;
  int corners = 0;
  int points = 0;
  std::vector<double> xi;       // points x d
  std::vector<double> weight;   // points
  std::vector<double> value;    // points x corners
  std::vector<double> deriv;    // points x corners x d (reference derivatives)

  ReferenceCell(const MultiIndex& t, int q) : d(t.dim()), corners(1 << t.dim()) {
    std::array<const QuadratureRule*, kMaxDim> rule{};
    points = 1;
    for (int s = 0; s < d; ++s) {
      rule[s] = &gauss_legendre(level_quad_order(q, t[s]));
      points *= rule[s]->size();
    }
    xi.resize(static_cast<std::size_t>(points) * d);
    weight.resize(points);
    value.resize(static_cast<std::size_t>(points) * corners);
    deriv.resize(static_cast<std::size_t>(points) * corners * d);
    for (int p = 0; p < points; ++p) {
      int r = p;
      double w = 1.0;
      for (int s = 0; s < d; ++s) {
        const int qs = rule[s]->size();
        xi[p * d + s] = rule[s]->nodes[r % qs];
        w *= rule[s]->weights[r % qs];
        r /= qs;
      }
      weight[p] = w;
      for (int a = 0; a < corners; ++a) {
        double v = 1.0;
        for (int s = 0; s < d; ++s) v *= ((a >> s) & 1) ? xi[p * d + s] : 1.0 - xi[p * d + s];
        value[p * corners + a] = v;
        for (int s = 0; s < d; ++s) {
          double g = ((a >> s) & 1) ? 1.0 : -1.0;
          for (int r2 = 0; r2 < d; ++r2)
            if (r2 != s) g *= ((a >> r2) & 1) ? xi[p * d + r2] : 1.0 - xi[p * d + r2];
          deriv[(static_cast<std::size_t>(p) * corners + a) * d + s] = g;
        }
      }
    }
  }
};

/// Calls cell(c, x0) for every cell of level t; c is the 0-based lower-left
/// node index (node 0 is on the boundary), x0 the lower-left corner.
template <class F>
void for_each_cell(const BlockShape& shape, F&& cell) {
  const int d = shape.dim();
  std::array<long, kMaxDim> c{};
  long total = 1;
  for (int s = 0; s < d; ++s) total *= shape.extent[s] + 1;
  for (long k = 0; k < total; ++k) {
    cell(c);
    for (int s = 0; s < d; ++s) {
      if (++c[s] <= shape.extent[s]) break;
      c[s] = 0;
    }
  }
}

/// Storage offset of corner a of cell c, or -1 if that node is on the boundary.
inline long corner_offset(const BlockShape& shape, const std::array<long, kMaxDim>& c, int a) {
  long off = 0;
  for (int s = 0; s < shape.dim(); ++s) {
    const long node = c[s] + ((a >> s) & 1);
    if (node < 1 || node > shape.extent[s]) return -1;
    off += (node - 1) * shape.stride[s];
  }
  return off;
}

}  // namespace detail

/// Element-by-element assembly of the level-t stencil with tensor
/// Gauss-Legendre quadrature on each cell (level_quad_order points per direction).
inline StencilField assemble_stencil(const MultiIndex& t, const CoefficientField& coeff, int q) {
  if (q < 1) throw std::invalid_argument("assemble_stencil: need q >= 1");
  const int d = t.dim();
  if (coeff.dim != d) throw std::invalid_argument("assemble_stencil: dimension mismatch");
  StencilField S(t);
  const auto& shape = S.shape;
  const detail::ReferenceCell ref(t, q);
  const int nc = ref.corners;
  std::array<double, kMaxDim> h{};
  double vol = 1.0;
  for (int s = 0; s < d; ++s) {
    h[s] = mesh_size(t[s]);
    vol *= h[s];
  }
  // offset index of b - a for corner pairs
  std::vector<int> pair_offset(static_cast<std::size_t>(nc) * nc);
  for (int a = 0; a < nc; ++a)
    for (int b = 0; b < nc; ++b) {
      int k = 0, p = 1;
      for (int s = 0; s < d; ++s) {
        k += (((b >> s) & 1) - ((a >> s) & 1) + 1) * p;
        p *= 3;
      }
      pair_offset[a * nc + b] = k;
    }

  std::vector<double> E(static_cast<std::size_t>(nc) * nc);
  std::vector<double> x(d), A(d * d), G(static_cast<std::size_t>(nc) * d), AG(static_cast<std::size_t>(nc) * d);
  std::vector<long> node(nc);
  detail::for_each_cell(shape, [&](const std::array<long, kMaxDim>& c) {
    bool any = false;
    for (int a = 0; a < nc; ++a) {
      node[a] = detail::corner_offset(shape, c, a);
      any = any || node[a] >= 0;
    }
    if (!any) return;
    std::fill(E.begin(), E.end(), 0.0);
    for (int p = 0; p < ref.points; ++p) {
      for (int s = 0; s < d; ++s) x[s] = (static_cast<double>(c[s]) + ref.xi[p * d + s]) * h[s];
      coeff.diffusion_at(x, A);
      const double kappa = coeff.reaction_at(x);
      const double w = ref.weight[p] * vol;
      for (int a = 0; a < nc; ++a)
        for (int s = 0; s < d; ++s) G[a * d + s] = ref.deriv[(static_cast<std::size_t>(p) * nc + a) * d + s] / h[s];
      // AG_a = A G_a; a(u,v) uses grad(u)^T A grad(v) with u = corner b, v = corner a
      for (int a = 0; a < nc; ++a)
        for (int r = 0; r < d; ++r) {
          double sum = 0.0;
          for (int s = 0; s < d; ++s) sum += A[r * d + s] * G[a * d + s];
          AG[a * d + r] = sum;
        }
      const double* val = &ref.value[static_cast<std::size_t>(p) * nc];
      for (int a = 0; a < nc; ++a) {
        if (node[a] < 0) continue;
        for (int b = 0; b < nc; ++b) {
          if (node[b] < 0) continue;
          double sum = kappa * val[a] * val[b];
          for (int r = 0; r < d; ++r) sum += G[b * d + r] * AG[a * d + r];
          E[a * nc + b] += w * sum;
        }
      }
    }
    for (int a = 0; a < nc; ++a) {
      if (node[a] < 0) continue;
      for (int b = 0; b < nc; ++b)
        if (node[b] >= 0) S.weight(node[a], pair_offset[a * nc + b]) += E[a * nc + b];
    }
  });
  return S;
}

/// Z_i = sum_o S(i,o) U_{i+o}; neighbours outside I_t contribute 0.
inline void apply_stencil(const StencilField& S, std::span<const double> U, std::span<double> Z) {
  const auto& shape = S.shape;
  if (static_cast<long>(U.size()) != shape.size || static_cast<long>(Z.size()) != shape.size)
    throw std::invalid_argument("apply_stencil: shape mismatch");
  const int d = shape.dim();
  const int width = S.width;
  std::vector<long> delta(width);
  std::vector<std::array<int, kMaxDim>> offs(width);
  for (int o = 0; o < width; ++o) {
    offs[o] = offset_of(o, d);
    long dl = 0;
    for (int s = 0; s < d; ++s) dl += offs[o][s] * shape.stride[s];
    delta[o] = dl;
  }
  std::array<long, kMaxDim> i{};
  for (int s = 0; s < d; ++s) i[s] = 1;
  for (long off = 0; off < shape.size; ++off) {
    bool interior = true;
    for (int s = 0; s < d && interior; ++s) interior = i[s] > 1 && i[s] < shape.extent[s];
    const double* w = &S.weights[static_cast<std::size_t>(off) * width];
    double sum = 0.0;
    if (interior) {
      for (int o = 0; o < width; ++o) sum += w[o] * U[off + delta[o]];
    } else {
      for (int o = 0; o < width; ++o) {
        bool ok = true;
        for (int s = 0; s < d && ok; ++s) {
          const long j = i[s] + offs[o][s];
          ok = j >= 1 && j <= shape.extent[s];
        }
        if (ok) sum += w[o] * U[off + delta[o]];
      }
    }
    Z[off] = sum;
    for (int s = 0; s < d; ++s) {
      if (++i[s] <= shape.extent[s]) break;
      i[s] = 1;
    }
  }
}

/// Functional values int f v_{t,i} by per-cell tensor quadrature.
inline std::vector<double> assemble_load(const MultiIndex& t, const ScalarField& f, int q) {
  if (q < 1) throw std::invalid_argument("assemble_load: need q >= 1");
  const int d = t.dim();
  const BlockShape shape(t);
  std::vector<double> out(static_cast<std::size_t>(shape.size), 0.0);
  const detail::ReferenceCell ref(t, q);
  const int nc = ref.corners;
  std::array<double, kMaxDim> h{};
  double vol = 1.0;
  for (int s = 0; s < d; ++s) {
    h[s] = mesh_size(t[s]);
    vol *= h[s];
  }
  std::vector<double> x(d);
  std::vector<long> node(nc);
  detail::for_each_cell(shape, [&](const std::array<long, kMaxDim>& c) {
    bool any = false;
    for (int a = 0; a < nc; ++a) {
      node[a] = detail::corner_offset(shape, c, a);
      any = any || node[a] >= 0;
    }
    if (!any) return;
    for (int p = 0; p < ref.points; ++p) {
      for (int s = 0; s < d; ++s) x[s] = (static_cast<double>(c[s]) + ref.xi[p * d + s]) * h[s];
      const double fw = f(x) * ref.weight[p] * vol;
      for (int a = 0; a < nc; ++a)
        if (node[a] >= 0) out[node[a]] += fw * ref.value[static_cast<std::size_t>(p) * nc + a];
    }
  });
  return out;
}

/// Functional values a(u_g, v_{t,i}) by per-cell tensor quadrature.
inline std::vector<double> lifting_contribution(const MultiIndex& t, const FieldWithGradient& ug, const CoefficientField& coeff,
                                                int q) {
  if (q < 1) throw std::invalid_argument("lifting_contribution: need q >= 1");
  const int d = t.dim();
  const BlockShape shape(t);
  std::vector<double> out(static_cast<std::size_t>(shape.size), 0.0);
  if (!ug) return out;
  const detail::ReferenceCell ref(t, q);
  const int nc = ref.corners;
  std::array<double, kMaxDim> h{};
  double vol = 1.0;
  for (int s = 0; s < d; ++s) {
    h[s] = mesh_size(t[s]);
    vol *= h[s];
  }
  std::vector<double> x(d), A(d * d), Ag(d);
  std::vector<long> node(nc);
  detail::for_each_cell(shape, [&](const std::array<long, kMaxDim>& c) {
    bool any = false;
    for (int a = 0; a < nc; ++a) {
      node[a] = detail::corner_offset(shape, c, a);
      any = any || node[a] >= 0;
    }
    if (!any) return;
    for (int p = 0; p < ref.points; ++p) {
      for (int s = 0; s < d; ++s) x[s] = (static_cast<double>(c[s]) + ref.xi[p * d + s]) * h[s];
      const auto g = ug(x);
      coeff.diffusion_at(x, A);
      const double kappa = coeff.reaction_at(x);
      const double w = ref.weight[p] * vol;
      // (A^T grad u_g), contracted with grad v below
      for (int r = 0; r < d; ++r) {
        double sum = 0.0;
        for (int s = 0; s < d; ++s) sum += A[s * d + r] * g.gradient[s];
        Ag[r] = sum;
      }
      for (int a = 0; a < nc; ++a) {
        if (node[a] < 0) continue;
        double sum = kappa * g.value * ref.value[static_cast<std::size_t>(p) * nc + a];
        for (int r = 0; r < d; ++r) sum += Ag[r] * ref.deriv[(static_cast<std::size_t>(p) * nc + a) * d + r] / h[r];
        out[node[a]] += w * sum;
      }
    }
  });
  return out;
}

}  // namespace sgprew
