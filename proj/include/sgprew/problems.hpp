#pragma once

#include <bit>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "coefficients.hpp"
#include "grid.hpp"
#include "pullback.hpp"
#include "transform.hpp"

namespace sgprew {

/// Dirichlet data: one function per face, face index 2 s + side (side 1 is x_s = 1).
/// Each face function is only evaluated on its face; gradients are used
/// in tangential directions only.
struct BoundaryData {
  int dim = 0;
  std::vector<FieldWithGradient> faces;

  /// Trace of a function defined on the closed cube.
  static BoundaryData trace_of(int d, FieldWithGradient u) {
    BoundaryData g;
    g.dim = d;
    g.faces.assign(2 * d, u);
    return g;
  }
};

/// Throws std::domain_error when faces disagree on shared edges.
inline void check_boundary_consistency(const BoundaryData& g, int samples = 200, unsigned seed = 1) {
  const int d = g.dim;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> x(d);
  for (int s = 0; s < d; ++s)
    for (int r = s + 1; r < d; ++r)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          for (int k = 0; k < samples; ++k) {
            for (auto& v : x) v = u(rng);
            x[s] = a;
            x[r] = b;
            const double v1 = g.faces[2 * s + a](x).value;
            const double v2 = g.faces[2 * r + b](x).value;
            if (std::abs(v1 - v2) > 1e-12 * std::max(1.0, std::abs(v1)))
              throw std::domain_error("make_lifting: faces disagree on a shared edge");
          }
}

/// Transfinite (Boolean sum) blending of the face data: the lifting
///   u_g = sum_{S != {}} (-1)^{|S|+1} prod_{s in S} P_s g,
/// P_s u = (1 - x_s) u|_{x_s=0} + x_s u|_{x_s=1}, with analytic gradient.
inline FieldWithGradient make_lifting(const BoundaryData& g, bool check = true) {
  const int d = g.dim;
  if (static_cast<int>(g.faces.size()) != 2 * d) throw std::invalid_argument("make_lifting: need 2 d faces");
  if (check) check_boundary_consistency(g);
  auto data = std::make_shared<BoundaryData>(g);
  return [data, d](std::span<const double> x) {
    ValueGradient out{0.0, std::vector<double>(d, 0.0)};
    std::vector<double> y(d);
    for (unsigned S = 1; S < (1u << d); ++S) {
      const int size = std::popcount(S);
      const double sign = (size % 2 == 1) ? 1.0 : -1.0;
      int first = 0;
      while (!((S >> first) & 1u)) ++first;
      // corners of the directions in S
      for (unsigned c = 0; c < (1u << size); ++c) {
        int bit = 0;
        double weight = 1.0;
        unsigned side_first = 0;
        for (int s = 0; s < d; ++s) {
          y[s] = x[s];
          if (!((S >> s) & 1u)) continue;
          const unsigned side = (c >> bit++) & 1u;
          if (s == first) side_first = side;
          y[s] = side;
        }
        // blending weights and their derivatives
        bit = 0;
        std::vector<double> w(d, 1.0), dw(d, 0.0);
        for (int s = 0; s < d; ++s) {
          if (!((S >> s) & 1u)) continue;
          const unsigned side = (c >> bit++) & 1u;
          w[s] = side ? x[s] : 1.0 - x[s];
          dw[s] = side ? 1.0 : -1.0;
          weight *= w[s];
        }
        const auto gv = data->faces[2 * first + side_first](y);
        out.value += sign * weight * gv.value;
        for (int s = 0; s < d; ++s) {
          if ((S >> s) & 1u) {
            double p = dw[s];
            for (int r = 0; r < d; ++r)
              if (r != s && ((S >> r) & 1u)) p *= w[r];
            out.gradient[s] += sign * p * gv.value;
          } else {
            out.gradient[s] += sign * weight * gv.gradient[s];
          }
        }
      }
    }
    return out;
  };
}

/// Built-in experiment definition on the reference cube.
struct ProblemSpec {
  std::string name;
  int dim = 0;
  CoefficientField coeff;
  ScalarField f;
  std::optional<SeparableFunction> f_separable;
  std::optional<BoundaryData> boundary;  // empty for homogeneous data
  FieldWithGradient lifting;             // built from `boundary`
  ScalarField u_exact;
  std::string description;
};

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {"poisson3d_cube", "poisson3d_curved", "helmholtz6d_const", "helmholtz6d_var",
                                                 "debug2d"};
  return names;
}

namespace detail {

constexpr double pi = std::numbers::pi;

inline double sin_product(std::span<const double> x) {
  double p = 1.0;
  for (double v : x) p *= std::sin(pi * v);
  return p;
}

inline SeparableFunction scaled_sin_product(int d, double scale) {
  std::vector<Function1D> term(d);
  for (int s = 0; s < d; ++s) term[s] = [](double x) { return std::sin(pi * x); };
  term[0] = [scale](double x) { return scale * std::sin(pi * x); };
  return SeparableFunction{{term}};
}

inline ProblemSpec poisson_cube(int d, std::string name) {
  ProblemSpec p;
  p.name = std::move(name);
  p.dim = d;
  p.coeff = CoefficientField::laplace(d);
  const double scale = d * pi * pi;
  p.f = [scale](std::span<const double> x) { return scale * sin_product(x); };
  p.f_separable = scaled_sin_product(d, scale);
  p.u_exact = sin_product;
  p.description = "-Laplace u = f on the unit cube, u = prod sin(pi x_s), u = 0 on the boundary";
  return p;
}

inline CoordinateMap shear_map() {
  CoordinateMap m;
  m.dim = 3;
  m.map = [](std::span<const double> x, std::span<double> y) {
    y[0] = x[0] + std::sin(pi * x[1]) - 0.5;
    y[1] = x[1];
    y[2] = x[2];
  };
  m.jacobian = [](std::span<const double> x, std::span<double> j) {
    std::fill(j.begin(), j.end(), 0.0);
    j[0] = 1.0;
    j[1] = pi * std::cos(pi * x[1]);
    j[4] = 1.0;
    j[8] = 1.0;
  };
  return m;
}

inline ProblemSpec poisson_curved() {
  ProblemSpec p;
  p.name = "poisson3d_curved";
  p.dim = 3;
  const ScalarField f_phys = [](std::span<const double> y) { return 3.0 * pi * pi * sin_product(y); };
  auto pb = pullback(shear_map(), {}, f_phys);
  p.coeff = pb.coeff;
  // the pulled-back A depends on y only, entries factor per direction
  auto cos2 = [](double y) {
    const double c = std::cos(pi * y);
    return 1.0 + pi * pi * c * c;
  };
  auto mixed = [](double y) { return -pi * std::cos(pi * y); };
  std::vector<SeparableTerm> terms;
  terms.push_back({0, 0, {Function1D{}, cos2, Function1D{}}});
  terms.push_back({0, 1, {Function1D{}, mixed, Function1D{}}});
  terms.push_back({1, 0, {Function1D{}, mixed, Function1D{}}});
  terms.push_back({1, 1, {Function1D{}, Function1D{}, Function1D{}}});
  terms.push_back({2, 2, {Function1D{}, Function1D{}, Function1D{}}});
  p.coeff.separable = terms;
  p.f = pb.rhs;
  auto u_ref = [](std::span<const double> x) {
    const double xt = x[0] + std::sin(pi * x[1]) - 0.5;
    return std::sin(pi * xt) * std::sin(pi * x[1]) * std::sin(pi * x[2]);
  };
  p.u_exact = u_ref;
  FieldWithGradient u_grad = [](std::span<const double> x) {
    const double xt = x[0] + std::sin(pi * x[1]) - 0.5;
    const double a = std::sin(pi * xt), da = pi * std::cos(pi * xt);
    const double b = std::sin(pi * x[1]), db = pi * std::cos(pi * x[1]);
    const double c = std::sin(pi * x[2]), dc = pi * std::cos(pi * x[2]);
    // x~ depends on y through sin(pi y)
    return ValueGradient{a * b * c, {da * b * c, da * db * b * c + a * db * c, a * b * dc}};
  };
  p.boundary = BoundaryData::trace_of(3, u_grad);
  p.lifting = make_lifting(*p.boundary);
  p.description = "-div(A grad u) = f on the reference cube of the sheared domain x~ = x + sin(pi y) - 1/2, "
                  "inhomogeneous Dirichlet data";
  return p;
}

inline ProblemSpec helmholtz6d(bool variable) {
  constexpr int d = 6;
  ProblemSpec p;
  p.name = variable ? "helmholtz6d_var" : "helmholtz6d_const";
  p.dim = d;
  p.u_exact = sin_product;
  if (!variable) {
    p.coeff = CoefficientField::laplace(d, 1.0);
    const double scale = d * pi * pi + 1.0;
    p.f = [scale](std::span<const double> x) { return scale * sin_product(x); };
    p.f_separable = scaled_sin_product(d, scale);
    p.description = "-Laplace u + u = f on [0,1]^6, u = prod sin(pi x_s)";
    return p;
  }
  std::vector<SeparableTerm> terms;
  for (int s = 0; s < d; ++s) terms.push_back({s, s, std::vector<Function1D>(d)});
  SeparableTerm react{-1, -1, std::vector<Function1D>(d)};
  for (int s = 0; s < d; ++s) react.factors[s] = [](double x) { return 1.0 - x * x; };
  terms.push_back(react);
  p.coeff = CoefficientField::from_separable(d, terms);
  p.f = [](std::span<const double> x) {
    double c = 1.0;
    for (double v : x) c *= 1.0 - v * v;
    return (d * pi * pi + c) * sin_product(x);
  };
  SeparableFunction f = scaled_sin_product(d, d * pi * pi);
  std::vector<Function1D> second(d);
  for (int s = 0; s < d; ++s) second[s] = [](double x) { return (1.0 - x * x) * std::sin(pi * x); };
  f.terms.push_back(second);
  p.f_separable = f;
  p.description = "-Laplace u + c u = f on [0,1]^6, c = prod (1 - x_s^2), u = prod sin(pi x_s)";
  return p;
}

}  // namespace detail

/// Built-in problem by name; `dim` applies to debug2d only.
inline ProblemSpec builtin(const std::string& name, int dim = 2) {
  if (name == "poisson3d_cube") return detail::poisson_cube(3, name);
  if (name == "poisson3d_curved") return detail::poisson_curved();
  if (name == "helmholtz6d_const") return detail::helmholtz6d(false);
  if (name == "helmholtz6d_var") return detail::helmholtz6d(true);
  if (name == "debug2d") {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("builtin: bad dimension for debug2d");
    return detail::poisson_cube(dim, name);
  }
  throw std::invalid_argument("builtin: unknown problem '" + name + "'");
}

struct ErrorNorms {
  double e_inf = 0.0;
  double e_2 = 0.0;
};

/// Number of distinct sparse grid points including those on the boundary.
inline std::size_t sparse_points_with_boundary(int n, int d) {
  std::size_t total = 0;
  for (const auto& t : iterate_levels(n, d)) {
    std::size_t p = 1;
    for (int s = 0; s < d; ++s) p *= t[s] == 0 ? 3 : (std::size_t{1} << t[s]);
    total += p;
  }
  return total;
}

/// Max and RMS error of u0 + u_g against u_exact over all sparse grid points,
/// boundary points included (there the discrete solution is u_g), so a
/// constant error e gives e_2 = e. U holds pre-wavelet coefficients of u0.
inline ErrorNorms error_norms(const SparseGridArray& U, const ProblemSpec& spec) {
  if (!spec.u_exact) throw std::invalid_argument("error_norms: problem has no exact solution");
  SparseGridArray v = U;
  reconstruct(v);
  const int d = v.dim();
  ErrorNorms e;
  double sum = 0.0;
  std::vector<double> x(d);
  auto add = [&](double err) {
    e.e_inf = std::max(e.e_inf, err);
    sum += err * err;
  };
  for (std::size_t b = 0; b < v.num_blocks(); ++b) {
    const auto& shape = v.block(b).shape();
    const auto vals = v.block(b).values();
    for (long off : v.xi_offsets(b)) {
      const auto i = shape.index_of(off);
      for (int s = 0; s < d; ++s) x[s] = point_coord_1d(shape.level[s], i[s]);
      double val = vals[off];
      if (spec.lifting) val += spec.lifting(x).value;
      add(std::abs(val - spec.u_exact(x)));
    }
  }
  // boundary points: per level, coordinates new on that level with at least
  // one of them in {0, 1} (only possible in directions on level 0)
  for (const auto& t : iterate_levels(v.depth(), d)) {
    std::array<long, kMaxDim> count{}, k{};
    long total = 1;
    for (int s = 0; s < d; ++s) {
      count[s] = t[s] == 0 ? 3 : (1L << t[s]);
      total *= count[s];
    }
    for (long p = 0; p < total; ++p) {
      bool boundary = false;
      for (int s = 0; s < d; ++s) {
        if (t[s] == 0) {
          x[s] = 0.5 * static_cast<double>(k[s]);
          boundary = boundary || k[s] != 1;
        } else {
          x[s] = point_coord_1d(t[s], 2 * k[s] + 1);
        }
      }
      if (boundary) add(std::abs((spec.lifting ? spec.lifting(x).value : 0.0) - spec.u_exact(x)));
      for (int s = 0; s < d; ++s) {
        if (++k[s] < count[s]) break;
        k[s] = 0;
      }
    }
  }
  e.e_2 = std::sqrt(sum / static_cast<double>(sparse_points_with_boundary(v.depth(), d)));
  return e;
}

}  // namespace sgprew
