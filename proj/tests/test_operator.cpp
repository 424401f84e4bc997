#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "sgprew/operator.hpp"
#include "sgprew/pullback.hpp"
#include "sgprew/stencil.hpp"

using namespace sgprew;

namespace {

constexpr double pi = std::numbers::pi;

int off2(int ox, int oy) {
  const int o[2] = {ox, oy};
  return offset_index(o);
}

// 1-D closed-form tridiagonal rows for hats: stiffness (-1,2,-1)/h, mass h/6 (1,4,1)
double stiff1(int k, long i, long j) {
  const double h = mesh_size(k);
  if (i == j) return 2.0 / h;
  return std::abs(i - j) == 1 ? -1.0 / h : 0.0;
}
double mass1(int k, long i, long j) {
  const double h = mesh_size(k);
  if (i == j) return 4.0 * h / 6.0;
  return std::abs(i - j) == 1 ? h / 6.0 : 0.0;
}

// a(v_j, v_i) for A = diag(alpha), constant kappa, by tensor products of 1-D integrals
double closed_form(const MultiIndex& t, std::span<const long> i, std::span<const long> j, const std::vector<double>& alpha,
                   double kappa) {
  const int d = t.dim();
  double sum = 0.0;
  for (int s = 0; s < d; ++s) {
    double p = alpha[s];
    for (int r = 0; r < d; ++r) p *= (r == s) ? stiff1(t[r], i[r], j[r]) : mass1(t[r], i[r], j[r]);
    sum += p;
  }
  double m = kappa;
  for (int r = 0; r < d; ++r) m *= mass1(t[r], i[r], j[r]);
  return sum + m;
}

CoordinateMap shear_map() {
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

}  // namespace

TEST(Stencil, Laplace2DSquareCells) {
  const auto coeff = CoefficientField::laplace(2);
  const MultiIndex t({2, 2});
  const auto S = assemble_stencil(t, coeff, 2);
  const long i[2] = {4, 4};
  const long off = S.shape.offset(i);
  for (int ox = -1; ox <= 1; ++ox)
    for (int oy = -1; oy <= 1; ++oy) {
      const double expected = (ox == 0 && oy == 0) ? 8.0 / 3.0 : -1.0 / 3.0;
      EXPECT_NEAR(S.weight(off, off2(ox, oy)), expected, 1e-14);
    }
}

TEST(Stencil, OneDimensionalStiffness) {
  const auto coeff = CoefficientField::laplace(1);
  const MultiIndex t({3});
  const auto S = assemble_stencil(t, coeff, 2);
  const double h = mesh_size(3);
  EXPECT_NEAR(S.weight(5, 0), -1.0 / h, 1e-12);
  EXPECT_NEAR(S.weight(5, 1), 2.0 / h, 1e-12);
  EXPECT_NEAR(S.weight(5, 2), -1.0 / h, 1e-12);
  // no coupling towards the boundary
  EXPECT_EQ(S.weight(0, 0), 0.0);
  EXPECT_EQ(S.weight(level_size(3) - 1, 2), 0.0);
}

TEST(Stencil, MassContribution2D) {
  const MultiIndex t({2, 2});
  const auto Sk = assemble_stencil(t, CoefficientField::laplace(2, 1.0), 2);
  const auto S0 = assemble_stencil(t, CoefficientField::laplace(2), 2);
  const double h = mesh_size(2);
  const double m[3][3] = {{1, 4, 1}, {4, 16, 4}, {1, 4, 1}};
  const long i[2] = {3, 5};
  const long off = Sk.shape.offset(i);
  for (int ox = -1; ox <= 1; ++ox)
    for (int oy = -1; oy <= 1; ++oy)
      EXPECT_NEAR(Sk.weight(off, off2(ox, oy)) - S0.weight(off, off2(ox, oy)), h * h / 36.0 * m[ox + 1][oy + 1], 1e-15);
}

TEST(Stencil, ExactForConstantCoefficientsOnAnisotropicCells) {
  const std::vector<double> alpha = {1.0, 2.0, 3.0};
  const double kappa = 0.7;
  const auto coeff = CoefficientField::constant_diagonal(alpha, kappa);
  const MultiIndex t({2, 1, 0});
  const auto S = assemble_stencil(t, coeff, 2);
  for (long off = 0; off < S.shape.size; ++off) {
    const auto i = S.shape.index_of(off);
    for (int o = 0; o < S.width; ++o) {
      const auto ov = offset_of(o, 3);
      long j[3];
      bool inside = true;
      for (int s = 0; s < 3; ++s) {
        j[s] = i[s] + ov[s];
        inside = inside && j[s] >= 1 && j[s] <= S.shape.extent[s];
      }
      const double expected = inside ? closed_form(t, std::span<const long>(i.data(), 3), j, alpha, kappa) : 0.0;
      EXPECT_NEAR(S.weight(off, o), expected, 1e-14 * std::max(1.0, std::abs(expected)));
    }
  }
}

TEST(Stencil, ApplyZeroAndHat) {
  const MultiIndex t({3});
  const auto S = assemble_stencil(t, CoefficientField::laplace(1), 2);
  std::vector<double> U(level_size(3), 0.0), Z(level_size(3), 1.0);
  apply_stencil(S, U, Z);
  for (double z : Z) EXPECT_EQ(z, 0.0);
  U[6] = 1.0;  // hat at i = 7
  apply_stencil(S, U, Z);
  const double h = mesh_size(3);
  for (long k = 0; k < level_size(3); ++k) {
    const double expected = k == 6 ? 2.0 / h : (k == 5 || k == 7 ? -1.0 / h : 0.0);
    EXPECT_NEAR(Z[k], expected, 1e-12);
  }
}

TEST(Stencil, ApplyMatchesDenseElementProduct) {
  const MultiIndex t({2, 1});
  const std::vector<double> alpha = {1.0, 1.0};
  const double kappa = 0.5;
  const auto S = assemble_stencil(t, CoefficientField::laplace(2, kappa), 2);
  const BlockShape shape(t);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> U(shape.size), Z(shape.size);
  for (auto& v : U) v = u(rng);
  apply_stencil(S, U, Z);
  for (long a = 0; a < shape.size; ++a) {
    const auto i = shape.index_of(a);
    double expected = 0.0;
    for (long b = 0; b < shape.size; ++b) {
      const auto j = shape.index_of(b);
      expected += closed_form(t, std::span<const long>(i.data(), 2), std::span<const long>(j.data(), 2), alpha, kappa) * U[b];
    }
    EXPECT_NEAR(Z[a], expected, 1e-12);
  }
  std::vector<double> wrong(shape.size + 1);
  EXPECT_THROW(apply_stencil(S, wrong, Z), std::invalid_argument);
}

TEST(Stencil, SymmetricForCurvedDomain) {
  const auto pb = pullback(shear_map(), {}, {});
  const MultiIndex t({1, 1, 1});
  const auto S = assemble_stencil(t, pb.coeff, 3);
  for (long off = 0; off < S.shape.size; ++off) {
    const auto i = S.shape.index_of(off);
    for (int o = 0; o < S.width; ++o) {
      const auto ov = offset_of(o, 3);
      long j[3];
      bool inside = true;
      for (int s = 0; s < 3; ++s) {
        j[s] = i[s] + ov[s];
        inside = inside && j[s] >= 1 && j[s] <= S.shape.extent[s];
      }
      if (!inside) continue;
      int neg[3] = {-ov[0], -ov[1], -ov[2]};
      const double w1 = S.weight(off, o);
      const double w2 = S.weight(S.shape.offset(j), offset_index(neg));
      EXPECT_NEAR(w1, w2, 1e-13 * std::max(1.0, std::abs(w1)));
    }
  }
}

TEST(Stencil, PositiveDefiniteOnSmallLevels) {
  const auto pb = pullback(shear_map(), [](std::span<const double>) { return 1.0; }, {});
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (const auto& t : {MultiIndex({1, 1, 1}), MultiIndex({2, 0, 1}), MultiIndex({0, 2, 0})}) {
    const auto S = assemble_stencil(t, pb.coeff, 2);
    std::vector<double> x(S.shape.size), z(S.shape.size);
    for (int rep = 0; rep < 10; ++rep) {
      for (auto& v : x) v = u(rng);
      apply_stencil(S, x, z);
      double q = 0.0;
      for (long k = 0; k < S.shape.size; ++k) q += x[k] * z[k];
      EXPECT_GT(q, 0.0);
    }
  }
}

TEST(Stencil, SeparableMatchesGeneric) {
  // kappa = prod (1 - x_s^2), A = Id, as well as a y-dependent anisotropic diffusion
  std::vector<SeparableTerm> terms;
  for (int s = 0; s < 3; ++s) terms.push_back({s, s, std::vector<Function1D>(3)});
  SeparableTerm react{-1, -1, std::vector<Function1D>(3)};
  for (int s = 0; s < 3; ++s) react.factors[s] = [](double x) { return 1.0 - x * x; };
  terms.push_back(react);
  terms[0].factors[1] = [](double y) { return 1.0 + std::cos(pi * y) * std::cos(pi * y); };
  SeparableTerm cross01{0, 1, std::vector<Function1D>(3)};
  cross01.factors[1] = [](double y) { return -0.5 * std::cos(pi * y); };
  SeparableTerm cross10 = cross01;
  std::swap(cross10.trial_dir, cross10.test_dir);
  terms.push_back(cross01);
  terms.push_back(cross10);
  const auto coeff = CoefficientField::from_separable(3, terms);
  coeff.check_admissible();

  const int n = 3;
  // same rule on both paths: at order 8 the 1-D floor does not kick in
  const int q = kMinOrder1D;
  const SeparableOperator sep = SeparableOperator::from_field(coeff, n, q);
  for (const auto& t : iterate_levels(n, 3)) {
    const auto generic = assemble_stencil(t, coeff, q);
    const auto fast = sep.stencil(t);
    for (std::size_t k = 0; k < generic.weights.size(); ++k)
      ASSERT_NEAR(fast.weights[k], generic.weights[k], 1e-13 * std::max(1.0, std::abs(generic.weights[k])));
    // apply paths agree as well
    std::vector<double> x(generic.shape.size), z1(x.size()), z2(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::sin(1.0 + 0.37 * static_cast<double>(k));
    apply_stencil(generic, x, z1);
    sep.apply(t, x, z2);
    for (std::size_t k = 0; k < x.size(); ++k) ASSERT_NEAR(z1[k], z2[k], 1e-12 * std::max(1.0, std::abs(z1[k])));
  }
}

TEST(Stencil, EnergyAgreesBetweenPaths) {
  const auto coeff = CoefficientField::laplace(2, 0.3);
  const int n = 3;
  const StencilOperator generic(coeff, n, 2);
  const SeparableOperator sep = SeparableOperator::from_field(coeff, n, 2);
  for (const auto& t : iterate_levels(n, 2)) {
    for (long i0 = 1; i0 <= level_size(t[0]); ++i0)
      for (long i1 = 1; i1 <= level_size(t[1]); ++i1) {
        if (!in_xi(t[0], i0) || !in_xi(t[1], i1)) continue;
        const long i[2] = {i0, i1};
        EXPECT_NEAR(generic.energy(t, i), sep.energy(t, i), 1e-12 * sep.energy(t, i));
      }
  }
}

TEST(Load, Basics) {
  const auto zero = assemble_load(MultiIndex({2, 1}), [](std::span<const double>) { return 0.0; }, 3);
  for (double v : zero) EXPECT_EQ(v, 0.0);
  const auto one1 = assemble_load(MultiIndex({3}), [](std::span<const double>) { return 1.0; }, 3);
  for (double v : one1) EXPECT_NEAR(v, mesh_size(3), 1e-15);
  const MultiIndex t({2, 1});
  const auto one2 = assemble_load(t, [](std::span<const double>) { return 1.0; }, 3);
  for (double v : one2) EXPECT_NEAR(v, mesh_size(2) * mesh_size(1), 1e-15);
}

TEST(Lifting, ZeroAndLinear) {
  const MultiIndex t({3});
  const auto coeff = CoefficientField::laplace(1);
  const auto zero = lifting_contribution(
      t, [](std::span<const double>) { return ValueGradient{0.0, {0.0}}; }, coeff, 2);
  for (double v : zero) EXPECT_EQ(v, 0.0);
  // u_g(x) = x: int v_i' = 0 for every hat vanishing at both ends of its support
  const auto lin = lifting_contribution(
      t, [](std::span<const double> x) { return ValueGradient{x[0], {1.0}}; }, coeff, 2);
  for (double v : lin) EXPECT_NEAR(v, 0.0, 1e-13);
}

TEST(Lifting, MultilinearFunctionMatchesStencil) {
  const MultiIndex t({2, 1});
  const BlockShape shape(t);
  const auto coeff = CoefficientField::laplace(2, 0.8);
  std::vector<double> c(shape.size);
  for (long k = 0; k < shape.size; ++k) c[k] = std::cos(0.3 * static_cast<double>(k));
  auto ug = [&](std::span<const double> x) {
    ValueGradient g{0.0, {0.0, 0.0}};
    for (long k = 0; k < shape.size; ++k) {
      const auto i = shape.index_of(k);
      const double v0 = hat_value(t[0], i[0], x[0]), v1 = hat_value(t[1], i[1], x[1]);
      g.value += c[k] * v0 * v1;
      g.gradient[0] += c[k] * hat_derivative(t[0], i[0], x[0]) * v1;
      g.gradient[1] += c[k] * v0 * hat_derivative(t[1], i[1], x[1]);
    }
    return g;
  };
  const auto lift = lifting_contribution(t, ug, coeff, 2);
  std::vector<double> z(shape.size);
  apply_stencil(assemble_stencil(t, coeff, 2), c, z);
  for (long k = 0; k < shape.size; ++k) EXPECT_NEAR(lift[k], z[k], 1e-12);
}

TEST(Pullback, IdentityMap) {
  const auto pb = pullback(CoordinateMap::identity(3), [](std::span<const double> x) { return 1.0 + x[0]; },
                           [](std::span<const double> x) { return x[1]; });
  const double x[3] = {0.2, 0.4, 0.9};
  double a[9];
  pb.coeff.diffusion_at(x, a);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) EXPECT_NEAR(a[r * 3 + c], r == c ? 1.0 : 0.0, 1e-15);
  EXPECT_NEAR(pb.coeff.reaction_at(x), 1.2, 1e-15);
  EXPECT_NEAR(pb.rhs(x), 0.4, 1e-15);
}

TEST(Pullback, ShearMap) {
  const auto pb = pullback(shear_map(), [](std::span<const double> y) { return y[0] * y[0]; }, {});
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const double x[3] = {u(rng), u(rng), u(rng)};
    double a[9];
    pb.coeff.diffusion_at(x, a);
    const double c = std::cos(pi * x[1]);
    const double expected[9] = {1.0 + pi * pi * c * c, -pi * c, 0.0, -pi * c, 1.0, 0.0, 0.0, 0.0, 1.0};
    for (int k = 0; k < 9; ++k) EXPECT_NEAR(a[k], expected[k], 1e-13);
    // symmetric positive definite: leading minors
    EXPECT_GT(a[0], 0.0);
    EXPECT_GT(a[0] * a[4] - a[1] * a[3], 0.0);
    // volume preserving: kappa transported without scaling
    const double xt = x[0] + std::sin(pi * x[1]) - 0.5;
    EXPECT_NEAR(pb.coeff.reaction_at(x), xt * xt, 1e-14);
  }
  EXPECT_NO_THROW(pb.coeff.check_admissible());
}

TEST(Pullback, SingularJacobianThrows) {
  CoordinateMap m = CoordinateMap::identity(2);
  m.jacobian = [](std::span<const double>, std::span<double> j) { std::fill(j.begin(), j.end(), 1.0); };
  const auto pb = pullback(m, {}, {});
  const double x[2] = {0.5, 0.5};
  double a[4];
  EXPECT_THROW(pb.coeff.diffusion_at(x, a), std::domain_error);
}

TEST(Coefficients, AdmissibilityChecks) {
  auto bad = CoefficientField::general(
      2, [](std::span<const double>, std::span<double> a) { a[0] = 1; a[1] = 0.5; a[2] = 0.0; a[3] = 1; }, {});
  EXPECT_THROW(bad.check_admissible(), std::domain_error);
  auto neg = CoefficientField::laplace(2, -1.0);
  EXPECT_THROW(neg.check_admissible(), std::domain_error);
  EXPECT_THROW(CoefficientField::from_separable(2, {SeparableTerm{0, -1, std::vector<Function1D>(2)}}), std::invalid_argument);
}

TEST(Quadrature, GaussLegendreExactness) {
  for (int q = 1; q <= 6; ++q) {
    const auto& r = gauss_legendre(q);
    for (int p = 0; p < 2 * q; ++p) {
      double s = 0.0;
      for (int k = 0; k < q; ++k) s += r.weights[k] * std::pow(r.nodes[k], p);
      EXPECT_NEAR(s, 1.0 / (p + 1), 1e-15);
    }
  }
  EXPECT_THROW(make_gauss_legendre(0), std::invalid_argument);
}
