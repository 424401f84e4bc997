#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "sgprew/problems.hpp"

using namespace sgprew;

namespace {

constexpr double pi = std::numbers::pi;

std::vector<std::vector<double>> random_points(int d, int count, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  std::vector<std::vector<double>> pts(count, std::vector<double>(d));
  for (auto& p : pts)
    for (auto& v : p) v = u(rng);
  return pts;
}

// -div(A grad u) + kappa u by fourth-order central differences of the flux
double residual(const ProblemSpec& p, const ScalarField& u, std::vector<double> x, double h = 1e-3) {
  const int d = p.dim;
  auto flux = [&](std::vector<double> y, int s) {
    std::vector<double> grad(d), a(d * d);
    for (int r = 0; r < d; ++r) {
      auto at = [&](double shift) {
        auto z = y;
        z[r] += shift;
        return u(z);
      };
      grad[r] = (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
    }
    p.coeff.diffusion_at(y, a);
    double q = 0.0;
    for (int r = 0; r < d; ++r) q += a[s * d + r] * grad[r];
    return q;
  };
  double div = 0.0;
  for (int s = 0; s < d; ++s) {
    auto at = [&](double shift) {
      auto z = x;
      z[s] += shift;
      return flux(z, s);
    };
    div += (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
  }
  return -div + p.coeff.reaction_at(x) * u(x) - p.f(x);
}

}  // namespace

TEST(Builtin, NamesAndErrors) {
  for (const auto& name : builtin_names()) {
    const auto p = builtin(name, 2);
    EXPECT_EQ(p.name, name);
    EXPECT_TRUE(static_cast<bool>(p.f));
    EXPECT_TRUE(static_cast<bool>(p.u_exact));
    EXPECT_FALSE(p.description.empty());
  }
  EXPECT_THROW(builtin("no_such_problem"), std::invalid_argument);
  EXPECT_THROW(builtin("debug2d", 0), std::invalid_argument);
  EXPECT_EQ(builtin("poisson3d_curved").dim, 3);
  EXPECT_EQ(builtin("helmholtz6d_var").dim, 6);
}

TEST(Builtin, CubeLoad) {
  const auto p = builtin("poisson3d_cube");
  const std::vector<double> x{0.3, 0.5, 0.9};
  const double u = std::sin(0.3 * pi) * std::sin(0.9 * pi);
  EXPECT_NEAR(p.f(x), 3.0 * pi * pi * u, 1e-12);
  EXPECT_NEAR(p.u_exact(x), u, 1e-15);
  EXPECT_FALSE(p.boundary.has_value());
}

TEST(Builtin, HelmholtzCoefficients) {
  const auto var = builtin("helmholtz6d_var");
  const std::vector<double> zero(6, 0.0), one(6, 1.0);
  std::vector<double> mid(6, 0.5);
  EXPECT_DOUBLE_EQ(var.coeff.reaction_at(zero), 1.0);
  EXPECT_DOUBLE_EQ(var.coeff.reaction_at(one), 0.0);
  EXPECT_NEAR(var.coeff.reaction_at(mid), std::pow(0.75, 6), 1e-15);
  const auto con = builtin("helmholtz6d_const");
  EXPECT_DOUBLE_EQ(con.coeff.reaction_at(mid), 1.0);
  std::vector<double> a(36);
  var.coeff.diffusion_at(mid, a);
  for (int r = 0; r < 6; ++r)
    for (int s = 0; s < 6; ++s) EXPECT_DOUBLE_EQ(a[r * 6 + s], r == s ? 1.0 : 0.0);
}

TEST(Builtin, SeparableLoadsMatch) {
  for (const char* name : {"poisson3d_cube", "helmholtz6d_const", "helmholtz6d_var"}) {
    const auto p = builtin(name);
    ASSERT_TRUE(p.f_separable.has_value()) << name;
    for (const auto& x : random_points(p.dim, 50, 4)) EXPECT_NEAR((*p.f_separable)(x), p.f(x), 1e-11) << name;
  }
}

TEST(Builtin, CurvedBoundaryData) {
  const auto p = builtin("poisson3d_curved");
  ASSERT_TRUE(p.boundary.has_value());
  ASSERT_TRUE(static_cast<bool>(p.lifting));
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    const double y = u(rng), z = u(rng);
    const std::vector<double> x{0.0, y, z};
    const double expected = std::sin(pi * (std::sin(pi * y) - 0.5)) * std::sin(pi * y) * std::sin(pi * z);
    EXPECT_NEAR(p.boundary->faces[0](x).value, expected, 1e-14);
    EXPECT_NEAR(p.lifting(x).value, expected, 1e-13);
  }
}

TEST(Builtin, ManufacturedSolutionsSolveTheEquation) {
  for (const char* name : {"poisson3d_cube", "poisson3d_curved", "helmholtz6d_const", "helmholtz6d_var"}) {
    const auto p = builtin(name);
    double worst = 0.0, scale = 0.0;
    for (const auto& x : random_points(p.dim, p.dim == 6 ? 100 : 1000, 7)) {
      worst = std::max(worst, std::abs(residual(p, p.u_exact, x)));
      scale = std::max(scale, std::abs(p.f(x)));
    }
    EXPECT_LE(worst, 1e-6 * scale) << name;
  }
}

TEST(Builtin, CurvedOperatorIsSymmetricPositiveDefinite) {
  const auto p = builtin("poisson3d_curved");
  ASSERT_TRUE(p.coeff.separable.has_value());
  for (const auto& x : random_points(3, 10000, 11)) {
    Eigen::Matrix3d a;
    p.coeff.diffusion_at(x, std::span<double>(a.data(), 9));
    ASSERT_NEAR((a - a.transpose()).norm(), 0.0, 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(a);
    ASSERT_GT(eig.eigenvalues().minCoeff(), 1e-3);
    // separable form reproduces the full tensor
    for (const auto& term : *p.coeff.separable) {
      double v = 1.0;
      for (int r = 0; r < 3; ++r) v *= term.factor(r, x[r]);
      a(term.test_dir, term.trial_dir) -= v;
    }
    ASSERT_NEAR(a.norm(), 0.0, 1e-13);
  }
}

TEST(Lifting, ZeroData) {
  const FieldWithGradient zero = [](std::span<const double> x) { return ValueGradient{0.0, std::vector<double>(x.size(), 0.0)}; };
  const auto ug = make_lifting(BoundaryData::trace_of(3, zero));
  for (const auto& x : random_points(3, 100, 1)) {
    const auto v = ug(x);
    EXPECT_EQ(v.value, 0.0);
    for (double g : v.gradient) EXPECT_EQ(g, 0.0);
  }
}

TEST(Lifting, ReproducesMultilinearFunctions) {
  // u = 1 + 2x - y + 3xy - xyz is multilinear, so blending its trace gives u
  const FieldWithGradient u = [](std::span<const double> x) {
    return ValueGradient{1 + 2 * x[0] - x[1] + 3 * x[0] * x[1] - x[0] * x[1] * x[2],
                         {2 + 3 * x[1] - x[1] * x[2], -1 + 3 * x[0] - x[0] * x[2], -x[0] * x[1]}};
  };
  const auto ug = make_lifting(BoundaryData::trace_of(3, u));
  for (const auto& x : random_points(3, 200, 3)) {
    const auto a = ug(x), b = u(x);
    EXPECT_NEAR(a.value, b.value, 1e-13);
    for (int s = 0; s < 3; ++s) EXPECT_NEAR(a.gradient[s], b.gradient[s], 1e-12);
  }
}

TEST(Lifting, MatchesTraceOnTheBoundary) {
  const FieldWithGradient u = [](std::span<const double> x) {
    const double c = pi * std::cos(pi * (x[0] + x[1]));
    return ValueGradient{std::sin(pi * (x[0] + x[1])), {c, c}};
  };
  const auto ug = make_lifting(BoundaryData::trace_of(2, u));
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> r(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> x{r(rng), r(rng)};
    x[k % 2] = (k / 2) % 2;
    EXPECT_NEAR(ug(x).value, u(x).value, 1e-12);
  }
  // the gradient is consistent with the value
  for (const auto& x : random_points(2, 50, 6)) {
    const double h = 1e-6;
    for (int s = 0; s < 2; ++s) {
      auto xp = x, xm = x;
      xp[s] += h;
      xm[s] -= h;
      EXPECT_NEAR(ug(x).gradient[s], (ug(xp).value - ug(xm).value) / (2 * h), 1e-6);
    }
  }
}

TEST(Lifting, InconsistentFacesThrow) {
  BoundaryData g;
  g.dim = 2;
  const FieldWithGradient zero = [](std::span<const double>) { return ValueGradient{0.0, {0.0, 0.0}}; };
  const FieldWithGradient one = [](std::span<const double>) { return ValueGradient{1.0, {0.0, 0.0}}; };
  g.faces = {zero, zero, one, zero};
  EXPECT_THROW(check_boundary_consistency(g), std::domain_error);
  EXPECT_THROW(make_lifting(g), std::domain_error);
  EXPECT_NO_THROW(make_lifting(g, false));
  g.faces.pop_back();
  EXPECT_THROW(make_lifting(g), std::invalid_argument);
}

TEST(ErrorNorms, ExactInterpolantHasZeroError) {
  const auto p = builtin("debug2d", 2);
  auto u = sample(4, 2, p.u_exact);
  decompose(u);
  const auto e = error_norms(u, p);
  EXPECT_LE(e.e_inf, 1e-14);
  EXPECT_LE(e.e_2, 1e-14);
}

TEST(ErrorNorms, ConstantOffset) {
  auto p = builtin("debug2d", 3);
  const auto exact = p.u_exact;
  // u_g = 0.1 everywhere makes the error 0.1 at every point, boundary included
  p.lifting = [](std::span<const double> x) { return ValueGradient{0.1, std::vector<double>(x.size(), 0.0)}; };
  auto u = sample(3, 3, exact);
  decompose(u);
  const auto e = error_norms(u, p);
  EXPECT_NEAR(e.e_inf, 0.1, 1e-14);
  EXPECT_NEAR(e.e_2, 0.1, 1e-14);
}

TEST(ErrorNorms, BoundaryInclusivePointCount) {
  EXPECT_EQ(sparse_points_with_boundary(0, 1), 3u);
  EXPECT_EQ(sparse_points_with_boundary(3, 1), 17u);
  const std::vector<std::size_t> cube{81, 225, 593, 1505, 3713};
  for (int n = 1; n <= 5; ++n) EXPECT_EQ(sparse_points_with_boundary(n, 3), cube[n - 1]);
}

TEST(ErrorNorms, RmsBelowMax) {
  const auto p = builtin("debug2d", 2);
  auto u = sample(4, 2, [](std::span<const double> x) { return x[0] * x[1] * (1 - x[0]); });
  decompose(u);
  const auto e = error_norms(u, p);
  EXPECT_GT(e.e_2, 0.0);
  EXPECT_LE(e.e_2, e.e_inf);
  auto q = p;
  q.u_exact = {};
  EXPECT_THROW(error_norms(u, q), std::invalid_argument);
}
