#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "sgprew/experiment.hpp"

using namespace sgprew;

namespace {

std::vector<double> random_vector(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

LinearOperator wrap(const SemiOrthoMatvec& mv) {
  return [&mv](std::span<const double> x, std::span<double> y) { mv(x, y); };
}

LinearOperator diagonal_operator(std::vector<double> d) {
  return [d = std::move(d)](std::span<const double> x, std::span<double> y) {
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = d[k] * x[k];
  };
}

double sine_product(std::span<const double> x) {
  double p = 1.0;
  for (double xs : x) p *= std::sin(std::numbers::pi * xs);
  return p;
}

}  // namespace

TEST(Pcg, ZeroRightHandSide) {
  const SeparableOperator op = SeparableOperator::from_field(CoefficientField::laplace(2), 3, 2);
  const SemiOrthoMatvec mv(op, 3);
  const std::vector<double> b(mv.dof(), 0.0);
  const auto r = pcg(wrap(mv), b, semiortho_diagonal(3, op));
  EXPECT_EQ(r.iterations, 0);
  EXPECT_TRUE(r.converged);
  for (double v : r.x) EXPECT_EQ(v, 0.0);
}

TEST(Pcg, MatchesDenseDirectSolve) {
  const int n = 4;
  const SeparableOperator op = SeparableOperator::from_field(CoefficientField::laplace(2), n, 2);
  const SemiOrthoMatvec mv(op, n);
  const auto b = random_vector(mv.dof(), 3);
  const auto r = pcg(wrap(mv), b, semiortho_diagonal(n, op), {1e-12, 500});
  ASSERT_TRUE(r.converged) << r.failure;
  const Eigen::MatrixXd A = assemble_dense(n, op);
  const Eigen::VectorXd ref = A.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
  double err = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) err += (r.x[k] - ref[k]) * (r.x[k] - ref[k]);
  EXPECT_LE(std::sqrt(err), 1e-8);
}

TEST(Pcg, JacobiDoesNotChangeTheSolution) {
  const int n = 4;
  const double tol = 1e-10;
  const SeparableOperator op = SeparableOperator::from_field(CoefficientField::laplace(3, 1.0), n, 2);
  const SemiOrthoMatvec mv(op, n);
  const auto b = random_vector(mv.dof(), 5);
  const auto with = pcg(wrap(mv), b, semiortho_diagonal(n, op), {tol, 1000});
  const auto without = pcg(wrap(mv), b, {}, {tol, 1000});
  ASSERT_TRUE(with.converged);
  ASSERT_TRUE(without.converged);
  std::vector<double> diff(b.size());
  for (std::size_t k = 0; k < b.size(); ++k) diff[k] = with.x[k] - without.x[k];
  EXPECT_LE(norm2(diff), 10.0 * tol * norm2(with.x));
}

TEST(Pcg, EnergyIsMonotone) {
  const SeparableOperator op = SeparableOperator::from_field(CoefficientField::laplace(3), 4, 2);
  const SemiOrthoMatvec mv(op, 4);
  const auto b = random_vector(mv.dof(), 9);
  const auto r = pcg(wrap(mv), b, semiortho_diagonal(4, op));
  ASSERT_GT(r.energy_history.size(), 3u);
  for (std::size_t k = 1; k < r.energy_history.size(); ++k)
    EXPECT_LE(r.energy_history[k], r.energy_history[k - 1] + 1e-14 * std::abs(r.energy_history[k - 1]));
}

TEST(Pcg, FailureModes) {
  const std::vector<double> b{1.0, 2.0, 3.0};
  const auto stalled = pcg(diagonal_operator({1.0, 10.0, 100.0}), b, {}, {1e-14, 1});
  EXPECT_FALSE(stalled.converged);
  EXPECT_EQ(stalled.failure, "maximum iterations exceeded");
  const auto indefinite = pcg(diagonal_operator({1.0, -1.0, 2.0}), std::vector<double>{0.0, 1.0, 0.0}, {});
  EXPECT_FALSE(indefinite.converged);
  EXPECT_EQ(indefinite.failure, "operator not positive definite");
  const auto nan = pcg(diagonal_operator({1.0, std::nan(""), 2.0}), b, {});
  EXPECT_EQ(nan.failure, "non-finite value");
  EXPECT_THROW(pcg(diagonal_operator({1.0, 1.0, 1.0}), b, std::vector<double>{1.0, 0.0, 1.0}), std::invalid_argument);
}

TEST(Condition, IdentityHasUnitCondition) {
  const auto id = diagonal_operator(std::vector<double>(50, 1.0));
  const auto dense = estimate_condition(id, 50, {});
  EXPECT_EQ(dense.method, "dense");
  EXPECT_NEAR(dense.kappa, 1.0, 1e-14);
  ConditionOptions opt;
  opt.force_lanczos = true;
  const auto lz = estimate_condition(id, 50, {}, opt);
  EXPECT_EQ(lz.method, "lanczos");
  EXPECT_NEAR(lz.kappa, 1.0, 1e-12);
}

TEST(Condition, LanczosFindsExtremeEigenvalues) {
  std::vector<double> spectrum(200);
  for (std::size_t k = 0; k < spectrum.size(); ++k) spectrum[k] = 1.0 + 0.5 * static_cast<double>(k);
  const auto A = diagonal_operator(spectrum);
  ConditionOptions opt;
  opt.force_lanczos = true;
  const auto lz = estimate_condition(A, spectrum.size(), {}, opt);
  const double exact = spectrum.back() / spectrum.front();
  EXPECT_NEAR(lz.kappa, exact, 1e-6 * exact);
  // Jacobi scaling of a diagonal operator is perfect
  const auto pre = estimate_condition(A, spectrum.size(), spectrum, opt);
  EXPECT_NEAR(pre.kappa, 1.0, 1e-10);
}

TEST(Condition, DenseAndLanczosAgreeOnStiffness) {
  const SeparableOperator op = SeparableOperator::from_field(CoefficientField::laplace(2), 4, 2);
  const SemiOrthoMatvec mv(op, 4);
  const auto diag = semiortho_diagonal(4, op);
  const auto dense = estimate_condition(wrap(mv), mv.dof(), diag);
  ConditionOptions opt;
  opt.force_lanczos = true;
  const auto lz = estimate_condition(wrap(mv), mv.dof(), diag, opt);
  // Ritz values lie inside the spectrum
  EXPECT_LE(lz.kappa, dense.kappa * (1.0 + 1e-12));
  EXPECT_GE(lz.kappa, dense.kappa * (1.0 - 1e-3));
}

TEST(Rhs, ZeroData) {
  RhsInput in;
  in.dim = 2;
  in.f = [](std::span<const double>) { return 0.0; };
  for (auto mode : {RhsMode::Quadrature, RhsMode::Interpolation}) {
    in.mode = mode;
    for (double v : assemble_rhs(in, 3)) EXPECT_EQ(v, 0.0);
  }
  RhsInput missing;
  missing.dim = 2;
  EXPECT_THROW(assemble_rhs(missing, 2), std::invalid_argument);
}

TEST(Rhs, PrewaveletAsLoad) {
  // f = phi_{1,1} lies in the interpolation space: b = (phi_{1,1}, phi_{t,i}) exactly
  RhsInput in;
  in.dim = 1;
  in.f = [](std::span<const double> x) { return prewavelet_value(1, 1, x[0]); };
  in.mode = RhsMode::Interpolation;
  const int n = 3;
  const auto dofs = dof_table(SparseGridArray(n, 1, ValueFormat::PrewaveletCoeff));
  const auto b = assemble_rhs(in, n);
  for (std::size_t k = 0; k < dofs.size(); ++k) {
    const int t = dofs[k].level[0];
    const long i = dofs[k].index[0];
    EXPECT_NEAR(b[k], exact_1d_integrals(1, 1, t, i, IntegralKind::Mass), 1e-15) << "t=" << t << " i=" << i;
    if (t != 1) EXPECT_NEAR(b[k], 0.0, 1e-15);
  }
  const std::array<long, 1> i11{1};
  EXPECT_NEAR(b[1], prewavelet_mass(MultiIndex{1}, i11), 1e-15);
}

TEST(Rhs, QuadratureIsExactForPolynomials) {
  // g = x (1 - x): int g v = h g(c) + h^3 g''(c) / 12 for a hat of half-width h at c
  RhsInput in;
  in.dim = 1;
  in.f = [](std::span<const double> x) { return x[0] * (1.0 - x[0]); };
  const int n = 4;
  const auto dofs = dof_table(SparseGridArray(n, 1, ValueFormat::PrewaveletCoeff));
  const auto b = assemble_rhs(in, n);
  for (std::size_t k = 0; k < dofs.size(); ++k) {
    const int t = dofs[k].level[0];
    const auto st = prewavelet_stencil(t, dofs[k].index[0]);
    const double h = mesh_size(t);
    double expected = 0.0;
    for (int a = 0; a < st.count; ++a) {
      const double c = point_coord_1d(t, st.first + a);
      expected += st.coeff[a] * (h * c * (1.0 - c) - h * h * h / 6.0);
    }
    EXPECT_NEAR(b[k], expected, 1e-15) << "t=" << t;
  }
}

TEST(Rhs, ModesConvergeToEachOther) {
  RhsInput in;
  in.dim = 2;
  in.f = sine_product;
  std::vector<double> rel;
  for (int n = 3; n <= 7; ++n) {
    in.mode = RhsMode::Quadrature;
    const auto q = assemble_rhs(in, n);
    in.mode = RhsMode::Interpolation;
    const auto p = assemble_rhs(in, n);
    std::vector<double> diff(q.size());
    for (std::size_t k = 0; k < q.size(); ++k) diff[k] = q[k] - p[k];
    rel.push_back(norm2(diff) / norm2(q));
  }
  EXPECT_LE(rel[2], 5e-2);  // n = 5
  for (std::size_t k = 1; k < rel.size(); ++k) EXPECT_GT(rel[k - 1] / rel[k], 3.0) << "n=" << k + 3;
}

TEST(Rhs, SeparableMatchesGenericLoad) {
  RhsInput a;
  a.dim = 3;
  a.f = sine_product;
  RhsInput b = a;
  SeparableFunction sep;
  sep.terms.push_back(std::vector<Function1D>(3, [](double x) { return std::sin(std::numbers::pi * x); }));
  b.f_separable = sep;
  const auto ga = assemble_rhs(a, 4), gb = assemble_rhs(b, 4);
  for (std::size_t k = 0; k < ga.size(); ++k) EXPECT_NEAR(ga[k], gb[k], 1e-13);
}

TEST(Experiment, CubeSolveConvergesWithBoundedIterations) {
  const auto spec = builtin("debug2d", 2);
  RunOptions opt;
  opt.condition = true;
  const auto r4 = solve_problem(spec, 4, opt).report;
  const auto r7 = solve_problem(spec, 7, opt).report;
  EXPECT_TRUE(r4.converged);
  EXPECT_TRUE(r7.converged);
  EXPECT_LE(r7.relative_residual, opt.tol);
  ASSERT_TRUE(r7.errors.has_value());
  EXPECT_LT(r7.errors->e_inf, r4.errors->e_inf / 4.0);
  ASSERT_TRUE(r7.kappa.has_value() && r7.kappa_precond.has_value());
  EXPECT_LT(r7.kappa_precond->kappa, r7.kappa->kappa);
}
