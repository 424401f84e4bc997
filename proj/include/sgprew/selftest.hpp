#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "matvec.hpp"
#include "transform.hpp"

namespace sgprew {

struct SuiteResult {
  std::string name;
  bool passed = true;
  double worst = 0.0;  // largest normalized deviation seen
  double bound = 0.0;  // pass threshold for `worst`
  std::string detail;
  double seconds = 0.0;
};

inline const std::vector<std::string>& selftest_suites() {
  static const std::vector<std::string> names = {"oracle", "decoupling", "roundtrip", "orthogonality"};
  return names;
}

namespace detail {

inline std::vector<double> uniform_vector(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

inline void record(SuiteResult& r, double value, const std::string& where) {
  if (!(value <= r.worst)) {
    r.worst = value;
    r.detail = where;
  }
}

}  // namespace detail

/// Identity diffusion plus reaction c(x) = prod_s (1 - x_s^2).
inline CoefficientField helmholtz_variable_coefficient(int d) {
  std::vector<SeparableTerm> terms;
  for (int s = 0; s < d; ++s) terms.push_back({s, s, std::vector<Function1D>(d)});
  SeparableTerm react{-1, -1, std::vector<Function1D>(d)};
  for (int s = 0; s < d; ++s) react.factors[s] = [](double x) { return 1.0 - x * x; };
  terms.push_back(react);
  return CoefficientField::from_separable(d, terms);
}

/// Matrix-free semi-orthogonal matvec against the dense oracle:
/// ||Ax - Dx|| / (||D||_F ||x||) over random x.
inline SuiteResult selftest_oracle(unsigned long seed = 1, int samples = 20) {
  SuiteResult r{"oracle"};
  r.bound = 1e-12;
  std::mt19937_64 rng(seed);
  for (auto [d, n] : {std::pair{2, 4}, std::pair{3, 3}}) {
    for (bool variable : {false, true}) {
      const auto coeff = variable ? helmholtz_variable_coefficient(d) : CoefficientField::laplace(d);
      const SeparableOperator op = SeparableOperator::from_field(coeff, n, 2);
      const SemiOrthoMatvec mv(op, n);
      const Eigen::MatrixXd D = assemble_dense(n, op);
      const double fro = D.norm();
      for (int k = 0; k < samples; ++k) {
        const auto x = detail::uniform_vector(mv.dof(), rng);
        std::vector<double> y(x.size());
        mv(x, y);
        const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
        const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
        const double rel = (yv - D * xv).norm() / (fro * xv.norm());
        detail::record(r, rel, "d=" + std::to_string(d) + " n=" + std::to_string(n) + (variable ? " variable" : " laplace"));
      }
    }
  }
  r.passed = r.worst <= r.bound;
  return r;
}

/// Exact Galerkin entries between pre-wavelets with |max(t,t')| > n vanish for
/// constant diagonal coefficients (relative to the largest entry).
inline SuiteResult selftest_decoupling() {
  SuiteResult r{"decoupling"};
  r.bound = 1e-12;
  const std::vector<double> alpha{1.0, 2.5, 0.4};
  for (int d = 2; d <= 3; ++d)
    for (int n = 1; n <= 4; ++n) {
      const auto coeff = CoefficientField::constant_diagonal(std::vector<double>(alpha.begin(), alpha.begin() + d), 0.75);
      const SeparableOperator deep = SeparableOperator::from_field(coeff, 2 * n, 2);
      const Eigen::MatrixXd full = assemble_dense(n, deep, 20000, false);
      const auto dofs = dof_table(SparseGridArray(n, d, ValueFormat::PrewaveletCoeff));
      const double scale = full.diagonal().cwiseAbs().maxCoeff();
      for (std::size_t a = 0; a < dofs.size(); ++a)
        for (std::size_t b = 0; b < dofs.size(); ++b) {
          if (max(dofs[a].level, dofs[b].level).norm() <= n) continue;
          const double v = std::abs(full(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))) / scale;
          detail::record(r, v, "d=" + std::to_string(d) + " n=" + std::to_string(n));
        }
    }
  r.passed = r.worst <= r.bound;
  return r;
}

/// reconstruct(decompose(u)) = u for a random sparse grid function u. Point
/// values must agree across blocks at shared points, so u is built from
/// random pre-wavelet coefficients.
inline SuiteResult selftest_roundtrip(unsigned long seed = 1) {
  SuiteResult r{"roundtrip"};
  r.bound = 1e-12;
  std::mt19937_64 rng(seed);
  for (auto [d, n] : {std::pair{2, 6}, std::pair{3, 5}, std::pair{4, 4}, std::pair{6, 3}}) {
    SparseGridArray u(n, d, ValueFormat::PrewaveletCoeff);
    u.scatter_xi(detail::uniform_vector(u.dof(), rng));
    reconstruct(u);
    SparseGridArray v = u;
    decompose(v);
    reconstruct(v);
    double diff = 0.0, norm = 0.0;
    for (std::size_t b = 0; b < u.num_blocks(); ++b) {
      const auto x = u.block(b).values(), y = v.block(b).values();
      for (std::size_t k = 0; k < x.size(); ++k) {
        diff = std::max(diff, std::abs(y[k] - x[k]));
        norm = std::max(norm, std::abs(x[k]));
      }
    }
    detail::record(r, diff / norm, "d=" + std::to_string(d) + " n=" + std::to_string(n));
  }
  r.passed = r.worst <= r.bound;
  return r;
}

/// Exact 1-D L2 products of pre-wavelets on different levels vanish.
inline SuiteResult selftest_orthogonality(int max_level = 6) {
  SuiteResult r{"orthogonality"};
  r.bound = 1e-14;
  for (int t = 0; t <= max_level; ++t)
    for (int u = 0; u <= max_level; ++u) {
      if (t == u) continue;
      for (long i = 1; i <= level_size(t); ++i) {
        if (!in_xi(t, i)) continue;
        for (long j = 1; j <= level_size(u); ++j) {
          if (!in_xi(u, j)) continue;
          const double v = std::abs(exact_1d_integrals(t, i, u, j, IntegralKind::Mass));
          if (!(v <= r.worst)) detail::record(r, v, "t=" + std::to_string(t) + " i=" + std::to_string(i) + " t'=" + std::to_string(u) +
                                                    " i'=" + std::to_string(j));
        }
      }
    }
  r.passed = r.worst <= r.bound;
  return r;
}

inline SuiteResult run_selftest(const std::string& suite, unsigned long seed = 1) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteResult r;
  if (suite == "oracle") r = selftest_oracle(seed);
  else if (suite == "decoupling") r = selftest_decoupling();
  else if (suite == "roundtrip") r = selftest_roundtrip(seed);
  else if (suite == "orthogonality") r = selftest_orthogonality();
  else throw std::invalid_argument("unknown selftest suite '" + suite + "'");
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace sgprew
