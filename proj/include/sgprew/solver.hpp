#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "basis1d.hpp"
#include "coefficients.hpp"
#include "fiber.hpp"
#include "grid.hpp"
#include "operator.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "stencil.hpp"
#include "transform.hpp"

namespace sgprew {

using LinearOperator = std::function<void(std::span<const double>, std::span<double>)>;

// ---------------------------------------------------------------------------
// Right-hand side
// ---------------------------------------------------------------------------

enum class RhsMode { Quadrature, Interpolation };

inline const char* to_string(RhsMode m) { return m == RhsMode::Quadrature ? "quadrature" : "interpolation"; }

struct RhsInput {
  int dim = 0;
  ScalarField f;
  std::optional<SeparableFunction> f_separable;  // used for loads when present
  FieldWithGradient lifting;                     // empty for homogeneous data
  const CoefficientField* coeff = nullptr;       // needed with a lifting
  int quad_order = 3;
  RhsMode mode = RhsMode::Quadrature;
  int threads = 1;
};

/// int g(x) v_{k,i}(x) dx on 1-D level k.
inline std::vector<double> load_1d(int k, const Function1D& g, int q) {
  const long n = level_size(k);
  const double h = mesh_size(k);
  const auto& rule = gauss_legendre(level_quad_order_1d(q, k));
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (long c = 0; c <= n; ++c)
    for (int p = 0; p < rule.size(); ++p) {
      const double xi = rule.nodes[p];
      const double w = rule.weights[p] * h * (g ? g((static_cast<double>(c) + xi) * h) : 1.0);
      if (c >= 1) out[c - 1] += w * (1.0 - xi);
      if (c + 1 <= n) out[c] += w * xi;
    }
  return out;
}

/// Nodal load vector int f v_{t,i} of a separable f.
inline std::vector<double> assemble_separable_load(const MultiIndex& t, const SeparableFunction& f, int q) {
  const BlockShape shape(t);
  const int d = t.dim();
  std::vector<double> out(static_cast<std::size_t>(shape.size), 0.0);
  for (const auto& term : f.terms) {
    std::vector<std::vector<double>> v(d);
    for (int s = 0; s < d; ++s) v[s] = load_1d(t[s], s < static_cast<int>(term.size()) ? term[s] : Function1D{}, q);
    for (long off = 0; off < shape.size; ++off) {
      long r = off;
      double p = 1.0;
      for (int s = 0; s < d; ++s) {
        p *= v[s][r % shape.extent[s]];
        r /= shape.extent[s];
      }
      out[off] += p;
    }
  }
  return out;
}

/// ||phi_{t,i}||^2 in L2, product of exact 1-D values.
inline double prewavelet_mass(const MultiIndex& t, std::span<const long> i) {
  double p = 1.0;
  for (int s = 0; s < t.dim(); ++s) p *= exact_1d_integrals(t[s], i[s], t[s], i[s], IntegralKind::Mass);
  return p;
}

/// b_{t,i} = int f phi_{t,i} - a(u_g, phi_{t,i}) in compact DOF order.
inline std::vector<double> assemble_rhs(const RhsInput& in, int n) {
  if (in.lifting && !in.coeff) throw std::invalid_argument("assemble_rhs: lifting needs the coefficient field");
  if (!in.f && !in.f_separable) throw std::invalid_argument("assemble_rhs: missing right-hand side");
  const int d = in.dim;
  SparseGridArray F(n, d, ValueFormat::Functional);
  const std::size_t nb = F.num_blocks();

  if (in.mode == RhsMode::Interpolation) {
    auto fs = [&](std::span<const double> x) { return in.f ? in.f(x) : (*in.f_separable)(x); };
    auto c = sample(n, d, fs);
    decompose(c);
    // exact mass matrix: block diagonal across levels, so apply it per level
    // in the nodal basis and test against the level's pre-wavelets
    std::vector<Tridiagonal> mass(n + 1);
    for (int k = 0; k <= n; ++k) mass[k] = assemble_tridiagonal(k, false, false, {}, 2);
    parallel_for(nb, in.threads, [&](std::size_t b) {
      auto& blk = c.block(b);
      const auto& shape = blk.shape();
      auto vals = blk.values();
      std::vector<double> prev;
      for (int s = 0; s < d; ++s) synthesis_block(vals, shape, s);
      for (int s = 0; s < d; ++s) apply_tridiagonal_along(vals, shape, s, mass[shape.level[s]], prev);
      for (int s = 0; s < d; ++s) dual_block(vals, shape, s);
    });
    auto b = c.gather_xi();
    if (in.lifting) {
      // a(u_g, .) has no interpolation counterpart; use quadrature
      RhsInput lift = in;
      lift.mode = RhsMode::Quadrature;
      lift.f = [](std::span<const double>) { return 0.0; };
      lift.f_separable.reset();
      const auto l = assemble_rhs(lift, n);
      for (std::size_t k = 0; k < b.size(); ++k) b[k] += l[k];
    }
    return b;
  }

  parallel_for(nb, in.threads, [&](std::size_t b) {
    auto& blk = F.block(b);
    const auto& t = blk.level();
    auto vals = blk.values();
    const auto load = in.f_separable ? assemble_separable_load(t, *in.f_separable, in.quad_order)
                                     : assemble_load(t, in.f, in.quad_order);
    std::copy(load.begin(), load.end(), vals.begin());
    if (in.lifting) {
      const auto l = lifting_contribution(t, in.lifting, *in.coeff, in.quad_order);
      for (std::size_t k = 0; k < l.size(); ++k) vals[k] -= l[k];
    }
    for (int s = 0; s < d; ++s) dual_block(vals, blk.shape(), s);
  });
  return F.gather_xi();
}

// ---------------------------------------------------------------------------
// Preconditioned conjugate gradients
// ---------------------------------------------------------------------------

struct PcgOptions {
  double tol = 1e-10;
  int max_iter = 500;
};

struct PcgResult {
  std::vector<double> x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  std::string failure;                 // empty on success
  std::vector<double> alpha, beta;     // CG coefficients (Lanczos tridiagonal)
  std::vector<double> residual_history;
  std::vector<double> energy_history;  // 1/2 x^T A x - b^T x per iterate
  double matvec_seconds = 0.0;
};

/// CG on A x = b with the Jacobi preconditioner diag (identity when empty).
inline PcgResult pcg(const LinearOperator& A, std::span<const double> b, std::span<const double> diag, const PcgOptions& opt = {}) {
  using clock = std::chrono::steady_clock;
  const std::size_t n = b.size();
  if (!diag.empty() && diag.size() != n) throw std::invalid_argument("pcg: preconditioner length mismatch");
  for (double v : diag)
    if (!(v > 0.0)) throw std::invalid_argument("pcg: preconditioner entries must be positive");
  auto dot = [n](std::span<const double> u, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += u[k] * v[k];
    return s;
  };
  auto precond = [&](const std::vector<double>& r, std::vector<double>& z) {
    for (std::size_t k = 0; k < n; ++k) z[k] = diag.empty() ? r[k] : r[k] / diag[k];
  };

  PcgResult res;
  res.x.assign(n, 0.0);
  const double bnorm = std::sqrt(dot(b, b));
  res.residual_history.push_back(bnorm == 0.0 ? 0.0 : 1.0);
  res.energy_history.push_back(0.0);
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  std::vector<double> r(b.begin(), b.end()), z(n), p(n), q(n);
  precond(r, z);
  p = z;
  double rz = dot(r, z);
  for (int it = 0; it < opt.max_iter; ++it) {
    const auto t0 = clock::now();
    A(p, q);
    res.matvec_seconds += std::chrono::duration<double>(clock::now() - t0).count();
    const double pq = dot(p, q);
    if (!std::isfinite(pq) || pq <= 0.0) {
      res.failure = std::isfinite(pq) ? "operator not positive definite" : "non-finite value";
      break;
    }
    const double alpha = rz / pq;
    for (std::size_t k = 0; k < n; ++k) {
      res.x[k] += alpha * p[k];
      r[k] -= alpha * q[k];
    }
    res.iterations = it + 1;
    res.alpha.push_back(alpha);
    const double rel = std::sqrt(dot(r, r)) / bnorm;
    res.relative_residual = rel;
    res.residual_history.push_back(rel);
    double xbr = 0.0;
    for (std::size_t k = 0; k < n; ++k) xbr += res.x[k] * (b[k] + r[k]);
    res.energy_history.push_back(-0.5 * xbr);
    if (!std::isfinite(rel)) {
      res.failure = "non-finite value";
      break;
    }
    if (rel <= opt.tol) {
      res.converged = true;
      break;
    }
    precond(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    res.beta.push_back(beta);
    rz = rz_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }
  if (!res.converged && res.failure.empty()) res.failure = "maximum iterations exceeded";
  return res;
}

// ---------------------------------------------------------------------------
// Condition numbers
// ---------------------------------------------------------------------------

struct ConditionEstimate {
  double kappa = 0.0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  std::string method;
  int steps = 0;
  bool degraded = false;
};

/// Extremal Ritz values of the Lanczos tridiagonal built from CG coefficients.
inline ConditionEstimate lanczos_condition(std::span<const double> alpha, std::span<const double> beta) {
  ConditionEstimate est;
  est.method = "lanczos";
  const int k = static_cast<int>(alpha.size());
  est.steps = k;
  if (k == 0) {
    est.degraded = true;
    return est;
  }
  Eigen::VectorXd diag(k), off(std::max(k - 1, 0));
  for (int j = 0; j < k; ++j) {
    diag[j] = 1.0 / alpha[j] + (j > 0 ? beta[j - 1] / alpha[j - 1] : 0.0);
    if (j + 1 < k) off[j] = std::sqrt(beta[j]) / alpha[j];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  est.lambda_min = eig.eigenvalues()[0];
  est.lambda_max = eig.eigenvalues()[k - 1];
  est.degraded = !(est.lambda_min > 0.0) || eig.info() != Eigen::Success;
  est.kappa = est.lambda_max / est.lambda_min;
  return est;
}

/// Eigenvalues of the dense matrix of A (scaled by diag^{-1/2} on both sides when given).
inline ConditionEstimate dense_condition(const LinearOperator& A, std::size_t n, std::span<const double> diag) {
  Eigen::MatrixXd M(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<double> e(n, 0.0), col(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    A(e, col);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) M(i, j) = col[i];
  }
  M = 0.5 * (M + M.transpose());
  if (!diag.empty())
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) M(i, j) /= std::sqrt(diag[i] * diag[j]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(M, Eigen::EigenvaluesOnly);
  ConditionEstimate est;
  est.method = "dense";
  est.steps = static_cast<int>(n);
  est.lambda_min = eig.eigenvalues()[0];
  est.lambda_max = eig.eigenvalues()[static_cast<Eigen::Index>(n) - 1];
  est.degraded = !(est.lambda_min > 0.0);
  est.kappa = est.lambda_max / est.lambda_min;
  return est;
}

struct ConditionOptions {
  std::size_t dense_limit = 2000;  // dense eigensolve up to this many DOF
  bool force_lanczos = false;
  int max_steps = 500;
  double tol = 1e-12;
  unsigned seed = 1;
};

/// kappa(A), or kappa(D^{-1/2} A D^{-1/2}) when diag is given.
inline ConditionEstimate estimate_condition(const LinearOperator& A, std::size_t n, std::span<const double> diag,
                                            const ConditionOptions& opt = {}) {
  if (n == 0) throw std::invalid_argument("estimate_condition: empty operator");
  if (!opt.force_lanczos && n <= opt.dense_limit) return dense_condition(A, n, diag);
  std::mt19937 rng(opt.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> b(n);
  for (auto& v : b) v = u(rng);
  const auto run = pcg(A, b, diag, {opt.tol, opt.max_steps});
  auto est = lanczos_condition(run.alpha, run.beta);
  est.degraded = est.degraded || !run.failure.empty() && run.failure != "maximum iterations exceeded";
  return est;
}

}  // namespace sgprew
