#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "matvec.hpp"
#include "operator.hpp"
#include "problems.hpp"
#include "solver.hpp"

namespace sgprew {

/// Where condition numbers come from: the Lanczos tridiagonal of the CG runs
/// on the actual right-hand side (Solve), or estimate_condition with a dense
/// eigensolve for small systems and a seeded random right-hand side otherwise
/// (Probe).
enum class ConditionSource { Solve, Probe };

inline const char* to_string(ConditionSource c) { return c == ConditionSource::Solve ? "solve" : "probe"; }

struct RunOptions {
  int quad_order = 2;       // operator stencils
  int load_quad_order = 3;  // loads and lifting
  RhsMode rhs_mode = RhsMode::Quadrature;
  double tol = 1e-10;
  int max_iter = 500;
  int threads = 1;
  bool separable = true;    // use the factorized operator when available
  bool condition = true;    // estimate kappa(A) and kappa(C^T A C)
  ConditionSource condition_source = ConditionSource::Solve;
  ConditionOptions condition_options{};
};

struct Timings {
  double assembly = 0.0;
  double rhs = 0.0;
  double solve = 0.0;
  double matvec = 0.0;
  double transforms = 0.0;
  double condition = 0.0;
  double total = 0.0;
};

struct SolveReport {
  std::string problem;
  int t_max = 0;
  int depth = 0;
  std::size_t dof = 0;
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  std::string failure;
  std::optional<ConditionEstimate> kappa;
  std::optional<ConditionEstimate> kappa_precond;
  std::optional<ErrorNorms> errors;
  std::string rhs_mode;
  Timings seconds;
};

struct RunResult {
  SolveReport report;
  SparseGridArray solution;  // pre-wavelet coefficients of u0
};

/// Assemble, solve and evaluate one sparse grid of depth n = t_max - 1.
inline RunResult solve_problem(const ProblemSpec& spec, int t_max, const RunOptions& opt = {}) {
  using clock = std::chrono::steady_clock;
  auto since = [](clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); };
  if (t_max < 1) throw std::invalid_argument("solve_problem: t_max must be >= 1");
  const auto start = clock::now();
  const int n = t_max - 1;
  const int d = spec.dim;
  RunResult out{SolveReport{}, SparseGridArray(n, d, ValueFormat::PrewaveletCoeff)};
  auto& rep = out.report;
  rep.problem = spec.name;
  rep.t_max = t_max;
  rep.depth = n;
  rep.dof = out.solution.dof();
  rep.rhs_mode = to_string(opt.rhs_mode);

  auto t0 = clock::now();
  const auto op = make_level_operator(spec.coeff, n, opt.quad_order, opt.threads, opt.separable);
  const SemiOrthoMatvec mv(*op, n, opt.threads);
  const auto diag = semiortho_diagonal(n, *op);
  rep.seconds.assembly = since(t0);

  t0 = clock::now();
  RhsInput in;
  in.dim = d;
  in.f = spec.f;
  in.f_separable = spec.f_separable;
  in.lifting = spec.lifting;
  in.coeff = &spec.coeff;
  in.quad_order = opt.load_quad_order;
  in.mode = opt.rhs_mode;
  in.threads = opt.threads;
  const auto b = assemble_rhs(in, n);
  rep.seconds.rhs = since(t0);

  const LinearOperator A = [&mv](std::span<const double> x, std::span<double> y) { mv(x, y); };
  t0 = clock::now();
  const auto cg = pcg(A, b, diag, {opt.tol, opt.max_iter});
  rep.seconds.solve = since(t0);
  rep.seconds.matvec = cg.matvec_seconds;
  rep.iterations = cg.iterations;
  rep.relative_residual = cg.relative_residual;
  rep.converged = cg.converged;
  rep.failure = cg.failure;
  out.solution.scatter_xi(cg.x);

  if (spec.u_exact) {
    t0 = clock::now();
    rep.errors = error_norms(out.solution, spec);
    rep.seconds.transforms = since(t0);
  }
  if (opt.condition) {
    t0 = clock::now();
    if (opt.condition_source == ConditionSource::Solve) {
      rep.kappa_precond = lanczos_condition(cg.alpha, cg.beta);
      const auto plain = pcg(A, b, {}, {opt.tol, opt.max_iter});
      rep.kappa = lanczos_condition(plain.alpha, plain.beta);
      // running out of iterations still leaves a valid (partial) tridiagonal
      if (!plain.failure.empty() && plain.failure != "maximum iterations exceeded") rep.kappa->degraded = true;
    } else {
      rep.kappa_precond = estimate_condition(A, rep.dof, diag, opt.condition_options);
      rep.kappa = estimate_condition(A, rep.dof, {}, opt.condition_options);
    }
    rep.seconds.condition = since(t0);
  }
  rep.seconds.total = since(start);
  return out;
}

}  // namespace sgprew
