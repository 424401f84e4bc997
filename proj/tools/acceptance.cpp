// Acceptance run: one PASS/FAIL line per criterion, details indented above it.
// Exit status is the number of failed criteria (0 when all pass).
#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "sgprew/report.hpp"
#include "sgprew/selftest.hpp"

using namespace sgprew;

namespace {

using clock_type = std::chrono::steady_clock;

double since(clock_type::time_point t0) { return std::chrono::duration<double>(clock_type::now() - t0).count(); }

// Reference tables, indexed by t_max - 2 (t_max = 2..9; 2..6 for 6-D).
const std::vector<double> kCubeInf{1.4131e-1, 7.8379e-2, 3.0813e-2, 1.0418e-2, 3.2704e-3, 9.8289e-4, 2.9844e-4, 8.8898e-5};
const std::vector<double> kCubeL2{2.0150e-2, 1.1328e-2, 5.0768e-3, 1.9677e-3, 6.9732e-4, 2.3303e-4, 7.4714e-5, 2.3233e-5};
const std::vector<double> kCurvedInf{1.4131e-1, 1.3066e-1, 8.2763e-2, 2.6655e-2, 8.9742e-3, 2.6322e-3, 7.9659e-4, 2.3461e-4};
const std::vector<double> kCubeKappaPre{1.62, 2.42, 3.87, 4.40, 4.59, 5.05, 5.10, 5.46};
const std::vector<double> kCurvedKappaPre{2.18, 3.25, 3.91, 4.49, 4.99, 5.06, 5.43, 5.95};
const std::vector<double> kHelmholtzVarInf{0.391625, 0.282802, 0.106861, 0.040046, 0.015328};

int failed = 0;

void verdict(int id, bool pass, const std::string& summary, double seconds) {
  std::printf("CRITERION %2d %s  %s  (%.1f s)\n", id, pass ? "PASS" : "FAIL", summary.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++failed;
}

void note(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void note(const char* fmt, ...) {
  std::printf("    ");
  va_list args;
  va_start(args, fmt);
  std::vprintf(fmt, args);
  va_end(args);
  std::printf("\n");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

SweepConfig sweep(const std::string& problem, int lo, int hi, const std::string& condition) {
  SweepConfig c;
  c.problem = problem;
  c.t_min = lo;
  c.t_max = hi;
  c.run.rhs_mode = RhsMode::Interpolation;
  c.run.threads = 1;
  c.condition = condition;
  return c;
}

void print_table(const SweepResult& r) {
  std::string line;
  for (char ch : r.table) {
    if (ch == '\n') {
      note("%s", line.c_str());
      line.clear();
    } else {
      line += ch;
    }
  }
}

double ratio(const std::vector<SolveReport>& r, std::size_t k, bool inf) {
  const auto& a = *r[k - 1].errors;
  const auto& b = *r[k].errors;
  return inf ? a.e_inf / b.e_inf : a.e_2 / b.e_2;
}

void suite_criterion(int id, const std::string& suite, double limit_seconds) {
  const auto r = run_selftest(suite, 1);
  const bool fast = r.seconds < limit_seconds;
  verdict(id, r.passed && fast,
          suite + ": worst " + fmt("%.3e", r.worst) + " vs bound " + fmt("%.0e", r.bound) + " at " + r.detail +
              (fast ? "" : ", too slow"),
          r.seconds);
}

/// kappa(C^T A C) with the dense eigensolver up to 2000 DOF and randomized
/// Lanczos beyond.
ConditionEstimate probe_precond(const ProblemSpec& spec, int t_max) {
  const int n = t_max - 1;
  const auto op = make_level_operator(spec.coeff, n, 2, 1, true);
  const SemiOrthoMatvec mv(*op, n);
  const LinearOperator A = [&mv](std::span<const double> x, std::span<double> y) { mv(x, y); };
  return estimate_condition(A, mv.dof(), semiortho_diagonal(n, *op));
}

}  // namespace

int main() {
  // 1-4: algebraic suites
  suite_criterion(1, "oracle", 30.0);
  suite_criterion(2, "decoupling", 10.0);
  suite_criterion(3, "roundtrip", 10.0);
  suite_criterion(4, "orthogonality", 1e9);

  // 5, 6, 10, 11: cube sweep in the interpolation pipeline, twice
  auto t0 = clock_type::now();
  const auto cube = run_sweep(sweep("poisson3d_cube", 2, 9, "solve"));
  const double cube_seconds = since(t0);
  const auto cube_again = run_sweep(sweep("poisson3d_cube", 2, 9, "solve"));
  print_table(cube);
  {
    bool pass = !cube.failed && cube.reports.size() == 8;
    double worst_dev = 0.0, rmin = 1e9, rmax = 0.0;
    for (std::size_t k = 0; pass && k < cube.reports.size(); ++k) {
      const double e = cube.reports[k].errors->e_inf;
      worst_dev = std::max(worst_dev, std::abs(e - kCubeInf[k]) / kCubeInf[k]);
      if (cube.reports[k].t_max >= 5) {
        const double q = ratio(cube.reports, k, true);
        rmin = std::min(rmin, q);
        rmax = std::max(rmax, q);
      }
    }
    pass = pass && worst_dev <= 0.35 && rmin >= 2.4 && rmax <= 3.8 && cube_seconds < 300.0;
    verdict(5, pass, "cube e_inf max deviation " + fmt("%.2f%%", 100 * worst_dev) + ", ratios t>=5 in " + fmt("[%.2f, ", rmin) + fmt("%.2f]", rmax),
            cube_seconds);
  }
  {
    bool pass = !cube.failed && cube.reports.size() == 8;
    double rmin = 1e9, rmax = 0.0, e9 = pass ? cube.reports.back().errors->e_2 : 0.0;
    for (std::size_t k = 0; pass && k < cube.reports.size(); ++k)
      if (cube.reports[k].t_max >= 6) {
        const double q = ratio(cube.reports, k, false);
        rmin = std::min(rmin, q);
        rmax = std::max(rmax, q);
      }
    pass = pass && e9 <= 3.5e-5 && rmin >= 2.5 && rmax <= 3.6;
    verdict(6, pass, "cube e_2(9) " + fmt("%.4e", e9) + " (reference " + fmt("%.4e", kCubeL2.back()) + "), ratios t>=6 in " + fmt("[%.2f, ", rmin) + fmt("%.2f]", rmax), 0.0);
  }

  // 7: curved domain
  t0 = clock_type::now();
  const auto curved = run_sweep(sweep("poisson3d_curved", 2, 9, "none"));
  const double curved_seconds = since(t0);
  print_table(curved);
  {
    bool pass = !curved.failed && curved.reports.size() == 8;
    double rmin = 1e9, e9 = pass ? curved.reports.back().errors->e_inf : 0.0;
    for (std::size_t k = 0; pass && k < curved.reports.size(); ++k) {
      note("t_max %d: e_inf %.4e, reference %.4e", curved.reports[k].t_max, curved.reports[k].errors->e_inf, kCurvedInf[k]);
      if (curved.reports[k].t_max >= 7) rmin = std::min(rmin, ratio(curved.reports, k, true));
    }
    pass = pass && e9 <= 3.5e-4 && rmin >= 2.8 && curved_seconds < 600.0;
    verdict(7, pass, "curved e_inf(9) " + fmt("%.4e", e9) + ", min ratio t>=7 " + fmt("%.2f", rmin), curved_seconds);
  }

  // 8: preconditioned condition numbers, dense up to 2000 DOF, Lanczos beyond
  t0 = clock_type::now();
  {
    bool below10 = true, dense_ok = true, lanczos_ok = true;
    for (const auto& [name, ref] : {std::pair{"poisson3d_cube", &kCubeKappaPre}, std::pair{"poisson3d_curved", &kCurvedKappaPre}}) {
      const auto spec = builtin(name);
      for (int t = 2; t <= 9; ++t) {
        const auto c = probe_precond(spec, t);
        const double want = (*ref)[t - 2];
        note("%-16s t_max %d: kappa(C^T A C) %.3f [%s], reference %.2f", name, t, c.kappa, c.method.c_str(), want);
        below10 = below10 && c.kappa < 10.0;
        if (t <= 4) dense_ok = dense_ok && std::abs(c.kappa - want) <= 0.05 * want;
        if (t == 9) lanczos_ok = lanczos_ok && std::abs(c.kappa - want) <= 0.20 * want;
      }
    }
    for (const auto& r : cube.reports)
      note("cube t_max %d: Lanczos of the solve, kappa(A) %.3f, kappa(C^T A C) %.3f", r.t_max, r.kappa ? r.kappa->kappa : 0.0,
           r.kappa_precond ? r.kappa_precond->kappa : 0.0);
    verdict(8, below10 && dense_ok && lanczos_ok,
            std::string("below 10: ") + (below10 ? "yes" : "no") + ", dense t<=4 within 5%: " + (dense_ok ? "yes" : "no") +
                ", Lanczos t=9 within 20%: " + (lanczos_ok ? "yes" : "no"),
            since(t0));
  }

  // 9: 6-D Helmholtz
  t0 = clock_type::now();
  {
    const auto var = run_sweep(sweep("helmholtz6d_var", 2, 6, "none"));
    const auto con = run_sweep(sweep("helmholtz6d_const", 2, 6, "none"));
    print_table(var);
    print_table(con);
    bool pass = !var.failed && !con.failed && var.reports.size() == 5 && con.reports.size() == 5;
    double dev5 = 0.0, e6 = 0.0, spread = 0.0, rmin = 1e9, rmax = 0.0;
    if (pass) {
      dev5 = std::abs(var.reports[3].errors->e_inf - kHelmholtzVarInf[3]) / kHelmholtzVarInf[3];
      e6 = var.reports[4].errors->e_inf;
      for (std::size_t k = 0; k < 5; ++k) {
        const double a = var.reports[k].errors->e_inf, b = con.reports[k].errors->e_inf;
        spread = std::max(spread, std::abs(a - b) / a);
        if (var.reports[k].t_max >= 4) {
          const double q = ratio(var.reports, k, true);
          rmin = std::min(rmin, q);
          rmax = std::max(rmax, q);
        }
      }
    }
    pass = pass && dev5 <= 0.20 && e6 <= 0.019 && spread < 0.05 && rmin >= 2.2 && rmax <= 3.0 && since(t0) < 1800.0;
    verdict(9, pass,
            "var e_inf(5) off by " + fmt("%.2f%%", 100 * dev5) + ", e_inf(6) " + fmt("%.4e", e6) + ", const/var spread " +
                fmt("%.2f%%", 100 * spread) + ", ratios t>=4 in " + fmt("[%.2f, ", rmin) + fmt("%.2f]", rmax),
            since(t0));
  }

  // 10: iteration growth and agreement with a direct solve
  t0 = clock_type::now();
  {
    const int it4 = cube.reports.size() > 2 ? cube.reports[2].iterations : -1;
    const int it9 = cube.reports.size() == 8 ? cube.reports[7].iterations : -1;
    const int n = 4;
    const auto spec = builtin("debug2d", 2);
    const auto op = make_level_operator(spec.coeff, n, 2, 1, true);
    const SemiOrthoMatvec mv(*op, n);
    RhsInput in;
    in.dim = 2;
    in.f = spec.f;
    const auto b = assemble_rhs(in, n);
    const auto cg = pcg([&mv](std::span<const double> x, std::span<double> y) { mv(x, y); }, b, semiortho_diagonal(n, *op), {1e-10, 500});
    const Eigen::MatrixXd D = assemble_dense(n, *op);
    const Eigen::VectorXd ref = D.ldlt().solve(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
    const double err = (Eigen::Map<const Eigen::VectorXd>(cg.x.data(), static_cast<Eigen::Index>(cg.x.size())) - ref).norm();
    note("CG iterations: t_max 4 -> %d, t_max 9 -> %d (limit %d)", it4, it9, 3 * it4);
    note("d=2, n=4: ||x_cg - x_direct|| = %.3e", err);
    const bool pass = it4 > 0 && it9 > 0 && it9 <= 3 * it4 && err <= 1e-8;
    verdict(10, pass, "iterations " + std::to_string(it9) + " vs 3 x " + std::to_string(it4) + ", direct-solve gap " + fmt("%.2e", err),
            since(t0));
  }

  // 11: determinism of the criterion-5 table
  {
    const bool same = !cube.table.empty() && cube.table == cube_again.table;
    verdict(11, same, same ? "two single-threaded cube sweeps gave identical CSV bytes" : "CSV bytes differ between runs", 0.0);
  }

  std::printf("%d of 11 criteria failed\n", failed);
  return failed;
}
