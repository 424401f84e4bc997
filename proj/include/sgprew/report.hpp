#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "experiment.hpp"

namespace sgprew {

/// One sweep over t_max = t_min..t_max of a built-in problem.
struct SweepConfig {
  std::string problem = "poisson3d_cube";
  int dim = 2;  // debug2d only
  int t_min = 2;
  int t_max = 5;
  RunOptions run{};
  std::string condition = "solve";  // solve | probe | none
  unsigned long seed = 1;

  RunOptions options() const {
    RunOptions o = run;
    o.condition = condition != "none";
    o.condition_source = condition == "probe" ? ConditionSource::Probe : ConditionSource::Solve;
    o.condition_options.seed = static_cast<unsigned>(seed);
    return o;
  }
};

/// CSV columns of the convergence table. Wall times live in timings.csv so
/// that this table is reproducible byte for byte.
inline const char* kTableHeader = "t_max,DOF,e_inf,ratio_inf,e_2,ratio_2,kappa,kappa_precond,iterations";
inline const char* kTimingsHeader = "t_max,DOF,assembly,rhs,solve,matvec,transforms,condition,total";

namespace detail {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5e", v);
  return buf;
}

inline std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace detail

/// Table row; ratios are previous / current and empty on the first row.
inline std::string table_row(const SolveReport& r, const SolveReport* prev) {
  std::string s = std::to_string(r.t_max) + "," + std::to_string(r.dof) + ",";
  auto ratio = [&](double cur, double before) { return before > 0.0 && cur > 0.0 ? detail::sci(before / cur) : std::string(); };
  if (r.errors) {
    s += detail::sci(r.errors->e_inf) + ",";
    s += (prev && prev->errors ? ratio(r.errors->e_inf, prev->errors->e_inf) : "") + ",";
    s += detail::sci(r.errors->e_2) + ",";
    s += (prev && prev->errors ? ratio(r.errors->e_2, prev->errors->e_2) : "") + ",";
  } else {
    s += ",,,,";
  }
  s += (r.kappa ? detail::sci(r.kappa->kappa) : "") + ",";
  s += (r.kappa_precond ? detail::sci(r.kappa_precond->kappa) : "") + ",";
  s += std::to_string(r.iterations);
  return s;
}

inline std::string timings_row(const SolveReport& r) {
  const auto& t = r.seconds;
  return std::to_string(r.t_max) + "," + std::to_string(r.dof) + "," + detail::fixed(t.assembly) + "," + detail::fixed(t.rhs) + "," +
         detail::fixed(t.solve) + "," + detail::fixed(t.matvec) + "," + detail::fixed(t.transforms) + "," +
         detail::fixed(t.condition) + "," + detail::fixed(t.total);
}

inline nlohmann::json to_json(const ConditionEstimate& c) {
  return {{"kappa", c.kappa}, {"lambda_min", c.lambda_min}, {"lambda_max", c.lambda_max},
          {"method", c.method}, {"steps", c.steps},           {"degraded", c.degraded}};
}

inline nlohmann::json to_json(const SolveReport& r) {
  nlohmann::json j;
  j["problem"] = r.problem;
  j["t_max"] = r.t_max;
  j["depth"] = r.depth;
  j["dof"] = r.dof;
  j["iterations"] = r.iterations;
  j["relative_residual"] = r.relative_residual;
  j["converged"] = r.converged;
  j["failure"] = r.failure;
  j["rhs_mode"] = r.rhs_mode;
  j["kappa"] = r.kappa ? to_json(*r.kappa) : nlohmann::json(nullptr);
  j["kappa_precond"] = r.kappa_precond ? to_json(*r.kappa_precond) : nlohmann::json(nullptr);
  j["errors"] = r.errors ? nlohmann::json{{"e_inf", r.errors->e_inf}, {"e_2", r.errors->e_2}} : nlohmann::json(nullptr);
  const auto& t = r.seconds;
  j["seconds"] = {{"assembly", t.assembly}, {"rhs", t.rhs},       {"solve", t.solve},         {"matvec", t.matvec},
                  {"transforms", t.transforms}, {"condition", t.condition}, {"total", t.total}};
  return j;
}

inline nlohmann::json to_json(const SweepConfig& c) {
  const auto& o = c.run;
  return {{"problem", c.problem},
          {"dim", c.dim},
          {"tmax", std::to_string(c.t_min) + ".." + std::to_string(c.t_max)},
          {"quad_order", o.quad_order},
          {"load_quad_order", o.load_quad_order},
          {"rhs_mode", to_string(o.rhs_mode)},
          {"tol", o.tol},
          {"max_iter", o.max_iter},
          {"threads", o.threads},
          {"condition", c.condition},
          {"seed", c.seed}};
}

struct SweepResult {
  std::vector<SolveReport> reports;
  std::string table;    // CSV including header
  std::string timings;  // CSV including header
  bool failed = false;  // a solve did not converge; later depths were skipped
};

/// Runs the sweep; `on_row` sees each report as soon as it is available.
template <class OnRow>
SweepResult run_sweep(const SweepConfig& cfg, OnRow&& on_row) {
  if (cfg.t_min < 1 || cfg.t_max < cfg.t_min) throw std::invalid_argument("run_sweep: bad t_max range");
  const auto spec = builtin(cfg.problem, cfg.dim);
  const auto opt = cfg.options();
  SweepResult out;
  out.table = std::string(kTableHeader) + "\n";
  out.timings = std::string(kTimingsHeader) + "\n";
  for (int t = cfg.t_min; t <= cfg.t_max; ++t) {
    auto rep = solve_problem(spec, t, opt).report;
    out.table += table_row(rep, out.reports.empty() ? nullptr : &out.reports.back()) + "\n";
    out.timings += timings_row(rep) + "\n";
    out.reports.push_back(rep);
    on_row(out.reports.back(), out);
    if (!rep.converged) {
      out.failed = true;
      break;
    }
  }
  return out;
}

inline SweepResult run_sweep(const SweepConfig& cfg) {
  return run_sweep(cfg, [](const SolveReport&, const SweepResult&) {});
}

}  // namespace sgprew
