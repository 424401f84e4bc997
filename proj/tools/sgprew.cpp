// Experiment runner: `sgprew run` sweeps t_max for a built-in problem and
// writes table.csv, timings.csv and report.json; `sgprew selftest` runs the
// small correctness suites.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgprew/report.hpp"
#include "sgprew/selftest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sgprew;

namespace {

constexpr int kExitSolverFailure = 1;
constexpr int kExitConfigError = 2;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunFlags {
  std::optional<std::string> problem, tmax, rhs_mode, output, format, condition, config;
  std::optional<int> dim, quad_order, load_quad_order, max_iter, threads;
  std::optional<double> tol;
  std::optional<unsigned long> seed;
  bool dry_run = false;
};

std::pair<int, int> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    std::size_t used = 0;
    if (dots == std::string::npos) {
      const int v = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return {v, v};
    }
    const std::string a = s.substr(0, dots), b = s.substr(dots + 2);
    const int lo = std::stoi(a, &used);
    if (used != a.size()) throw std::invalid_argument(s);
    const int hi = std::stoi(b, &used);
    if (used != b.size()) throw std::invalid_argument(s);
    return {lo, hi};
  } catch (const std::exception&) {
    throw ConfigError("--tmax expects A..B, got '" + s + "'");
  }
}

RhsMode parse_rhs_mode(const std::string& s) {
  if (s == "quadrature") return RhsMode::Quadrature;
  if (s == "interpolation") return RhsMode::Interpolation;
  throw ConfigError("rhs_mode must be quadrature or interpolation, got '" + s + "'");
}

struct Settings {
  SweepConfig sweep;
  std::string output = "results";
  std::string format = "both";
};

// Config file keys mirror the long flag names (dashes or underscores).
void apply_config_file(const std::string& path, Settings& st) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  auto& c = st.sweep;
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::string key = it.key();
    std::replace(key.begin(), key.end(), '-', '_');
    const auto& v = it.value();
    try {
      if (key == "problem") c.problem = v.get<std::string>();
      else if (key == "dim") c.dim = v.get<int>();
      else if (key == "tmax") {
        const auto [lo, hi] = v.is_number_integer() ? std::pair{v.get<int>(), v.get<int>()} : parse_range(v.get<std::string>());
        c.t_min = lo;
        c.t_max = hi;
      } else if (key == "quad_order") c.run.quad_order = v.get<int>();
      else if (key == "load_quad_order") c.run.load_quad_order = v.get<int>();
      else if (key == "rhs_mode") c.run.rhs_mode = parse_rhs_mode(v.get<std::string>());
      else if (key == "tol") c.run.tol = v.get<double>();
      else if (key == "max_iter") c.run.max_iter = v.get<int>();
      else if (key == "threads") c.run.threads = v.get<int>();
      else if (key == "condition") c.condition = v.get<std::string>();
      else if (key == "seed") c.seed = v.get<unsigned long>();
      else if (key == "output") st.output = v.get<std::string>();
      else if (key == "format") st.format = v.get<std::string>();
      else if (key == "dry_run") continue;  // command-line only
      else throw ConfigError("unknown config key '" + it.key() + "'");
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + it.key() + "': " + e.what());
    }
  }
}

Settings resolve(const RunFlags& f) {
  Settings st;
  if (f.config) apply_config_file(*f.config, st);
  auto& c = st.sweep;
  if (f.problem) c.problem = *f.problem;
  if (f.dim) c.dim = *f.dim;
  if (f.tmax) std::tie(c.t_min, c.t_max) = parse_range(*f.tmax);
  if (f.quad_order) c.run.quad_order = *f.quad_order;
  if (f.load_quad_order) c.run.load_quad_order = *f.load_quad_order;
  if (f.rhs_mode) c.run.rhs_mode = parse_rhs_mode(*f.rhs_mode);
  if (f.tol) c.run.tol = *f.tol;
  if (f.max_iter) c.run.max_iter = *f.max_iter;
  if (f.threads) c.run.threads = *f.threads;
  if (f.condition) c.condition = *f.condition;
  if (f.seed) c.seed = *f.seed;
  if (f.output) st.output = *f.output;
  if (f.format) st.format = *f.format;

  const auto& names = builtin_names();
  if (std::find(names.begin(), names.end(), c.problem) == names.end()) throw ConfigError("unknown problem '" + c.problem + "'");
  if (c.problem == "debug2d" && (c.dim < 1 || c.dim > kMaxDim)) throw ConfigError("--dim must be in 1.." + std::to_string(kMaxDim));
  if (c.t_min < 1 || c.t_max < c.t_min) throw ConfigError("--tmax needs 1 <= A <= B");
  if (c.run.quad_order < 1 || c.run.load_quad_order < 1) throw ConfigError("quadrature orders must be >= 1");
  if (!(c.run.tol > 0.0)) throw ConfigError("--tol must be positive");
  if (c.run.max_iter < 1) throw ConfigError("--max-iter must be >= 1");
  if (c.run.threads < 1) throw ConfigError("--threads must be >= 1");
  if (c.condition != "solve" && c.condition != "probe" && c.condition != "none")
    throw ConfigError("--condition must be solve, probe or none");
  if (st.format != "csv" && st.format != "json" && st.format != "both") throw ConfigError("--format must be csv, json or both");
  return st;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

int run_command(const RunFlags& flags) {
  const Settings st = resolve(flags);
  const auto& c = st.sweep;
  const int dim = builtin(c.problem, c.dim).dim;
  if (flags.dry_run) {
    std::printf("problem %s (d = %d), rhs %s, tol %.1e, max_iter %d, threads %d, condition %s\n", c.problem.c_str(), dim,
                to_string(c.run.rhs_mode), c.run.tol, c.run.max_iter, c.run.threads, c.condition.c_str());
    for (int t = c.t_min; t <= c.t_max; ++t) std::printf("  t_max %d: DOF %zu\n", t, sparse_dof(t - 1, dim));
    std::printf("would write %s/{%s} (dry run, nothing written)\n", st.output.c_str(),
                st.format == "csv" ? "table.csv,timings.csv" : st.format == "json" ? "report.json" : "table.csv,timings.csv,report.json");
    return 0;
  }
  const bool csv = st.format != "json", js = st.format != "csv";
  const fs::path dir(st.output);
  fs::create_directories(dir);

  json report;
  report["config"] = to_json(c);
  report["runs"] = json::array();
  auto flush_json = [&](const SweepResult& res, const std::string& status) {
    if (!js) return;
    report["runs"] = json::array();
    for (const auto& r : res.reports) report["runs"].push_back(to_json(r));
    report["status"] = status;
    write_file(dir / "report.json", report.dump(2) + "\n");
  };

  std::printf("%s\n", kTableHeader);
  const auto res = run_sweep(c, [&](const SolveReport& r, const SweepResult& partial) {
    const auto* prev = partial.reports.size() > 1 ? &partial.reports[partial.reports.size() - 2] : nullptr;
    std::printf("%s\n", table_row(r, prev).c_str());
    std::fflush(stdout);
    if (csv) {
      write_file(dir / "table.csv", partial.table);
      write_file(dir / "timings.csv", partial.timings);
    }
    flush_json(partial, "running");
  });
  flush_json(res, res.failed ? "solver_failure" : "ok");
  if (res.failed) {
    const auto& last = res.reports.back();
    std::fprintf(stderr, "solver failure at t_max %d: %s\n", last.t_max, last.failure.c_str());
    return kExitSolverFailure;
  }
  return 0;
}

int selftest_command(std::vector<std::string> suites, unsigned long seed, const std::string& fault) {
  if (suites.empty()) suites = selftest_suites();
  if (!fault.empty()) {
    if (fault != "boundary-weight") throw ConfigError("unknown fault '" + fault + "'");
    testing_hooks::boundary_weight_perturbation = 1e-3;
    std::printf("fault injected: boundary pre-wavelet weight perturbed by 1e-3\n");
  }
  bool all = true;
  for (const auto& name : suites) {
    const auto& known = selftest_suites();
    if (std::find(known.begin(), known.end(), name) == known.end()) throw ConfigError("unknown suite '" + name + "'");
    const auto r = run_selftest(name, seed);
    all = all && r.passed;
    std::printf("%-14s %s  worst %.3e  bound %.0e  at %s  (%.2f s)\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.worst, r.bound,
                r.detail.empty() ? "-" : r.detail.c_str(), r.seconds);
  }
  std::printf("%s\n", all ? "all suites passed" : "some suites FAILED");
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse grid pre-wavelet Ritz-Galerkin solver"};
  app.require_subcommand(1);

  RunFlags f;
  auto* run = app.add_subcommand("run", "sweep t_max for a built-in problem and write the tables");
  run->add_option("--problem", f.problem, "built-in problem")->check(CLI::IsMember(builtin_names()));
  run->add_option("--dim", f.dim, "dimension (debug2d only)");
  run->add_option("--tmax", f.tmax, "t_max range A..B");
  run->add_option("--quad-order", f.quad_order, "Gauss points per cell for operator stencils");
  run->add_option("--load-quad-order", f.load_quad_order, "Gauss points per cell for loads and the lifting");
  run->add_option("--rhs-mode", f.rhs_mode, "quadrature or interpolation");
  run->add_option("--tol", f.tol, "relative residual tolerance");
  run->add_option("--max-iter", f.max_iter, "CG iteration cap");
  run->add_option("--threads", f.threads, "worker threads");
  run->add_option("--output", f.output, "output directory");
  run->add_option("--format", f.format, "csv, json or both");
  run->add_option("--condition", f.condition, "solve, probe or none");
  run->add_option("--seed", f.seed, "seed for randomized estimates");
  run->add_option("--config", f.config, "JSON file with the same keys; flags override it");
  run->add_flag("--dry-run", f.dry_run, "print the plan and exit");

  std::vector<std::string> suites;
  unsigned long seed = 1;
  std::string fault;
  auto* self = app.add_subcommand("selftest", "run the correctness suites");
  self->add_option("--suite", suites, "suite to run (repeatable): oracle, decoupling, roundtrip, orthogonality");
  self->add_option("--seed", seed, "seed for random inputs");
  self->add_option("--inject-fault", fault, "boundary-weight: perturb the pre-wavelet boundary weight");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }
  try {
    if (*run) return run_command(f);
    return selftest_command(suites, seed, fault);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitSolverFailure;
  }
}
