#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "config.hpp"
#include "error.hpp"
#include "io.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "saddle.hpp"
#include "scheme.hpp"

namespace fluxctl {

enum class Mode { control, forward, compare, check };

inline std::optional<Mode> parse_mode(std::string_view s)
{
  if (s == "control") return Mode::control;
  if (s == "forward") return Mode::forward;
  if (s == "compare") return Mode::compare;
  if (s == "check") return Mode::check;
  return std::nullopt;
}

namespace exit_status {
inline constexpr int success = 0;
inline constexpr int not_converged = 1;
inline constexpr int config_error = 2;
inline constexpr int numerical_failure = 3;
}  // namespace exit_status

/// Exit status for an error escaping run(): bad input is a config error,
/// everything that fails while computing or writing results is not.
inline int exit_status_for(Error const& e)
{
  switch (e.kind()) {
    case ErrorKind::config:
    case ErrorKind::domain: return exit_status::config_error;
    case ErrorKind::numerical:
    case ErrorKind::io: return exit_status::numerical_failure;
  }
  return exit_status::numerical_failure;
}

struct RunResult {
  int exit_code = exit_status::success;
  Report summary;
  std::vector<std::filesystem::path> artifacts;
};

namespace run_detail {

inline std::string fmt(double v, char const* spec = "%.6g")
{
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

inline double mass_drift(Field const& u, double dx)
{
  double const m0 = mass(u.slice(0), dx);
  double drift = 0.0;
  for (int l = 1; l < u.slices(); ++l) drift = std::max(drift, std::abs(mass(u.slice(l), dx) - m0));
  return drift;
}

inline bool non_increasing(std::vector<double> const& v, double slack)
{
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[k - 1] + slack) return false;
  return true;
}

inline std::vector<double> final_slice(Field const& u)
{
  auto s = u.slice(u.slices() - 1);
  return {s.begin(), s.end()};
}

/// u(1, .) of the configured reference, or nothing when none is set.
inline std::optional<std::vector<double>> reference_profile(RunConfig const& cfg, ControlProblem const& problem,
                                                            Grid const& grid)
{
  switch (cfg.reference) {
    case ReferenceKind::none: return std::nullopt;
    case ReferenceKind::burgers_exact: return sample(&burgers_exact, grid);
    case ReferenceKind::traffic_exact: return sample(&traffic_exact, grid);
    case ReferenceKind::fine: {
      std::function<double(double)> profile;
      if (cfg.initial.analytic()) profile = [&](double x) { return cfg.initial(x, cfg.domain_length); };
      return fine_reference(problem, grid, 4, profile);
    }
  }
  return std::nullopt;
}

/// Location of the steepest descent of u between neighbouring nodes (midpoint).
inline double steepest_descent(std::span<double const> u, Grid const& grid)
{
  int best = 0;
  double drop = -INFINITY;
  for (int i = 0; i < grid.nx(); ++i) {
    double const d = u[i] - u[wrap(i + 1, grid.nx())];
    if (d > drop) {
      drop = d;
      best = i;
    }
  }
  return grid.x(best) + 0.5 * grid.dx();
}

inline std::string sweep_suffix(RunConfig const& cfg, double alpha)
{
  if (cfg.alphas.size() < 2) return "";
  return "_alpha" + fmt(alpha, "%g");
}

struct ControlOutcome {
  PdhgState state;
  SolveReport report;
  Report summary;
};

inline ControlOutcome control_once(RunConfig const& cfg, double alpha, Grid const& grid,
                                   std::filesystem::path const& out, std::vector<std::filesystem::path>& artifacts,
                                   std::ostream& log)
{
  ControlProblem const problem = cfg.problem(alpha);
  std::string const suffix = sweep_suffix(cfg, alpha);
  if (!suffix.empty()) log << "alpha = " << alpha << '\n';
  auto [state, report] = pdhg_solve(problem, grid, cfg.solver, [&](int it, double p, double d) {
    if (it % 1000 == 0) log << "  iter " << it << "  primal " << fmt(p) << "  dual " << fmt(d) << '\n';
  });

  Report r;
  r.set("alpha", alpha);
  r.set("iterations", report.iterations);
  r.set("primal_residual", report.primal_residual.empty() ? 0.0 : report.primal_residual.back());
  r.set("dual_residual", report.dual_residual.empty() ? 0.0 : report.dual_residual.back());
  r.set("hamiltonian_0", report.hamiltonian.front());
  r.set("hamiltonian_max_dev", report.hamiltonian_max_deviation());
  r.set("entropy_monotone", non_increasing(report.entropy, 1e-10));
  r.set("mass_drift", mass_drift(state.u, grid.dx()));
  r.set("momentum_l2", std::hypot(l2_norm(state.m1, grid.dx(), grid.dt()), l2_norm(state.m2, grid.dx(), grid.dt())));
  auto const last = final_slice(state.u);
  r.set("terminal_max", *std::max_element(last.begin(), last.end()));
  if (auto ref = reference_profile(cfg, problem, grid)) r.set("l1_vs_reference", l1_error(last, *ref, grid.dx()));
  r.set("converged", report.converged);

  auto emit = [&](Field const& f, std::string const& name) {
    auto p = out / (name + suffix + ".csv");
    write_field_csv(f, grid, p);
    artifacts.push_back(p);
  };
  emit(state.u, "u_control");
  emit(state.m1, "m1_control");
  emit(state.m2, "m2_control");
  emit(state.phi, "phi_control");
  auto rp = out / ("report_control" + suffix + ".txt");
  write_report(r, rp);
  artifacts.push_back(rp);
  log << (report.converged ? "converged" : "not converged") << " after " << report.iterations << " iterations\n";
  return {std::move(state), std::move(report), std::move(r)};
}

inline RunResult run_control(RunConfig const& cfg, std::filesystem::path const& out, std::ostream& log)
{
  RunResult res;
  Grid const grid = cfg.grid();
  bool all = true;
  for (double alpha : cfg.alphas) {
    auto outcome = control_once(cfg, alpha, grid, out, res.artifacts, log);
    all = all && outcome.report.converged;
    std::string const suffix = sweep_suffix(cfg, alpha);
    for (auto const& [k, v] : outcome.summary.entries())
      if (k != "alpha" || !suffix.empty()) res.summary.set(suffix.empty() ? k : k + suffix, v);
  }
  res.summary.set("converged", all);
  res.exit_code = all ? exit_status::success : exit_status::not_converged;
  return res;
}

inline Report forward_report(ControlProblem const& problem, Grid const& grid, Field const& u)
{
  Report r;
  auto const range = problem.admissible_range();
  double lo = INFINITY, hi = -INFINITY;
  for (double v : u.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  r.set("steps", grid.nt());
  r.set("mass_drift", mass_drift(u, grid.dx()));
  r.set("entropy_monotone", non_increasing(entropy_trace(problem.entropy, u, grid.dx()), 1e-10));
  r.set("min_value", lo);
  r.set("max_value", hi);
  r.set("maximum_principle", lo >= range.lo - 1e-12 && hi <= range.hi + 1e-12);
  // Mass reaching the periodic seam means the domain is too short for the run.
  r.set("boundary_deviation", boundary_deviation(u.slice(grid.nt()), problem.u0.front()));
  return r;
}

inline RunResult run_forward(RunConfig const& cfg, std::filesystem::path const& out, std::ostream& log)
{
  RunResult res;
  Grid const grid = cfg.grid();
  ControlProblem const problem = cfg.problem();
  log << cfl_check(problem, grid).describe() << '\n';
  Field const u = forward_solve(problem, grid);
  res.summary = forward_report(problem, grid, u);
  if (std::stod(*res.summary.get("boundary_deviation")) > 1e-3)
    log << "warning: solution reaches the periodic seam; results feel the wrap-around\n";
  if (auto ref = reference_profile(cfg, problem, grid))
    res.summary.set("l1_vs_reference", l1_error(final_slice(u), *ref, grid.dx()));
  auto p = out / "u_forward.csv";
  write_field_csv(u, grid, p);
  auto rp = out / "report_forward.txt";
  write_report(res.summary, rp);
  res.artifacts = {p, rp};
  return res;
}

inline RunResult run_compare(RunConfig const& cfg, std::filesystem::path const& out, std::ostream& log)
{
  RunResult res;
  Grid const grid = cfg.grid();
  ControlProblem const problem = cfg.problem();

  log << cfl_check(problem, grid).describe() << '\n';
  Field const uf = forward_solve(problem, grid);
  auto pf = out / "u_forward.csv";
  write_field_csv(uf, grid, pf);
  res.artifacts.push_back(pf);

  RunConfig single = cfg;
  single.alphas = {cfg.alphas.front()};
  auto control = control_once(single, single.alphas.front(), grid, out, res.artifacts, log);

  auto const fwd = final_slice(uf);
  auto const ctl = final_slice(control.state.u);
  std::vector<double> exact;
  if (auto ref = reference_profile(cfg, problem, grid)) exact = *ref;
  else exact = fine_reference(problem, grid, 4, cfg.initial.analytic()
                                                    ? std::function<double(double)>(
                                                          [&](double x) { return cfg.initial(x, cfg.domain_length); })
                                                    : std::function<double(double)>());

  Report& r = res.summary;
  r.set("l1_control_vs_exact", l1_error(ctl, exact, grid.dx()));
  r.set("l1_forward_vs_exact", l1_error(fwd, exact, grid.dx()));
  r.set("l1_control_vs_forward", l1_error(ctl, fwd, grid.dx()));
  r.set("shock_control", steepest_descent(ctl, grid));
  r.set("shock_forward", steepest_descent(fwd, grid));
  r.set("iterations", control.report.iterations);
  r.set("hamiltonian_max_dev", control.report.hamiltonian_max_deviation());
  r.set("mass_drift", mass_drift(control.state.u, grid.dx()));
  r.set("converged", control.report.converged);

  auto pp = out / "profile_t1.csv";
  write_columns_csv(grid.nodes(), {{"control", ctl}, {"forward", fwd}, {"exact", exact}}, pp);
  auto ps = out / "plot.gp";
  write_text(emit_plot_script({{{"control u(t,x)", "u_control.csv"}, {"forward u(t,x)", "u_forward.csv"}},
                               "profile_t1.csv",
                               {"control", "forward", "exact"}}),
             ps);
  auto rp = out / "report_compare.txt";
  write_report(r, rp);
  res.artifacts.insert(res.artifacts.end(), {pp, ps, rp});
  res.exit_code = control.report.converged ? exit_status::success : exit_status::not_converged;
  return res;
}

/// max |(Psi(u+h) - Psi(u-h)) / 2h - f'(u) G'(u)| over states in the admissible range.
inline double entropy_pair_residual(ControlProblem const& problem, int samples = 64)
{
  StateRange r = problem.admissible_range();
  if (problem.entropy.requires_positive()) r.lo = std::max(r.lo, 1e-3);
  if (!(r.hi > r.lo)) r = {r.lo - 0.5, r.lo + 0.5};
  if (problem.entropy.requires_positive()) r.lo = std::max(r.lo, 1e-3);
  double worst = 0.0;
  for (int k = 0; k <= samples; ++k) {
    double const u = r.lo + (r.hi - r.lo) * k / samples;
    double const h = 1e-5 * std::min(1.0, std::max(std::abs(u), 1e-2));
    double const fd = (entropy_flux_psi(problem.entropy, problem.flux, u + h) -
                       entropy_flux_psi(problem.entropy, problem.flux, u - h)) /
                      (2.0 * h);
    worst = std::max(worst, std::abs(fd - problem.flux.deriv(u) * problem.entropy.Gp(u)));
  }
  return worst;
}

inline RunResult run_check(RunConfig const& cfg, std::filesystem::path const& out, std::ostream& log)
{
  RunResult res;
  Grid const grid = cfg.grid();
  ControlProblem const problem = cfg.problem();
  CflReport const cfl = cfl_check(problem, grid);
  double const a1 = check_assumption1(problem, problem.u0, grid.dx());
  double const psi = entropy_pair_residual(problem);
  bool const psi_ok = psi <= 1e-6;

  log << cfl.describe() << '\n';
  log << "assumption 1 residual on u0: " << fmt(a1) << '\n';
  log << "entropy pair residual: " << fmt(psi) << (psi_ok ? " (ok)" : " (too large)") << '\n';

  Report& r = res.summary;
  r.set("cfl", cfl.describe());
  r.set("cfl_ok", cfl.ok());
  r.set("lipschitz", cfl.lipschitz);
  r.set("viscosity_margin", cfl.viscosity_margin);
  r.set("step_margin", cfl.step_margin());
  r.set("assumption1_residual", a1);
  r.set("entropy_pair_residual", psi);
  r.set("passed", cfl.ok() && psi_ok);
  auto rp = out / "report_check.txt";
  write_report(r, rp);
  res.artifacts.push_back(rp);
  res.exit_code = cfl.ok() && psi_ok ? exit_status::success : exit_status::not_converged;
  return res;
}

}  // namespace run_detail

/// Runs one mode and writes its artifacts under `out`. Errors propagate as
/// exceptions; map them with exit_status_for.
inline RunResult run(RunConfig const& cfg, Mode mode, std::filesystem::path const& out, std::ostream& log)
{
  switch (mode) {
    case Mode::control: return run_detail::run_control(cfg, out, log);
    case Mode::forward: return run_detail::run_forward(cfg, out, log);
    case Mode::compare: return run_detail::run_compare(cfg, out, log);
    case Mode::check: return run_detail::run_check(cfg, out, log);
  }
  return {};
}

}  // namespace fluxctl
