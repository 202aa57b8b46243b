#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "stencil.hpp"

namespace fluxctl {

/// Monotonicity conditions of the explicit Lax-Friedrichs update:
///   c >= |f'|/2   and   dx^2 >= 2 (beta + c dx) dt.
struct CflReport {
  double lipschitz = 0.0;
  double viscosity_margin = 0.0;  // c - lipschitz/2
  double step_lhs = 0.0;          // dx^2
  double step_rhs = 0.0;          // 2 (beta + c dx) dt

  bool viscosity_ok() const noexcept { return viscosity_margin >= 0.0; }
  bool step_ok() const noexcept { return step_lhs >= step_rhs; }
  bool ok() const noexcept { return viscosity_ok() && step_ok(); }
  double step_margin() const noexcept { return step_lhs - step_rhs; }

  std::string describe() const
  {
    char buf[256];
    if (ok()) {
      std::snprintf(buf, sizeof buf, "CFL ok, margin %.6g", step_margin());
      return buf;
    }
    std::string s = "CFL violation:";
    if (!viscosity_ok()) {
      std::snprintf(buf, sizeof buf, " c below lipschitz/2 by %.6g (lipschitz %.6g);", -viscosity_margin, lipschitz);
      s += buf;
    }
    if (!step_ok()) {
      std::snprintf(buf, sizeof buf, " dx^2 = %.6g < 2(beta + c dx) dt = %.6g;", step_lhs, step_rhs);
      s += buf;
    }
    s.pop_back();
    return s;
  }
};

inline CflReport cfl_check(ControlProblem const& problem, Grid const& grid)
{
  CflReport r;
  r.lipschitz = problem.lipschitz_bound();
  r.viscosity_margin = problem.c - 0.5 * r.lipschitz;
  r.step_lhs = grid.dx() * grid.dx();
  r.step_rhs = 2.0 * problem.viscosity(grid.dx()) * grid.dt();
  return r;
}

enum class CflPolicy { enforce, warn };

/// One explicit Lax-Friedrichs step with artificial viscosity c*dx.
inline void lax_friedrichs_step(ControlProblem const& problem, Grid const& grid, std::span<double const> u,
                                std::span<double> out)
{
  int const n = grid.nx();
  double const dx = grid.dx();
  double const dt = grid.dt();
  double const nu = problem.viscosity(dx) * dt / (dx * dx);
  double const adv = dt / (2.0 * dx);
  for (int j = 0; j < n; ++j) {
    double const up = u[wrap(j + 1, n)];
    double const um = u[wrap(j - 1, n)];
    out[j] = u[j] - adv * (problem.flux(up) - problem.flux(um)) + nu * (up - 2.0 * u[j] + um);
    if (!std::isfinite(out[j])) throw NumericalError("forward step diverged");
  }
}

inline std::vector<double> lax_friedrichs_step(ControlProblem const& problem, Grid const& grid,
                                               std::span<double const> u)
{
  std::vector<double> out(u.size());
  lax_friedrichs_step(problem, grid, u, out);
  return out;
}

/// Full explicit trajectory, nt + 1 slices starting from u0.
inline Field forward_solve(ControlProblem const& problem, Grid const& grid, CflPolicy policy = CflPolicy::enforce,
                           std::ostream* warnings = nullptr)
{
  problem.validate(grid.nx());
  CflReport const cfl = cfl_check(problem, grid);
  if (!cfl.ok()) {
    if (policy == CflPolicy::enforce) throw DomainError(cfl.describe());
    if (warnings) *warnings << "warning: " << cfl.describe() << '\n';
  }
  Field u(grid.nt() + 1, grid.nx());
  u.set_slice(0, problem.u0);
  for (int l = 0; l < grid.nt(); ++l) lax_friedrichs_step(problem, grid, u.slice(l), u.slice(l + 1));
  return u;
}

/// Total entropy sum_i G(u_i^l) dx for every slice.
inline std::vector<double> entropy_trace(EntropyModel const& entropy, Field const& u, double dx)
{
  std::vector<double> trace(u.slices());
  for (int l = 0; l < u.slices(); ++l) {
    double s = 0.0;
    for (double v : u.slice(l)) s += entropy.G(v);
    trace[l] = s * dx;
  }
  return trace;
}

/// sum_i V(u_i) ((D G'(u))_i)^2 dx, the discrete entropy dissipation rate.
inline double entropy_production(ControlProblem const& problem, std::span<double const> u, double dx)
{
  int const n = static_cast<int>(u.size());
  std::vector<double> gp(n);
  for (int i = 0; i < n; ++i) {
    if (problem.entropy.requires_positive() && !(u[i] > 0.0))
      throw DomainError("entropy production of nonpositive density");
    gp[i] = problem.entropy.Gp(u[i]);
  }
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double const d = stencil::forward_diff(gp, dx, i);
    s += problem.entropy.mobility(u[i]) * d * d;
  }
  return s * dx;
}

/// Largest departure from `background` in the two cells adjacent to the
/// periodic seam.
inline double boundary_deviation(std::span<double const> u, double background)
{
  return std::max(std::abs(u.front() - background), std::abs(u.back() - background));
}

}  // namespace fluxctl
