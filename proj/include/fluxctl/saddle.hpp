#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "h1_solver.hpp"
#include "model.hpp"
#include "scheme.hpp"
#include "stencil.hpp"

namespace fluxctl {

struct SolverConfig {
  int max_iters = 50000;
  double tol = 1e-5;
  double tau = 0.25;
  double sigma = 0.25;
  double h1_epsilon = 1.0;  // weight of the zeroth-order term in the dual metric
  double newton_tol = 1e-10;
  int newton_max = 50;
  double divergence_threshold = 1e6;
  bool parallel = false;

  void validate() const
  {
    if (max_iters <= 0) throw DomainError("max_iters must be positive");
    if (!(tol > 0.0)) throw DomainError("tol must be positive");
    if (!(tau > 0.0) || !(sigma > 0.0)) throw DomainError("step sizes must be positive");
    if (!(h1_epsilon > 0.0)) throw DomainError("h1_epsilon must be positive");
    if (!(newton_tol > 0.0) || newton_max <= 0) throw DomainError("newton settings must be positive");
  }

  friend bool operator==(SolverConfig const&, SolverConfig const&) = default;
};

/// Iterates of the primal-dual method.
///
/// u and phi carry nt + 1 slices; m1 >= 0 and m2 <= 0 carry nt slices, with
/// m^l paired against u^{l+1} in the kinetic energy. phi slices 0..nt-1 are
/// the multipliers of the discrete continuity equation; slice nt holds the
/// terminal condition -dH/du(u^nt).
struct PdhgState {
  Field u;
  Field m1;
  Field m2;
  Field phi;
  Field phi_prev;  // phi before the most recent dual step
  Field phi_bar;
  double tau = 0.25;
  double sigma = 0.25;
  int iter = 0;
};

struct SolveReport {
  int iterations = 0;
  std::vector<double> primal_residual;
  std::vector<double> dual_residual;
  std::vector<double> hamiltonian;  // one value per time slice
  std::vector<double> entropy;      // one value per time slice
  bool converged = false;

  double hamiltonian_max_deviation() const
  {
    double dev = 0.0;
    for (double h : hamiltonian) dev = std::max(dev, std::abs(h - hamiltonian.front()));
    return dev;
  }
};

// ---------------------------------------------------------------------------
// Constraint operator
// ---------------------------------------------------------------------------

/// K(u, m): the implicit-in-time Lax-Friedrichs continuity residual, one
/// slice per time step l = 0..nt-1.
inline Field continuity_residual(ControlProblem const& problem, Grid const& grid, Field const& u, Field const& m1,
                                 Field const& m2)
{
  int const nx = grid.nx();
  int const nt = grid.nt();
  double const dx = grid.dx();
  double const dt = grid.dt();
  double const kappa = problem.viscosity(dx);
  Field r(nt, nx);
  std::vector<double> fu(nx);
  for (int l = 0; l < nt; ++l) {
    auto next = u.slice(l + 1);
    auto cur = u.slice(l);
    auto a = m1.slice(l);
    auto b = m2.slice(l);
    for (int i = 0; i < nx; ++i) fu[i] = problem.flux(next[i]);
    for (int i = 0; i < nx; ++i) {
      double const time = (next[i] - cur[i]) / dt;
      double const flux = stencil::central_diff(fu, dx, i);
      double const transport = stencil::forward_diff(a, dx, i - 1) + stencil::forward_diff(b, dx, i);
      r(l, i) = time + flux + transport - kappa * stencil::laplacian(next, dx, i);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Pointwise primal prox
// ---------------------------------------------------------------------------

/// Linear coefficients and previous iterate for one (u, m1, m2) triple.
struct ProxCoefficients {
  double u_old = 0.0;
  double m1_old = 0.0;
  double m2_old = 0.0;
  double bu = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
  double tau = 0.25;
  StateRange bounds{-INFINITY, INFINITY};
};

/// Convex scalar part of the pointwise objective: -F density plus, on the
/// terminal slice, the H density weighted by 1/dt.
struct PointPenalty {
  PotentialSpec const* potential = nullptr;
  TerminalSpec const* terminal = nullptr;
  int index = 0;
  double terminal_weight = 0.0;

  double value(double u) const
  {
    double v = potential ? -potential->density(u) : 0.0;
    if (terminal && terminal_weight != 0.0) v += terminal_weight * terminal->density(index, u);
    return v;
  }
  double deriv(double u) const
  {
    double v = potential ? -potential->density_deriv(u) : 0.0;
    if (terminal && terminal_weight != 0.0) v += terminal_weight * terminal->density_deriv(index, u);
    return v;
  }
  double deriv2(double u) const
  {
    double v = potential ? -potential->density_deriv2(u) : 0.0;
    if (terminal && terminal_weight != 0.0) v += terminal_weight * terminal->density_deriv2(index, u);
    return v;
  }
};

/// The full pointwise objective
///   (m1^2 + m2^2) / (2 V(u)) + P(u) + bu u + b1 m1 + b2 m2 + |z - z_old|^2 / (2 tau)
/// without constraints.
inline double prox_objective(EntropyModel const& entropy, PointPenalty const& penalty, ProxCoefficients const& c,
                             double u, double m1, double m2)
{
  double const du = u - c.u_old;
  double const d1 = m1 - c.m1_old;
  double const d2 = m2 - c.m2_old;
  return (m1 * m1 + m2 * m2) / (2.0 * entropy.mobility(u)) + penalty.value(u) + c.bu * u + c.b1 * m1 + c.b2 * m2 +
         (du * du + d1 * d1 + d2 * d2) / (2.0 * c.tau);
}

namespace detail {

// After minimising out m1 >= 0, m2 <= 0 the kinetic part becomes
// s / (2 (V(u) + tau)) + const, where s only depends on the old iterate.
struct ReducedProx {
  EntropyModel const& entropy;
  PointPenalty const& penalty;
  ProxCoefficients const& c;
  double a1, a2, s;

  ReducedProx(EntropyModel const& e, PointPenalty const& p, ProxCoefficients const& coeff)
      : entropy(e), penalty(p), c(coeff), a1(std::max(coeff.m1_old - coeff.tau * coeff.b1, 0.0)),
        a2(std::min(coeff.m2_old - coeff.tau * coeff.b2, 0.0)), s(a1 * a1 + a2 * a2)
  {
  }

  double grad(double u) const
  {
    double const vt = entropy.mobility(u) + c.tau;
    return -s * entropy.mobility_deriv(u) / (2.0 * vt * vt) + penalty.deriv(u) + c.bu + (u - c.u_old) / c.tau;
  }

  double hess(double u) const
  {
    double const vt = entropy.mobility(u) + c.tau;
    double const vp = entropy.mobility_deriv(u);
    return -s * entropy.mobility_deriv2(u) / (2.0 * vt * vt) + s * vp * vp / (vt * vt * vt) + penalty.deriv2(u) +
           1.0 / c.tau;
  }
};

}  // namespace detail

struct ProxResult {
  double u = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double gradient = 0.0;  // d/du of the reduced objective at u
  int iterations = 0;
  bool converged = false;
};

/// d/du of the m-eliminated pointwise objective; zero at an interior optimum.
inline double prox_stationarity(EntropyModel const& entropy, PointPenalty const& penalty, ProxCoefficients const& c,
                                double u)
{
  return detail::ReducedProx(entropy, penalty, c).grad(u);
}

/// Minimises prox_objective over u in bounds, m1 >= 0, m2 <= 0.
///
/// m is eliminated in closed form, m1 = V max(a1, 0) / (V + tau) with
/// a1 = m1_old - tau b1 (m2 symmetric). The remaining convex scalar problem
/// in u is solved by Newton's method safeguarded by a bisection bracket.
inline ProxResult prox_point(EntropyModel const& entropy, PointPenalty const& penalty, ProxCoefficients const& c,
                             double newton_tol, int newton_max)
{
  detail::ReducedProx const f(entropy, penalty, c);
  double lo = c.bounds.lo;
  double hi = c.bounds.hi;
  ProxResult r;

  auto finish = [&](double u, bool ok) {
    r.u = u;
    r.gradient = f.grad(u);
    r.converged = ok;
    double const v = entropy.mobility(u);
    r.m1 = v * f.a1 / (v + c.tau);
    r.m2 = v * f.a2 / (v + c.tau);
    return r;
  };

  if (std::isfinite(lo) && f.grad(lo) >= 0.0) return finish(lo, true);
  if (std::isfinite(hi) && f.grad(hi) <= 0.0) return finish(hi, true);

  double x = std::clamp(c.u_old, lo, hi);
  if (!std::isfinite(x)) x = 0.0;
  int const limit = newton_max + 200;  // bisection fallback budget
  for (r.iterations = 0; r.iterations < limit; ++r.iterations) {
    double const g = f.grad(x);
    if (!std::isfinite(g)) break;
    if (std::abs(g) <= newton_tol) return finish(x, true);
    if (g > 0.0)
      hi = x;
    else
      lo = x;
    double next = x - g / f.hess(x);
    bool const inside = next > lo && next < hi && std::isfinite(next);
    if (!inside || r.iterations >= newton_max) {
      if (std::isfinite(lo) && std::isfinite(hi))
        next = 0.5 * (lo + hi);
      else if (!inside)
        next = g > 0.0 ? x - 2.0 * std::max(1.0, std::abs(x)) : x + 2.0 * std::max(1.0, std::abs(x));
    }
    // Bracket collapsed to adjacent doubles: x is as stationary as it gets.
    if (std::isfinite(lo) && std::isfinite(hi) && std::nextafter(lo, hi) >= hi) {
      double const best = std::abs(f.grad(lo)) < std::abs(f.grad(hi)) ? lo : hi;
      return finish(best, true);
    }
    x = next;
  }
  return finish(x, false);
}

// ---------------------------------------------------------------------------
// Algorithm steps
// ---------------------------------------------------------------------------

/// Linear coefficients of the Lagrangian, linearised in the flux around the
/// current u, for the triple (u^l_i, m^{l-1}_i), l = 1..nt.
inline ProxCoefficients prox_coefficients(PdhgState const& s, ControlProblem const& problem, Grid const& grid, int l,
                                          int i)
{
  int const nt = grid.nt();
  double const dx = grid.dx();
  double const dt = grid.dt();
  auto pb = s.phi_bar.slice(l - 1);
  ProxCoefficients c;
  c.u_old = s.u(l, i);
  c.m1_old = s.m1(l - 1, i);
  c.m2_old = s.m2(l - 1, i);
  c.tau = s.tau;
  c.bounds = problem.prox_bounds();
  double const ahead = l < nt ? s.phi_bar(l, i) : 0.0;
  c.bu = (pb[i] - ahead) / dt - problem.flux.deriv(c.u_old) * stencil::central_diff(pb, dx, i) -
         problem.viscosity(dx) * stencil::laplacian(pb, dx, i);
  c.b1 = -stencil::forward_diff(pb, dx, i);
  c.b2 = -stencil::forward_diff(pb, dx, i - 1);
  return c;
}

inline PointPenalty point_penalty(ControlProblem const& problem, Grid const& grid, int l, int i)
{
  PointPenalty p;
  if (problem.potential.kind != PotentialKind::zero) p.potential = &problem.potential;
  if (l == grid.nt() && problem.terminal.kind != TerminalKind::zero) {
    p.terminal = &problem.terminal;
    p.terminal_weight = 1.0 / grid.dt();
  }
  p.index = i;
  return p;
}

/// Proximal descent in (u, m) against phi_bar. Writes the new iterate into
/// the output fields; slice 0 of u is copied unchanged.
inline void primal_update(PdhgState const& s, ControlProblem const& problem, Grid const& grid, SolverConfig const& cfg,
                          Field& u_out, Field& m1_out, Field& m2_out)
{
  int const nt = grid.nt();
  int const nx = grid.nx();
  u_out.set_slice(0, s.u.slice(0));
  bool failed = false;
  std::string failure;
#if defined(_OPENMP)
#pragma omp parallel for schedule(static) if (cfg.parallel)
#endif
  for (int l = 1; l <= nt; ++l) {
    for (int i = 0; i < nx; ++i) {
      ProxResult r;
      try {
        r = prox_point(problem.entropy, point_penalty(problem, grid, l, i), prox_coefficients(s, problem, grid, l, i),
                       cfg.newton_tol, cfg.newton_max);
      } catch (Error const& e) {
        r.converged = false;
#if defined(_OPENMP)
#pragma omp critical
#endif
        {
          failed = true;
          failure = e.what();
        }
      }
      if (!r.converged) {
#if defined(_OPENMP)
#pragma omp critical
#endif
        {
          if (!failed || failure.empty())
            failure = "primal prox did not converge at (l=" + std::to_string(l) + ", i=" + std::to_string(i) + ")";
          failed = true;
        }
      }
      u_out(l, i) = r.u;
      m1_out(l - 1, i) = r.m1;
      m2_out(l - 1, i) = r.m2;
    }
  }
  if (failed) throw NumericalError(failure);
}

struct PrimalIterate {
  Field u, m1, m2;
};

inline PrimalIterate primal_update(PdhgState const& s, ControlProblem const& problem, Grid const& grid,
                                   SolverConfig const& cfg)
{
  PrimalIterate out{s.u, s.m1, s.m2};
  primal_update(s, problem, grid, cfg, out.u, out.m1, out.m2);
  return out;
}

/// phi^nt = -dH/du(u^nt); also keeps phi_bar's terminal slice in step.
inline void enforce_terminal(PdhgState& s, ControlProblem const& problem, Grid const& grid)
{
  int const nt = grid.nt();
  auto d = functional_H_deriv(problem.terminal, s.u.slice(nt));
  for (int i = 0; i < grid.nx(); ++i) {
    s.phi(nt, i) = -d[i];
    s.phi_bar(nt, i) = -d[i];
  }
}

/// Proximal ascent in the H1-type metric: phi += sigma L^{-1} K(u, m).
/// Returns the space-time L2 norm of K(u, m).
inline double dual_update(PdhgState& s, ControlProblem const& problem, Grid const& grid, H1Solver& solver)
{
  Field const r = continuity_residual(problem, grid, s.u, s.m1, s.m2);
  Field const d = solver.solve(r);
  s.phi_prev = s.phi;
  for (int l = 0; l < grid.nt(); ++l)
    for (int i = 0; i < grid.nx(); ++i) s.phi(l, i) += s.sigma * d(l, i);
  return l2_norm(r, grid.dx(), grid.dt());
}

inline double dual_update(PdhgState& s, ControlProblem const& problem, Grid const& grid, SolverConfig const& cfg)
{
  H1Solver solver(grid, cfg.h1_epsilon);
  return dual_update(s, problem, grid, solver);
}

/// phi_bar = 2 phi - phi_prev.
inline void extrapolate(PdhgState& s)
{
  auto pb = s.phi_bar.values();
  auto p = s.phi.values();
  auto q = s.phi_prev.values();
  for (std::size_t j = 0; j < pb.size(); ++j) pb[j] = 2.0 * p[j] - q[j];
}

/// Constant-in-time density, zero momentum, zero potentials.
inline PdhgState initial_state(ControlProblem const& problem, Grid const& grid, SolverConfig const& cfg)
{
  int const nt = grid.nt();
  int const nx = grid.nx();
  PdhgState s;
  s.u = Field(nt + 1, nx);
  StateRange const b = problem.prox_bounds();
  for (int l = 0; l <= nt; ++l)
    for (int i = 0; i < nx; ++i) s.u(l, i) = l == 0 ? problem.u0[i] : std::clamp(problem.u0[i], b.lo, b.hi);
  s.m1 = Field(nt, nx);
  s.m2 = Field(nt, nx);
  s.phi = Field(nt + 1, nx);
  s.phi_prev = Field(nt + 1, nx);
  s.phi_bar = Field(nt + 1, nx);
  s.tau = cfg.tau;
  s.sigma = cfg.sigma;
  return s;
}

// ---------------------------------------------------------------------------
// Hamiltonian
// ---------------------------------------------------------------------------

/// Discrete Hamiltonian at one time slice:
///   sum_i [ |upwind D phi|_i^2 V(u_i) / 2 + (central D phi)_i f(u_i)
///           + (beta + c dx) u_i Lap(phi)_i ] dx + F(u).
/// F enters with a plus sign: that is the quantity the optimality system
/// conserves when the objective carries -F.
inline double discrete_hamiltonian(ControlProblem const& problem, Grid const& grid, std::span<double const> u,
                                   std::span<double const> phi)
{
  double const dx = grid.dx();
  double const kappa = problem.viscosity(dx);
  double s = 0.0;
  for (int i = 0; i < grid.nx(); ++i) {
    s += 0.5 * stencil::upwind_grad_sq(phi, dx, i) * problem.entropy.mobility(u[i]) +
         stencil::central_diff(phi, dx, i) * problem.flux(u[i]) + kappa * u[i] * stencil::laplacian(phi, dx, i);
  }
  return s * dx + functional_F(problem.potential, u, dx);
}

inline std::vector<double> hamiltonian_trace(ControlProblem const& problem, Grid const& grid, PdhgState const& s)
{
  std::vector<double> h(grid.nt() + 1);
  for (int l = 0; l <= grid.nt(); ++l) h[l] = discrete_hamiltonian(problem, grid, s.u.slice(l), s.phi.slice(l));
  return h;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

/// Called after every iteration with (iteration, primal residual, dual residual).
using IterationObserver = std::function<void(int, double, double)>;

/// Primal-dual iteration: primal prox, terminal condition, H1 dual ascent,
/// extrapolation; stops when both residuals drop below cfg.tol.
///
/// The primal residual is the L2 norm of K(u, m); the dual residual is the
/// L2 norm of the primal iterate change divided by tau. Non-convergence is
/// reported through SolveReport::converged, never thrown.
inline std::pair<PdhgState, SolveReport> pdhg_solve(ControlProblem const& problem, Grid const& grid,
                                                    SolverConfig const& cfg, IterationObserver const& observe = {})
{
  cfg.validate();
  problem.validate(grid.nx());
  PdhgState s = initial_state(problem, grid, cfg);
  enforce_terminal(s, problem, grid);
  s.phi_prev = s.phi;
  s.phi_bar = s.phi;
  H1Solver solver(grid, cfg.h1_epsilon);
  SolveReport report;

  Field u_new = s.u, m1_new = s.m1, m2_new = s.m2;
  double const w = grid.dx() * grid.dt();
  for (s.iter = 0; s.iter < cfg.max_iters;) {
    primal_update(s, problem, grid, cfg, u_new, m1_new, m2_new);
    double change = 0.0;
    for (std::size_t j = 0; j < u_new.values().size(); ++j) {
      double const d = u_new.values()[j] - s.u.values()[j];
      change += d * d;
    }
    for (std::size_t j = 0; j < m1_new.values().size(); ++j) {
      double const d1 = m1_new.values()[j] - s.m1.values()[j];
      double const d2 = m2_new.values()[j] - s.m2.values()[j];
      change += d1 * d1 + d2 * d2;
    }
    std::swap(s.u, u_new);
    std::swap(s.m1, m1_new);
    std::swap(s.m2, m2_new);
    enforce_terminal(s, problem, grid);
    double const primal = dual_update(s, problem, grid, solver);
    extrapolate(s);
    ++s.iter;

    double const dual = std::sqrt(change * w) / s.tau;
    report.primal_residual.push_back(primal);
    report.dual_residual.push_back(dual);
    if (observe) observe(s.iter, primal, dual);
    if (!std::isfinite(primal) || !std::isfinite(dual) || primal > cfg.divergence_threshold)
      throw NumericalError("primal-dual iteration diverged at iteration " + std::to_string(s.iter) +
                           " (residual " + std::to_string(primal) + "); retry with tau and sigma halved");
    if (primal <= cfg.tol && dual <= cfg.tol) {
      report.converged = true;
      break;
    }
  }
  report.iterations = s.iter;
  report.hamiltonian = hamiltonian_trace(problem, grid, s);
  report.entropy = entropy_trace(problem.entropy, s.u, grid.dx());
  return {std::move(s), std::move(report)};
}

}  // namespace fluxctl
