#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "scheme.hpp"

namespace fluxctl {

/// Piecewise entropy solution at a fixed time. Each piece is affine,
/// u(x) = offset + slope * x, on [x_lo, x_hi]; outside every piece the
/// solution equals `background`.
struct RiemannSolution {
  struct Piece {
    double x_lo;
    double x_hi;
    double offset;
    double slope;
  };
  struct Shock {
    double x;
    double u_left;
    double u_right;
    double speed;
  };

  double time = 1.0;
  double background = 0.0;
  std::vector<Piece> pieces;
  std::vector<Shock> shocks;

  double operator()(double x) const
  {
    for (auto const& p : pieces)
      if (x >= p.x_lo && x <= p.x_hi) return p.offset + p.slope * x;
    return background;
  }
};

/// Riemann data u0 = height on [a, b], 0 elsewhere, for a convex (Burgers)
/// or concave (traffic) flux, evolved until the fan meets the shock.
///
/// Burgers: a fan f'(u) = (x - a)/t opens at a and a shock leaves b with
/// speed [f]/[u]. Traffic: the shock sits at a and the fan at b.
inline RiemannSolution burgers_riemann(double t, double a = 2.0, double b = 3.0, double height = 1.0)
{
  FluxModel const f = FluxModel::burgers();
  double const s = (f(height) - f(0.0)) / height;
  double const head = a + f.deriv(height) * t;
  double const shock = b + s * t;
  if (head > shock) throw DomainError("burgers_riemann: fan has reached the shock");
  RiemannSolution sol;
  sol.time = t;
  // Fan u = (x - a)/t on (a, head]; plateau on [head, shock].
  sol.pieces.push_back({std::nextafter(a, INFINITY), head, -a / t, 1.0 / t});
  sol.pieces.push_back({head, shock, height, 0.0});
  sol.shocks.push_back({shock, height, 0.0, s});
  return sol;
}

inline RiemannSolution traffic_riemann(double t, double a = 1.0, double b = 2.0, double height = 0.8)
{
  FluxModel const f = FluxModel::traffic();
  double const s = (f(height) - f(0.0)) / height;
  double const shock = a + s * t;
  double const tail = b + f.deriv(height) * t;
  double const head = b + f.deriv(0.0) * t;
  if (shock > tail) throw DomainError("traffic_riemann: fan has reached the shock");
  RiemannSolution sol;
  sol.time = t;
  sol.pieces.push_back({shock, tail, height, 0.0});
  // Fan: f'(u) = 1 - 2u = (x - b)/t  =>  u = (1 - (x - b)/t) / 2.
  sol.pieces.push_back({std::nextafter(tail, INFINITY), head, 0.5 * (1.0 + b / t), -0.5 / t});
  sol.shocks.push_back({shock, 0.0, height, s});
  return sol;
}

/// Burgers with u0 = 1 on [2, 3]: u(1, x) = x - 2 on (2, 3], 1 on [3, 3.5], else 0.
inline double burgers_exact(double x) { return burgers_riemann(1.0)(x); }

/// Traffic u_t + (u(1-u))_x = 0 with u0 = 0.8 on [1, 2]:
/// u(1, x) = 0.8 on [1.2, 1.4], (3 - x)/2 on (1.4, 3], else 0.
inline double traffic_exact(double x) { return traffic_riemann(1.0)(x); }

inline std::vector<double> sample(double (*fn)(double), Grid const& grid)
{
  std::vector<double> v(grid.nx());
  for (int i = 0; i < grid.nx(); ++i) v[i] = fn(grid.x(i));
  return v;
}

inline double l1_error(std::span<double const> a, std::span<double const> b, double dx)
{
  if (a.size() != b.size()) throw DomainError("l1_error: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s * dx;
}

/// Forward solve on an (r nx, r^2 nt) lattice, restricted to the coarse
/// nodes by averaging the fine nodes over each coarse cell (trapezoidal
/// weights when r is even). When `profile` is given the initial data are
/// resampled on the fine nodes, otherwise each coarse value is held
/// constant over its cell.
inline std::vector<double> fine_reference(ControlProblem const& problem, Grid const& grid, int r,
                                          std::function<double(double)> const& profile = {})
{
  if (r < 1) throw DomainError("refinement factor must be >= 1");
  Grid const fine(grid.nx() * r, grid.nt() * r * r, grid.length());
  ControlProblem p = problem;
  p.u0.assign(fine.nx(), 0.0);
  for (int j = 0; j < fine.nx(); ++j) {
    if (profile) {
      p.u0[j] = profile(fine.x(j));
    } else {
      int const coarse = wrap(static_cast<int>(std::floor(fine.x(j) / grid.dx() + 0.5)), grid.nx());
      p.u0[j] = problem.u0[coarse];
    }
  }
  CflReport const cfl = cfl_check(p, fine);
  if (!cfl.ok()) throw DomainError("fine reference: " + cfl.describe());
  Field const u = forward_solve(p, fine);
  auto last = u.slice(fine.nt());
  std::vector<double> out(grid.nx());
  int const half = r / 2;
  for (int i = 0; i < grid.nx(); ++i) {
    double s = 0.0;
    for (int k = -half; k <= half; ++k) {
      double const w = (r % 2 == 0 && (k == -half || k == half)) ? 0.5 : 1.0;
      s += w * last[wrap(i * r + k, fine.nx())];
    }
    out[i] = s / r;
  }
  return out;
}

}  // namespace fluxctl
