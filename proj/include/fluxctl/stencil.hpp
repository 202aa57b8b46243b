#pragma once

#include <algorithm>
#include <span>

#include "grid.hpp"

namespace fluxctl::stencil {

inline double positive_part(double v) noexcept { return std::max(v, 0.0); }
// u^- = u^+ - u, so the negative part is nonnegative.
inline double negative_part(double v) noexcept { return std::max(-v, 0.0); }

/// (Dw)_i = (w_{i+1} - w_i) / dx
inline double forward_diff(std::span<double const> w, double dx, int i) noexcept
{
  int const n = static_cast<int>(w.size());
  return (w[wrap(i + 1, n)] - w[wrap(i, n)]) / dx;
}

/// (w_{i+1} - w_{i-1}) / (2 dx)
inline double central_diff(std::span<double const> w, double dx, int i) noexcept
{
  int const n = static_cast<int>(w.size());
  return (w[wrap(i + 1, n)] - w[wrap(i - 1, n)]) / (2.0 * dx);
}

inline double laplacian(std::span<double const> w, double dx, int i) noexcept
{
  int const n = static_cast<int>(w.size());
  return (w[wrap(i + 1, n)] - 2.0 * w[wrap(i, n)] + w[wrap(i - 1, n)]) / (dx * dx);
}

/// Squared norm of the upwinded gradient pair ((D phi)_i^+, -(D phi)_{i-1}^-).
inline double upwind_grad_sq(std::span<double const> phi, double dx, int i) noexcept
{
  double const right = positive_part(forward_diff(phi, dx, i));
  double const left = negative_part(forward_diff(phi, dx, i - 1));
  return right * right + left * left;
}

}  // namespace fluxctl::stencil
