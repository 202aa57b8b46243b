#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <span>
#include <vector>

#include "error.hpp"

namespace fluxctl {

/// Uniform periodic space-time lattice on [0, b) x [0, 1].
/// Node i sits at x_i = i*dx; slice l sits at t_l = l*dt.
class Grid {
 public:
  Grid(int nx, int nt, double b) : nx_(nx), nt_(nt), b_(b)
  {
    if (nx < 4) throw DomainError("grid needs nx >= 4");
    if (nt < 1) throw DomainError("grid needs nt >= 1");
    if (!(b > 0.0)) throw DomainError("domain length must be positive");
  }

  int nx() const noexcept { return nx_; }
  int nt() const noexcept { return nt_; }
  double length() const noexcept { return b_; }
  double dx() const noexcept { return b_ / nx_; }
  double dt() const noexcept { return 1.0 / nt_; }
  double x(int i) const noexcept { return i * dx(); }
  double t(int l) const noexcept { return l * dt(); }

  std::vector<double> nodes() const
  {
    std::vector<double> xs(nx_);
    for (int i = 0; i < nx_; ++i) xs[i] = x(i);
    return xs;
  }

  friend bool operator==(Grid const&, Grid const&) = default;

 private:
  int nx_;
  int nt_;
  double b_;
};

inline int wrap(int i, int n) noexcept { return ((i % n) + n) % n; }

/// Time-indexed stack of periodic spatial slices, stored slice-major.
class Field {
 public:
  Field() = default;
  Field(int slices, int nx, double fill = 0.0)
      : slices_(slices), nx_(nx), data_(static_cast<std::size_t>(slices) * nx, fill)
  {
  }

  int slices() const noexcept { return slices_; }
  int nx() const noexcept { return nx_; }

  double& operator()(int l, int i) noexcept
  {
    assert(l >= 0 && l < slices_ && i >= 0 && i < nx_);
    return data_[static_cast<std::size_t>(l) * nx_ + i];
  }
  double operator()(int l, int i) const noexcept
  {
    assert(l >= 0 && l < slices_ && i >= 0 && i < nx_);
    return data_[static_cast<std::size_t>(l) * nx_ + i];
  }

  std::span<double> slice(int l) noexcept { return {data_.data() + static_cast<std::size_t>(l) * nx_, static_cast<std::size_t>(nx_)}; }
  std::span<double const> slice(int l) const noexcept
  {
    return {data_.data() + static_cast<std::size_t>(l) * nx_, static_cast<std::size_t>(nx_)};
  }

  std::span<double> values() noexcept { return data_; }
  std::span<double const> values() const noexcept { return data_; }

  void set_slice(int l, std::span<double const> v)
  {
    assert(static_cast<int>(v.size()) == nx_);
    std::copy(v.begin(), v.end(), slice(l).begin());
  }

  bool all_finite() const noexcept
  {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(Field const&, Field const&) = default;

 private:
  int slices_ = 0;
  int nx_ = 0;
  std::vector<double> data_;
};

/// sqrt(dx*dt*sum v^2): the discrete space-time L2 norm.
inline double l2_norm(Field const& f, double dx, double dt)
{
  double s = 0.0;
  for (double v : f.values()) s += v * v;
  return std::sqrt(s * dx * dt);
}

inline double mass(std::span<double const> u, double dx)
{
  double s = 0.0;
  for (double v : u) s += v;
  return s * dx;
}

}  // namespace fluxctl
