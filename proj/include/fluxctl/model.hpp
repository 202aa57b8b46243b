#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "error.hpp"
#include "grid.hpp"

namespace fluxctl {

/// Densities are clamped to this floor before any log or division.
inline constexpr double density_floor = 1e-8;

struct StateRange {
  double lo;
  double hi;

  bool contains(double u) const noexcept { return u >= lo && u <= hi; }
  friend bool operator==(StateRange const&, StateRange const&) = default;
};

// ---------------------------------------------------------------------------
// Flux
// ---------------------------------------------------------------------------

enum class FluxKind { burgers, lwr_traffic, zero, tabulated };

/// Scalar flux f with derivative f'.
///
/// Presets: Burgers f(u) = u^2/2, LWR traffic f(u) = u(1-u), and f = 0.
/// A tabulated flux is a C1 piecewise cubic Hermite interpolant through
/// (node, value, slope) triples, linearly extended past the end nodes.
class FluxModel {
 public:
  static FluxModel burgers() { return FluxModel(FluxKind::burgers); }
  static FluxModel traffic() { return FluxModel(FluxKind::lwr_traffic); }
  static FluxModel zero() { return FluxModel(FluxKind::zero); }

  static FluxModel tabulated(std::vector<double> nodes, std::vector<double> values, std::vector<double> slopes)
  {
    if (nodes.size() < 2 || values.size() != nodes.size() || slopes.size() != nodes.size())
      throw DomainError("tabulated flux needs >= 2 nodes with matching values and slopes");
    if (!std::is_sorted(nodes.begin(), nodes.end()) ||
        std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end())
      throw DomainError("tabulated flux nodes must be strictly increasing");
    FluxModel m(FluxKind::tabulated);
    m.table_ = std::make_shared<Table const>(Table{std::move(nodes), std::move(values), std::move(slopes)});
    return m;
  }

  static FluxModel from_name(std::string_view name)
  {
    if (name == "burgers") return burgers();
    if (name == "traffic") return traffic();
    if (name == "zero") return zero();
    throw DomainError("unknown flux preset '" + std::string(name) + "'");
  }

  FluxKind kind() const noexcept { return kind_; }

  std::string_view name() const noexcept
  {
    switch (kind_) {
      case FluxKind::burgers: return "burgers";
      case FluxKind::lwr_traffic: return "traffic";
      case FluxKind::zero: return "zero";
      case FluxKind::tabulated: return "tabulated";
    }
    return "";
  }

  double operator()(double u) const noexcept
  {
    switch (kind_) {
      case FluxKind::burgers: return 0.5 * u * u;
      case FluxKind::lwr_traffic: return u * (1.0 - u);
      case FluxKind::zero: return 0.0;
      case FluxKind::tabulated: return table_->eval(u);
    }
    return 0.0;
  }

  double deriv(double u) const noexcept
  {
    switch (kind_) {
      case FluxKind::burgers: return u;
      case FluxKind::lwr_traffic: return 1.0 - 2.0 * u;
      case FluxKind::zero: return 0.0;
      case FluxKind::tabulated: return table_->deriv(u);
    }
    return 0.0;
  }

  /// max |f'(u)| over the closed range.
  double lipschitz_bound(StateRange r) const
  {
    switch (kind_) {
      case FluxKind::burgers: return std::max(std::abs(r.lo), std::abs(r.hi));
      case FluxKind::lwr_traffic: return std::max(std::abs(1.0 - 2.0 * r.lo), std::abs(1.0 - 2.0 * r.hi));
      case FluxKind::zero: return 0.0;
      case FluxKind::tabulated: return table_->max_abs_slope(r);
    }
    return 0.0;
  }

  bool operator==(FluxModel const& o) const
  {
    if (kind_ != o.kind_) return false;
    if (kind_ != FluxKind::tabulated) return true;
    return table_->nodes == o.table_->nodes && table_->values == o.table_->values && table_->slopes == o.table_->slopes;
  }

  std::vector<double> const* table_nodes() const { return table_ ? &table_->nodes : nullptr; }
  std::vector<double> const* table_values() const { return table_ ? &table_->values : nullptr; }
  std::vector<double> const* table_slopes() const { return table_ ? &table_->slopes : nullptr; }

 private:
  struct Table {
    std::vector<double> nodes, values, slopes;

    std::size_t interval(double u) const
    {
      auto it = std::upper_bound(nodes.begin(), nodes.end(), u);
      auto k = static_cast<std::size_t>(std::distance(nodes.begin(), it));
      return std::clamp<std::size_t>(k, 1, nodes.size() - 1) - 1;
    }

    double eval(double u) const
    {
      if (u <= nodes.front()) return values.front() + slopes.front() * (u - nodes.front());
      if (u >= nodes.back()) return values.back() + slopes.back() * (u - nodes.back());
      std::size_t k = interval(u);
      double const h = nodes[k + 1] - nodes[k];
      double const s = (u - nodes[k]) / h;
      double const h00 = (1 + 2 * s) * (1 - s) * (1 - s);
      double const h10 = s * (1 - s) * (1 - s);
      double const h01 = s * s * (3 - 2 * s);
      double const h11 = s * s * (s - 1);
      return h00 * values[k] + h10 * h * slopes[k] + h01 * values[k + 1] + h11 * h * slopes[k + 1];
    }

    double deriv(double u) const
    {
      if (u <= nodes.front()) return slopes.front();
      if (u >= nodes.back()) return slopes.back();
      std::size_t k = interval(u);
      double const h = nodes[k + 1] - nodes[k];
      double const s = (u - nodes[k]) / h;
      double const d00 = 6 * s * (s - 1);
      double const d10 = (1 - s) * (1 - 3 * s);
      double const d01 = -6 * s * (s - 1);
      double const d11 = s * (3 * s - 2);
      return (d00 * values[k] + d01 * values[k + 1]) / h + d10 * slopes[k] + d11 * slopes[k + 1];
    }

    // f' is quadratic on each interval: check ends plus the interior vertex.
    double max_abs_slope(StateRange r) const
    {
      double best = std::max(std::abs(deriv(r.lo)), std::abs(deriv(r.hi)));
      for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        double const a = std::max(nodes[k], r.lo);
        double const b = std::min(nodes[k + 1], r.hi);
        if (a > b) continue;
        best = std::max({best, std::abs(deriv(a)), std::abs(deriv(b))});
        double const h = nodes[k + 1] - nodes[k];
        // d/ds of h*f'(s) = 6(2s-1)(v0-v1)/h + (6s-4) m0 + (6s-2) m1
        double const q = 12.0 * (values[k] - values[k + 1]) / h + 6.0 * slopes[k] + 6.0 * slopes[k + 1];
        if (q != 0.0) {
          double const s = (6.0 * (values[k] - values[k + 1]) / h + 4.0 * slopes[k] + 2.0 * slopes[k + 1]) / q;
          double const x = nodes[k] + s * h;
          if (s > 0.0 && s < 1.0 && x >= a && x <= b) best = std::max(best, std::abs(deriv(x)));
        }
      }
      return best;
    }
  };

  explicit FluxModel(FluxKind k) : kind_(k) {}

  FluxKind kind_;
  std::shared_ptr<Table const> table_;
};

// ---------------------------------------------------------------------------
// Entropy
// ---------------------------------------------------------------------------

enum class EntropyKind { quadratic, boltzmann };

/// Convex entropy G with diffusion coefficient a(u) = 1 and mobility
/// V(u) = a(u) / G''(u).
class EntropyModel {
 public:
  static EntropyModel quadratic() { return EntropyModel(EntropyKind::quadratic); }
  static EntropyModel boltzmann() { return EntropyModel(EntropyKind::boltzmann); }

  static EntropyModel from_name(std::string_view name)
  {
    if (name == "quadratic") return quadratic();
    if (name == "boltzmann") return boltzmann();
    throw DomainError("unknown entropy preset '" + std::string(name) + "'");
  }

  EntropyKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return kind_ == EntropyKind::quadratic ? "quadratic" : "boltzmann"; }

  /// Boltzmann entropy lives on u > 0.
  bool requires_positive() const noexcept { return kind_ == EntropyKind::boltzmann; }

  double G(double u) const
  {
    if (kind_ == EntropyKind::quadratic) return 0.5 * u * u;
    if (u < 0.0) throw DomainError("boltzmann entropy of negative density");
    return u > 0.0 ? u * std::log(u) - u : 0.0;
  }

  double Gp(double u) const
  {
    if (kind_ == EntropyKind::quadratic) return u;
    if (u < 0.0) throw DomainError("boltzmann entropy of negative density");
    return std::log(std::max(u, density_floor));
  }

  double Gpp(double u) const
  {
    if (kind_ == EntropyKind::quadratic) return 1.0;
    return 1.0 / std::max(u, density_floor);
  }

  double diffusion(double /*u*/) const noexcept { return 1.0; }

  double mobility(double u) const
  {
    if (kind_ == EntropyKind::quadratic) return 1.0;
    return u;
  }
  double mobility_deriv(double /*u*/) const noexcept { return kind_ == EntropyKind::quadratic ? 0.0 : 1.0; }
  double mobility_deriv2(double /*u*/) const noexcept { return 0.0; }

  friend bool operator==(EntropyModel const&, EntropyModel const&) = default;

 private:
  explicit EntropyModel(EntropyKind k) : kind_(k) {}
  EntropyKind kind_;
};

/// Psi(u) = int_0^u f'(z) G'(z) dz. For the Boltzmann entropy the lower
/// limit is approached from above (z log z -> 0 keeps the integral finite).
inline double entropy_flux_psi(EntropyModel const& entropy, FluxModel const& flux, double u)
{
  if (entropy.requires_positive() && !(u >= 0.0)) throw DomainError("entropy flux quadrature failed: u outside (0, inf)");
  if (u == 0.0) return 0.0;
  auto integrand = [&](double z) {
    if (entropy.requires_positive()) return flux.deriv(z) * std::log(z);
    return flux.deriv(z) * entropy.Gp(z);
  };
  double err = 0.0;
  double value = 0.0;
  try {
    // tanh-sinh copes with the log singularity at 0.
    static boost::math::quadrature::tanh_sinh<double> rule;
    value = rule.integrate(integrand, 0.0, u, 1e-13, &err);
  } catch (std::exception const&) {
    throw NumericalError("entropy flux quadrature failed");
  }
  if (!std::isfinite(value) || err > 1e-9) throw NumericalError("entropy flux quadrature failed");
  return value;
}

// ---------------------------------------------------------------------------
// Potential and terminal functionals
// ---------------------------------------------------------------------------

enum class PotentialKind { zero, neg_boltzmann };

/// F(u) = -alpha * int u log u dx, or zero.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::zero;
  double alpha = 0.0;

  // Pointwise density of F; F(u) = sum_i density(u_i) dx.
  double density(double u) const
  {
    if (kind == PotentialKind::zero) return 0.0;
    check(u);
    return -alpha * u * std::log(std::max(u, density_floor));
  }
  double density_deriv(double u) const
  {
    if (kind == PotentialKind::zero) return 0.0;
    check(u);
    return -alpha * (std::log(std::max(u, density_floor)) + 1.0);
  }
  double density_deriv2(double u) const
  {
    if (kind == PotentialKind::zero) return 0.0;
    check(u);
    return -alpha / std::max(u, density_floor);
  }

  friend bool operator==(PotentialSpec const&, PotentialSpec const&) = default;

 private:
  static void check(double u)
  {
    if (!(u > 0.0)) throw DomainError("nonpositive density in entropy potential");
  }
};

inline double functional_F(PotentialSpec const& spec, std::span<double const> u, double dx)
{
  double s = 0.0;
  for (double v : u) s += spec.density(v);
  return s * dx;
}

inline std::vector<double> functional_F_deriv(PotentialSpec const& spec, std::span<double const> u)
{
  std::vector<double> d(u.size());
  std::transform(u.begin(), u.end(), d.begin(), [&](double v) { return spec.density_deriv(v); });
  return d;
}

enum class TerminalKind { zero, kl, linear };

/// Terminal cost H(w): zero, mu * int w log(w / target) dx, or int w g dx.
struct TerminalSpec {
  TerminalKind kind = TerminalKind::zero;
  double mu = 0.0;
  std::vector<double> target;  // kl
  std::vector<double> g;       // linear

  double density(int i, double w) const
  {
    switch (kind) {
      case TerminalKind::zero: return 0.0;
      case TerminalKind::kl: check_kl(i, w); return mu * w * std::log(w / target[i]);
      case TerminalKind::linear: return w * g[i];
    }
    return 0.0;
  }
  double density_deriv(int i, double w) const
  {
    switch (kind) {
      case TerminalKind::zero: return 0.0;
      case TerminalKind::kl: check_kl(i, w); return mu * (std::log(w / target[i]) + 1.0);
      case TerminalKind::linear: return g[i];
    }
    return 0.0;
  }
  double density_deriv2(int i, double w) const
  {
    if (kind != TerminalKind::kl) return 0.0;
    check_kl(i, w);
    return mu / w;
  }

  friend bool operator==(TerminalSpec const&, TerminalSpec const&) = default;

 private:
  void check_kl(int i, double w) const
  {
    if (!(w > 0.0) || !(target[i] > 0.0)) throw DomainError("nonpositive density in kl terminal cost");
  }
};

inline double functional_H(TerminalSpec const& spec, std::span<double const> w, double dx)
{
  double s = 0.0;
  for (int i = 0; i < static_cast<int>(w.size()); ++i) s += spec.density(i, w[i]);
  return s * dx;
}

inline std::vector<double> functional_H_deriv(TerminalSpec const& spec, std::span<double const> w)
{
  std::vector<double> d(w.size());
  for (int i = 0; i < static_cast<int>(w.size()); ++i) d[i] = spec.density_deriv(i, w[i]);
  return d;
}

// ---------------------------------------------------------------------------
// Control problem
// ---------------------------------------------------------------------------

struct ControlProblem {
  FluxModel flux = FluxModel::zero();
  EntropyModel entropy = EntropyModel::quadratic();
  double beta = 0.0;
  double c = 0.5;  // artificial viscosity constant
  PotentialSpec potential;
  TerminalSpec terminal;
  std::vector<double> u0;
  std::optional<StateRange> box;
  double domain_length = 1.0;

  /// Range over which |f'| is bounded: the box when given, else the hull of u0.
  StateRange admissible_range() const
  {
    if (box) return *box;
    auto [lo, hi] = std::minmax_element(u0.begin(), u0.end());
    return {*lo, *hi};
  }

  double lipschitz_bound() const { return flux.lipschitz_bound(admissible_range()); }

  /// beta + c dx, the total diffusion of the discrete scheme.
  double viscosity(double dx) const noexcept { return beta + c * dx; }

  /// Lower/upper state bounds seen by the primal prox.
  StateRange prox_bounds() const
  {
    double lo = box ? box->lo : -INFINITY;
    double hi = box ? box->hi : INFINITY;
    if (entropy.requires_positive() || potential.kind == PotentialKind::neg_boltzmann || terminal.kind == TerminalKind::kl)
      lo = std::max(lo, density_floor);
    return {lo, hi};
  }

  void validate(int nx) const
  {
    if (static_cast<int>(u0.size()) != nx) throw DomainError("u0 does not match the grid");
    if (!(beta >= 0.0)) throw DomainError("beta must be nonnegative");
    if (!(c > 0.0)) throw DomainError("artificial viscosity constant must be positive");
    if (!(domain_length > 0.0)) throw DomainError("domain length must be positive");
    for (double v : u0)
      if (!std::isfinite(v)) throw DomainError("u0 has non-finite values");
    if (box) {
      if (!(box->lo <= box->hi)) throw DomainError("empty box");
      for (double v : u0)
        if (!box->contains(v)) throw DomainError("u0 leaves the box");
    }
    if (potential.alpha < 0.0) throw DomainError("alpha must be nonnegative");
    if (terminal.kind == TerminalKind::kl) {
      if (terminal.mu < 0.0) throw DomainError("mu must be nonnegative");
      if (static_cast<int>(terminal.target.size()) != nx) throw DomainError("kl target does not match the grid");
    }
    if (terminal.kind == TerminalKind::linear && static_cast<int>(terminal.g.size()) != nx)
      throw DomainError("linear terminal weight does not match the grid");
  }
};

/// max(0.5, lipschitz/2): the smallest monotone viscosity, never below 0.5.
inline double default_viscosity_constant(FluxModel const& flux, StateRange range)
{
  return std::max(0.5, 0.5 * flux.lipschitz_bound(range));
}

/// |sum_i G'(u_i) (f(u_{i+1}) - f(u_{i-1})) / (2 dx) * dx|, the discrete
/// form of int G'(u) div f(u) dx, which vanishes for smooth periodic u.
inline double check_assumption1(ControlProblem const& problem, std::span<double const> u, double dx)
{
  int const n = static_cast<int>(u.size());
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    double const df = problem.flux(u[wrap(i + 1, n)]) - problem.flux(u[wrap(i - 1, n)]);
    s += problem.entropy.Gp(u[i]) * df / (2.0 * dx) * dx;
  }
  return std::abs(s);
}

}  // namespace fluxctl
