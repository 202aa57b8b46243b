#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <gtest/gtest.h>

#include "fluxctl/oracle.hpp"
#include "fluxctl/scheme.hpp"

using namespace fluxctl;

namespace {

ControlProblem problem(std::string_view flux, std::string_view entropy, std::vector<double> u0, double beta = 0.0,
                       double c = 0.5, double b = 4.0)
{
  ControlProblem p;
  p.flux = FluxModel::from_name(flux);
  p.entropy = EntropyModel::from_name(entropy);
  p.beta = beta;
  p.c = c;
  p.u0 = std::move(u0);
  p.domain_length = b;
  return p;
}

std::vector<double> indicator(Grid const& g, double lo, double hi, double height, double background = 0.0)
{
  std::vector<double> v(g.nx());
  for (int i = 0; i < g.nx(); ++i) v[i] = (g.x(i) >= lo && g.x(i) <= hi) ? height : background;
  return v;
}

}  // namespace

TEST(Grid, SpacingAndValidation)
{
  Grid g(100, 50, 4.0);
  EXPECT_DOUBLE_EQ(g.dx(), 0.04);
  EXPECT_DOUBLE_EQ(g.dt(), 0.02);
  EXPECT_DOUBLE_EQ(g.x(25), 1.0);
  EXPECT_DOUBLE_EQ(g.t(50), 1.0);
  EXPECT_THROW(Grid(3, 1, 1.0), DomainError);
  EXPECT_THROW(Grid(4, 0, 1.0), DomainError);
  EXPECT_THROW(Grid(4, 1, 0.0), DomainError);
  EXPECT_EQ(wrap(-1, 4), 3);
  EXPECT_EQ(wrap(4, 4), 0);
}

TEST(Stencil, ConstantSliceHasNoDifferences)
{
  std::vector<double> w(6, 2.5);
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(stencil::forward_diff(w, 0.3, i), 0.0);
    EXPECT_EQ(stencil::laplacian(w, 0.3, i), 0.0);
    EXPECT_EQ(stencil::upwind_grad_sq(w, 0.3, i), 0.0);
  }
}

TEST(Stencil, HandEvaluatedExamples)
{
  std::vector<double> w{0, 1, 0, 0};
  EXPECT_EQ(stencil::forward_diff(w, 1.0, 0), 1.0);
  EXPECT_EQ(stencil::laplacian(w, 1.0, 0), 1.0);
  std::vector<double> phi{0, 2, 0, 0};
  EXPECT_EQ(stencil::upwind_grad_sq(phi, 1.0, 1), 0.0);
  EXPECT_EQ(stencil::upwind_grad_sq(phi, 1.0, 0), 4.0);
  EXPECT_EQ(stencil::upwind_grad_sq(phi, 1.0, 2), 4.0);  // (D phi)_1 = -2 enters as a negative part
}

TEST(Stencil, SummationByParts)
{
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 50; ++trial) {
    int const n = 5 + trial;
    double const dx = 0.1 + 0.01 * trial;
    std::vector<double> w(n), z(n);
    for (int i = 0; i < n; ++i) {
      w[i] = n01(rng);
      z[i] = n01(rng);
    }
    double lhs = 0.0, rhs = 0.0, scale = 0.0;
    for (int i = 0; i < n; ++i) {
      lhs += stencil::forward_diff(w, dx, i) * z[i];
      rhs -= w[i] * stencil::forward_diff(z, dx, i - 1);
      scale += std::abs(w[i] * z[i]) / dx;
    }
    EXPECT_LE(std::abs(lhs - rhs), 1e-14 * scale);
  }
}

TEST(Cfl, Example1Grid)
{
  Grid g(100, 50, 4.0);
  auto p = problem("burgers", "quadratic", indicator(g, 2, 3, 1));
  auto r = cfl_check(p, g);
  EXPECT_TRUE(r.ok());
  EXPECT_NEAR(r.step_lhs, 0.0016, 1e-15);
  EXPECT_NEAR(r.step_rhs, 0.0008, 1e-15);
  EXPECT_EQ(r.describe(), "CFL ok, margin 0.0008");

  p.beta = 0.1;
  r = cfl_check(p, g);
  EXPECT_FALSE(r.ok());
  EXPECT_TRUE(r.viscosity_ok());
  EXPECT_NEAR(r.step_rhs, 0.0048, 1e-15);
  EXPECT_NE(r.describe().find("violation"), std::string::npos);
}

TEST(Cfl, ViscosityBelowHalfLipschitz)
{
  Grid g(100, 50, 4.0);
  auto p = problem("burgers", "quadratic", indicator(g, 2, 3, 1));
  p.c = 0.4 * p.lipschitz_bound();
  auto r = cfl_check(p, g);
  EXPECT_FALSE(r.viscosity_ok());
  EXPECT_FALSE(r.ok());
}

TEST(LaxFriedrichs, ConstantStateIsFixed)
{
  Grid g(20, 10, 1.0);
  auto p = problem("traffic", "quadratic", std::vector<double>(20, 0.3));
  auto next = lax_friedrichs_step(p, g, p.u0);
  for (double v : next) EXPECT_NEAR(v, 0.3, 1e-16);
}

TEST(LaxFriedrichs, HandAppliedStencil)
{
  // dx = 1, dt = 0.25, beta = 0, c = 0.5, Burgers, u = (0, 1, 0, 0).
  // nu = (beta + c dx) dt / dx^2 = 0.125, adv = dt / (2 dx) = 0.125.
  Grid g(4, 4, 4.0);
  auto p = problem("burgers", "quadratic", {0, 1, 0, 0});
  auto u = lax_friedrichs_step(p, g, p.u0);
  EXPECT_DOUBLE_EQ(u[0], -0.125 * (0.5 - 0.0) + 0.125 * (1 - 0 + 0));
  EXPECT_DOUBLE_EQ(u[0], 0.0625);
  EXPECT_DOUBLE_EQ(u[1], 0.75);
  EXPECT_DOUBLE_EQ(u[2], 0.1875);
  EXPECT_DOUBLE_EQ(u[3], 0.0);
}

TEST(LaxFriedrichs, NonFiniteOutputIsReported)
{
  Grid g(4, 4, 4.0);
  auto p = problem("burgers", "quadratic", {0, 1, 0, 0});
  std::vector<double> bad{0, NAN, 0, 0};
  try {
    lax_friedrichs_step(p, g, bad);
    FAIL();
  } catch (NumericalError const& e) {
    EXPECT_STREQ(e.what(), "forward step diverged");
  }
}

TEST(LaxFriedrichs, MonotoneUnderCfl)
{
  // Raising any one argument never lowers any output value.
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0;
  for (int trial = 0; trial < 200; ++trial) {
    int const nx = 8 + static_cast<int>(unit(rng) * 24);
    auto const flux = trial % 2 ? "burgers" : "traffic";
    double const beta = trial % 3 == 0 ? 0.0 : 0.01 * unit(rng);
    double const b = 1.0 + 3.0 * unit(rng);
    std::vector<double> u(nx);
    for (double& v : u) v = unit(rng);
    auto p = problem(flux, "quadratic", u, beta);
    p.box = StateRange{0.0, 1.0};
    p.c = default_viscosity_constant(p.flux, *p.box) * (1.0 + unit(rng));
    double const dx = b / nx;
    int const nt = static_cast<int>(std::ceil(2.0 * p.viscosity(dx) / (dx * dx) * (1.0 + unit(rng))));
    Grid g(nx, nt, b);
    ASSERT_TRUE(cfl_check(p, g).ok());
    auto const base = lax_friedrichs_step(p, g, u);
    int const j = static_cast<int>(unit(rng) * nx);
    auto bumped = u;
    bumped[j] += 1e-4;
    auto const out = lax_friedrichs_step(p, g, bumped);
    for (int i = 0; i < nx; ++i)
      if (out[i] < base[i] - 1e-15) ++violations;
  }
  EXPECT_EQ(violations, 0);
}

TEST(ForwardSolve, ConservesMassRespectsBoundsAndDissipatesEntropy)
{
  struct Case {
    char const* flux;
    char const* entropy;
    double lo, hi, height, background, beta;
  };
  for (auto const& c : {Case{"burgers", "quadratic", 2, 3, 1.0, 0.0, 0.0}, Case{"traffic", "quadratic", 1, 2, 0.8, 0.0, 0.0},
                        Case{"traffic", "boltzmann", 0.5, 1.5, 0.4, 1e-3, 1e-3}, Case{"zero", "boltzmann", 1, 3, 0.9, 0.1, 0.0}}) {
    Grid g(100, 50, 4.0);
    auto p = problem(c.flux, c.entropy, indicator(g, c.lo, c.hi, c.height, c.background), c.beta);
    Field const u = forward_solve(p, g);
    double const m0 = mass(u.slice(0), g.dx());
    auto const trace = entropy_trace(p.entropy, u, g.dx());
    for (int l = 0; l <= g.nt(); ++l) {
      EXPECT_NEAR(mass(u.slice(l), g.dx()), m0, 1e-12) << c.flux;
      for (double v : u.slice(l)) {
        EXPECT_GE(v, std::min(c.height, c.background) - 1e-15);
        EXPECT_LE(v, std::max(c.height, c.background) + 1e-15);
      }
      if (l > 0) {
        EXPECT_LE(trace[l], trace[l - 1] + 1e-10) << c.flux << "/" << c.entropy << " l=" << l;
      }
    }
  }
}

TEST(ForwardSolve, PureDiffusionRelaxesTowardsMean)
{
  Grid g(50, 400, 1.0);
  auto p = problem("zero", "quadratic", indicator(g, 0.2, 0.5, 1.0), 0.0, 2.0);
  Field const u = forward_solve(p, g);
  double const mean = mass(u.slice(0), g.dx());
  auto spread = [&](int l) {
    double s = 0.0;
    for (double v : u.slice(l)) s = std::max(s, std::abs(v - mean));
    return s;
  };
  EXPECT_LT(spread(g.nt()), 0.5 * spread(0));
  EXPECT_NEAR(mass(u.slice(g.nt()), g.dx()), mean, 1e-12);
}

TEST(ForwardSolve, CflPolicy)
{
  Grid g(100, 50, 4.0);
  auto p = problem("traffic", "quadratic", indicator(g, 1, 2, 0.8), 0.021);  // barely violating, stays finite
  EXPECT_THROW(forward_solve(p, g), DomainError);
  std::ostringstream warn;
  EXPECT_NO_THROW(forward_solve(p, g, CflPolicy::warn, &warn));
  EXPECT_NE(warn.str().find("CFL violation"), std::string::npos);
}

TEST(ForwardSolve, Example1WithinToleranceOfEntropySolution)
{
  Grid g(100, 50, 4.0);
  auto p = problem("burgers", "quadratic", indicator(g, 2, 3, 1));
  Field const u = forward_solve(p, g);
  EXPECT_LE(l1_error(u.slice(g.nt()), sample(&burgers_exact, g), g.dx()), 0.15);
  EXPECT_LE(boundary_deviation(u.slice(g.nt()), 0.0), 1e-3);
}

TEST(ForwardSolve, Example2Plateau)
{
  Grid g(100, 50, 4.0);
  auto p = problem("traffic", "quadratic", indicator(g, 1, 2, 0.8));
  Field const u = forward_solve(p, g);
  for (int i = 0; i < g.nx(); ++i)
    if (g.x(i) >= 1.25 - 1e-12 && g.x(i) <= 1.35 + 1e-12) {
      EXPECT_NEAR(u(g.nt(), i), 0.8, 0.05) << g.x(i);
    }
}

TEST(EntropyProduction, ConstantFieldProducesNothing)
{
  auto p = problem("zero", "boltzmann", std::vector<double>(10, 0.7));
  EXPECT_EQ(entropy_production(p, p.u0, 0.1), 0.0);
}

TEST(EntropyProduction, BoltzmannApproximatesFisherInformation)
{
  double const b = 1.0;
  auto u_of = [&](double x) { return 1.0 + 0.5 * std::sin(2 * M_PI * x / b); };
  auto du = [&](double x) { return 0.5 * (2 * M_PI / b) * std::cos(2 * M_PI * x / b); };
  boost::math::quadrature::tanh_sinh<double> q;
  double const fisher = q.integrate([&](double x) { return du(x) * du(x) / u_of(x); }, 0.0, b);

  Grid g(200, 1, b);
  std::vector<double> u(g.nx());
  for (int i = 0; i < g.nx(); ++i) u[i] = u_of(g.x(i));
  auto p = problem("zero", "boltzmann", u, 0.0, 0.5, b);
  EXPECT_NEAR(entropy_production(p, u, g.dx()) / fisher, 1.0, 0.01);
}

TEST(EntropyProduction, RejectsNonpositiveBoltzmannStates)
{
  auto p = problem("zero", "boltzmann", {0.5, 0.0, 0.5, 0.5});
  EXPECT_THROW(entropy_production(p, p.u0, 0.1), DomainError);
}

TEST(EntropyProduction, DissipationIdentityUnderPureDiffusion)
{
  // Quadratic entropy, u_t = kappa u_xx: d/dt sum G(u) dx = -kappa * production.
  double const b = 4.0;
  int const nx = 200;
  double const dx = b / nx;
  double const c = 0.5;
  double const kappa = 1.0 + c * dx;
  int const nt = static_cast<int>(std::ceil(2.0 * kappa / (dx * dx) * 1.25));
  Grid g(nx, nt, b);
  std::vector<double> u0(nx);
  for (int i = 0; i < nx; ++i) u0[i] = 1.0 + 0.5 * std::sin(2 * M_PI * g.x(i) / b) + 0.2 * std::cos(4 * M_PI * g.x(i) / b);
  auto p = problem("zero", "quadratic", u0, 1.0, c, b);
  Field const u = forward_solve(p, g);
  auto const trace = entropy_trace(p.entropy, u, g.dx());
  for (int l : {nt / 10, nt / 4, nt / 2}) {
    double const rate = (trace[l + 1] - trace[l - 1]) / (2 * g.dt());
    double const prod = entropy_production(p, u.slice(l), g.dx());
    EXPECT_NEAR(rate / -prod, 1.0, 0.05) << l;
    EXPECT_NEAR(rate / (-kappa * prod), 1.0, 1e-3) << l;
  }
}

TEST(BoundaryDeviation, MeasuresSeamCells)
{
  std::vector<double> u{0.002, 0.5, 0.7, 0.0005};
  EXPECT_DOUBLE_EQ(boundary_deviation(u, 0.0), 0.002);
  EXPECT_DOUBLE_EQ(boundary_deviation(u, 0.001), 0.001);
}
