#pragma once

#include <cmath>
#include <complex>
#include <memory>
#include <vector>

#include <fftw3.h>

#include "error.hpp"
#include "grid.hpp"

namespace fluxctl {

/// Solves (eps I - D_tt - D_xx) v = r on the dual lattice l = 0..nt-1,
/// periodic in x, reflecting (Neumann) at l = 0 and with a zero ghost
/// slice at l = nt. The x direction is diagonalised by a real FFT; each
/// Fourier mode then needs one tridiagonal solve in t.
///
/// Plans are made with FFTW_ESTIMATE so results are reproducible.
class H1Solver {
 public:
  H1Solver(Grid const& grid, double epsilon)
      : nx_(grid.nx()), nt_(grid.nt()), modes_(grid.nx() / 2 + 1), dx_(grid.dx()), dt_(grid.dt()), eps_(epsilon),
        real_(fftw_alloc_real(static_cast<std::size_t>(nx_) * nt_)),
        spec_(fftw_alloc_complex(static_cast<std::size_t>(modes_) * nt_)), diag_(nt_), rhs_(nt_)
  {
    if (!(epsilon > 0.0)) throw DomainError("h1_epsilon must be positive");
    if (!real_ || !spec_) throw NumericalError("linear solver breakdown: fftw allocation failed");
    int n[] = {nx_};
    forward_.reset(fftw_plan_many_dft_r2c(1, n, nt_, real_.get(), nullptr, 1, nx_, spec_.get(), nullptr, 1, modes_,
                                          FFTW_ESTIMATE));
    backward_.reset(fftw_plan_many_dft_c2r(1, n, nt_, spec_.get(), nullptr, 1, modes_, real_.get(), nullptr, 1, nx_,
                                           FFTW_ESTIMATE));
    if (!forward_ || !backward_) throw NumericalError("linear solver breakdown: fftw planning failed");
    lambda_.resize(modes_);
    for (int k = 0; k < modes_; ++k) {
      double const s = std::sin(M_PI * k / nx_);
      lambda_[k] = 4.0 * s * s / (dx_ * dx_);
    }
  }

  double epsilon() const noexcept { return eps_; }

  /// rhs and the result both have nt slices.
  Field solve(Field const& rhs)
  {
    if (rhs.slices() != nt_ || rhs.nx() != nx_) throw DomainError("H1 solve: shape mismatch");
    std::copy(rhs.values().begin(), rhs.values().end(), real_.get());
    fftw_execute(forward_.get());

    double const it2 = 1.0 / (dt_ * dt_);
    for (int k = 0; k < modes_; ++k) {
      double const shift = eps_ + lambda_[k];
      // Thomas algorithm; the matrix is symmetric, strictly diagonally dominant.
      for (int l = 0; l < nt_; ++l) {
        diag_[l] = shift + (l == 0 ? 1.0 : 2.0) * it2;
        rhs_[l] = {spec_.get()[l * modes_ + k][0], spec_.get()[l * modes_ + k][1]};
      }
      for (int l = 1; l < nt_; ++l) {
        double const w = -it2 / diag_[l - 1];
        diag_[l] -= w * (-it2);
        rhs_[l] -= w * rhs_[l - 1];
      }
      rhs_[nt_ - 1] /= diag_[nt_ - 1];
      for (int l = nt_ - 2; l >= 0; --l) rhs_[l] = (rhs_[l] - (-it2) * rhs_[l + 1]) / diag_[l];
      for (int l = 0; l < nt_; ++l) {
        spec_.get()[l * modes_ + k][0] = rhs_[l].real();
        spec_.get()[l * modes_ + k][1] = rhs_[l].imag();
      }
    }

    fftw_execute(backward_.get());
    Field out(nt_, nx_);
    double const scale = 1.0 / nx_;
    auto v = out.values();
    for (std::size_t j = 0; j < v.size(); ++j) {
      v[j] = real_.get()[j] * scale;
      if (!std::isfinite(v[j])) throw NumericalError("linear solver breakdown");
    }
    return out;
  }

  /// Applies the operator directly, for residual checks.
  Field apply(Field const& v) const
  {
    Field out(nt_, nx_);
    double const it2 = 1.0 / (dt_ * dt_);
    double const ix2 = 1.0 / (dx_ * dx_);
    for (int l = 0; l < nt_; ++l) {
      for (int i = 0; i < nx_; ++i) {
        double const c = v(l, i);
        double const prev = l == 0 ? c : v(l - 1, i);
        double const next = l == nt_ - 1 ? 0.0 : v(l + 1, i);
        double const dtt = (next - 2.0 * c + prev) * it2;
        double const dxx = (v(l, wrap(i + 1, nx_)) - 2.0 * c + v(l, wrap(i - 1, nx_))) * ix2;
        out(l, i) = eps_ * c - dtt - dxx;
      }
    }
    return out;
  }

 private:
  struct PlanDeleter {
    void operator()(fftw_plan p) const noexcept { fftw_destroy_plan(p); }
  };
  struct FreeDeleter {
    void operator()(void* p) const noexcept { fftw_free(p); }
  };
  using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDeleter>;

  int nx_, nt_, modes_;
  double dx_, dt_, eps_;
  std::unique_ptr<double, FreeDeleter> real_;
  std::unique_ptr<fftw_complex, FreeDeleter> spec_;
  Plan forward_, backward_;
  std::vector<double> lambda_;
  std::vector<double> diag_;
  std::vector<std::complex<double>> rhs_;
};

}  // namespace fluxctl
