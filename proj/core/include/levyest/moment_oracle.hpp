#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "levyest/time_function.hpp"

namespace levyest {

/// Closed-form moment system of the linear jump SDE on [0, t_end]:
///   m' = mu m,   D' = 2 mu D + sigma^2 + nu_K xi^2,
///   G(s, t) = exp(int_s^t mu) D(s),   s <= t.
/// Integrals use the composite trapezoid rule on a uniform grid; values
/// between grid points integrate from the node below. M and D may be
/// evaluated slightly outside [0, t_end] (the ODE is run past the ends), which
/// lets finite differences straddle the boundary.
class MomentSolution {
 public:
  MomentSolution(CoefficientSet coeffs, double nu_K, double m0, double D0, double t_end = 1.0,
                 double step = 1e-3);

  const std::vector<double>& grid() const noexcept { return grid_; }
  const std::vector<double>& m() const noexcept { return m_; }
  const std::vector<double>& D() const noexcept { return D_; }
  const CoefficientSet& coeffs() const noexcept { return coeffs_; }
  double nu_K() const noexcept { return nu_K_; }
  double m0() const noexcept { return m0_; }
  double D0() const noexcept { return D0_; }
  double t_end() const noexcept { return grid_.back(); }

  double M_at(double t) const;  // int_0^t mu
  double m_at(double t) const;
  double D_at(double t) const;
  /// sigma^2(t) + nu_K xi^2(t) straight from the coefficients.
  double noise_sum(double t) const;

 private:
  std::size_t node_below(double t) const;

  CoefficientSet coeffs_;
  double nu_K_;
  double m0_;
  double D0_;
  double step_;
  std::vector<double> grid_;
  std::vector<double> M_;
  std::vector<double> m_;
  std::vector<double> D_;
};

std::vector<double> solve_mean(const TimeFunction& mu, double m0, std::span<const double> grid);

std::vector<double> solve_second_moment(const TimeFunction& mu, const TimeFunction& sigma,
                                        const TimeFunction& xi, double nu_K, double D0,
                                        std::span<const double> grid);

/// G(s, t) for 0 <= s <= t <= t_end.
double cov_value(const MomentSolution& sol, double s, double t);

/// Partial derivatives of G by central differences of the smooth extension
/// exp(int_s^t mu) D(s), so s = t is an interior point.
double cov_ds(const MomentSolution& sol, double s, double t, double fd_step = 1e-4);
double cov_dt(const MomentSolution& sol, double s, double t, double fd_step = 1e-4);

/// D'(t) - 2 mu(t) D(t) with D' by central differences.
double diagonal_identity(const MomentSolution& sol, double t, double fd_step = 1e-4);
/// exp(-int_s^t mu) dsG(s, t) - mu(s) D(s), for s < t.
double triangular_identity(const MomentSolution& sol, double s, double t, double fd_step = 1e-4);
/// (1 - t)^-1 int_t^1 [exp(-int_t^tau mu) dsG(t, tau)] dtau - mu(t) D(t); tends to
/// the integrand at tau = t as t -> 1.
double H_value(const MomentSolution& sol, double t, double fd_step = 1e-4);

struct IdentityResiduals {
  double dt_residual = 0.0;  // dtG - mu(t) G
  double ds_residual = 0.0;  // exp(-int mu) dsG - mu(s) D(s) - (sigma^2 + nu xi^2)(s)
};

IdentityResiduals verify_pde_identity(const MomentSolution& sol, double s, double t,
                                      double fd_step = 1e-4);

/// CSV t,m,D on the solution grid (every stride-th point).
void write_moments_csv(std::ostream& out, const MomentSolution& sol, std::size_t stride = 1);
/// CSV s,t,G on the triangle of the given grid.
void write_G_csv(std::ostream& out, const MomentSolution& sol, std::span<const double> grid);

}  // namespace levyest
