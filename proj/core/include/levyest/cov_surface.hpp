#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "levyest/kernel.hpp"
#include "levyest/observations.hpp"

namespace levyest {

/// Which ordered pairs of within-curve times enter the scatter.
///  upper: (T_ik, T_ij) with T_ik < T_ij only, i.e. data on the triangle
///         s < t, fitting the smooth extension g(min, max) one-sidedly.
///  both:  both orderings, giving a surface symmetric in (s, t).
enum class PairOrientation { upper, both };

struct SurfaceOptions {
  int degree = 1;
  double bandwidth = 0.2;
  Kernel kernel;
  int max_widenings = 5;
  double widen_factor = 1.5;
};

struct SurfaceFit {
  double G = 0.0;
  double dsG = 0.0;
  double dtG = 0.0;
  double bandwidth = 0.0;
  int widenings = 0;
};

/// Local polynomial surface smoother of the raw products Y_ij Y_ik over
/// within-curve pairs j != k. Products of an observation with itself are
/// excluded unless include_diagonal is set (used only as a biased control).
class CovSmoother {
 public:
  explicit CovSmoother(const SparseObservations& obs,
                       PairOrientation orientation = PairOrientation::upper,
                       bool include_diagonal = false);

  /// Bivariate WLS on monomials (a - s)^p (b - t)^q, p + q <= degree, with
  /// product kernel weights (isotropic bandwidth). Throws SparseWindow.
  SurfaceFit fit_at(double s, double t, const SurfaceOptions& options) const;

  std::size_t pairs() const noexcept { return a_.size(); }
  PairOrientation orientation() const noexcept { return orientation_; }

 private:
  PairOrientation orientation_;
  std::vector<double> a_;  // first coordinate, sorted
  std::vector<double> b_;
  std::vector<double> z_;
};

struct DiagFit {
  double D = 0.0;
  double dD = 0.0;
};

/// Smoothed G, dsG, dtG on the triangle {(grid[a], grid[b]) : a <= b}, plus
/// D(t) = G(t, t) and dD(t) = dsG + dtG along the diagonal. Diagonal
/// derivatives are taken at (t - eps_d, t + eps_d), eps_d = 1e-3 * h.
struct CovEstimate {
  std::vector<double> grid;
  std::vector<double> G_hat;  // m x m row-major, entries with a <= b used
  std::vector<double> dsG_hat;
  std::vector<double> dtG_hat;
  std::vector<std::uint8_t> flagged;
  std::vector<double> D_hat;
  std::vector<double> dD_hat;
  std::vector<std::uint8_t> diag_flagged;
  int degree = 1;
  double bandwidth = 0.0;
  double epsilon_d = 0.0;
  Kernel kernel;
  PairOrientation orientation = PairOrientation::upper;

  std::size_t size() const noexcept { return grid.size(); }
  std::size_t index(std::size_t a, std::size_t b) const noexcept { return a * grid.size() + b; }
  double G(std::size_t a, std::size_t b) const { return G_hat[index(a, b)]; }
  double dsG(std::size_t a, std::size_t b) const { return dsG_hat[index(a, b)]; }
  double dtG(std::size_t a, std::size_t b) const { return dtG_hat[index(a, b)]; }
  bool is_flagged(std::size_t a, std::size_t b) const { return flagged[index(a, b)] != 0; }
};

SurfaceFit fit_cov_at(const SparseObservations& obs, double s, double t, int degree, double h,
                      Kernel kernel = {}, PairOrientation orientation = PairOrientation::upper);

CovEstimate fit_cov_grid(const CovSmoother& smoother, std::span<const double> grid,
                         const SurfaceOptions& options);
CovEstimate fit_cov_grid(const SparseObservations& obs, std::span<const double> grid, int degree,
                         double h, Kernel kernel = {},
                         PairOrientation orientation = PairOrientation::upper);

DiagFit fit_diag(const CovSmoother& smoother, double t, const SurfaceOptions& options);
DiagFit fit_diag(const SparseObservations& obs, double t, int degree, double h, Kernel kernel = {},
                 PairOrientation orientation = PairOrientation::upper);

/// constant * c * (n r^2)^(-1/(2d+4)), clamped as default_bandwidth_mean.
double default_bandwidth_cov(const SparseObservations& obs, int degree, double constant = 1.0);

struct NoiseVariance {
  double value = 0.0;
  bool floored = false;
};

/// Average over observations of [smoothed Y^2 - D_hat](T_ij), floored at 0.
/// Both curves are linearly interpolated from the estimate's grid.
NoiseVariance noise_variance_estimate(const SparseObservations& obs, const CovEstimate& cov,
                                      int degree = 2, double bandwidth = 0.0);

void write_cov_csv(std::ostream& out, const CovEstimate& est);
void write_diag_csv(std::ostream& out, const CovEstimate& est);

}  // namespace levyest
