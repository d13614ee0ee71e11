#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "levyest/kernel.hpp"
#include "levyest/observations.hpp"

namespace levyest {

struct SmootherOptions {
  int degree = 2;
  double bandwidth = 0.1;
  Kernel kernel;
  int max_widenings = 5;
  double widen_factor = 1.5;
};

struct LocalFit {
  double value = 0.0;
  double slope = 0.0;      // first derivative, unscaled
  double bandwidth = 0.0;  // after any widening
  int widenings = 0;
  double condition = 0.0;
};

/// Pooled local polynomial regression of y on t. The basis is (T - t)^l, so
/// the degree-one coefficient is the derivative itself.
class MeanSmoother {
 public:
  MeanSmoother(std::span<const double> t, std::span<const double> y);
  explicit MeanSmoother(const SparseObservations& obs);
  /// Smoother of y^2 instead of y (the diagonal products Y_ij * Y_ij).
  static MeanSmoother of_squares(const SparseObservations& obs);

  /// Widens the bandwidth by widen_factor (at most max_widenings times)
  /// while fewer than degree + 1 distinct times carry weight. Throws
  /// SparseWindow when that is not enough.
  LocalFit fit_at(double t, const SmootherOptions& options) const;

  std::size_t size() const noexcept { return t_.size(); }

 private:
  MeanSmoother() = default;
  void sort_pooled();

  std::vector<double> t_;
  std::vector<double> y_;
};

struct MeanEstimate {
  std::vector<double> grid;
  std::vector<double> m_hat;
  std::vector<double> dm_hat;
  std::vector<std::uint8_t> flagged;
  int degree = 2;
  double bandwidth = 0.0;
  Kernel kernel;

  std::size_t flagged_count() const;
};

LocalFit fit_mean_at(const SparseObservations& obs, double t, int degree, double h,
                     Kernel kernel = {});

/// Grid points whose fit fails are flagged (values NaN). More than 20%
/// flagged points throws EstimationFailed.
MeanEstimate fit_mean_curve(const SparseObservations& obs, std::span<const double> grid, int degree,
                            double h, Kernel kernel = {});
MeanEstimate fit_mean_curve(const MeanSmoother& smoother, std::span<const double> grid,
                            const SmootherOptions& options);

/// constant * c * (n r)^(-1/(2d+3)) with c the range of the pooled design, clamped to
/// [3 * median design gap, 0.5] (the upper bound wins if they cross).
double default_bandwidth_mean(const SparseObservations& obs, int degree, double constant = 1.0);

/// Median gap between consecutive distinct pooled design times.
double median_design_gap(const SparseObservations& obs);

void write_mean_csv(std::ostream& out, const MeanEstimate& est);

}  // namespace levyest
