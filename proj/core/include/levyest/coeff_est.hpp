#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "levyest/cov_surface.hpp"
#include "levyest/local_poly.hpp"
#include "levyest/time_function.hpp"

namespace levyest {

/// mu_hat = dm_hat / m_hat on the region A where |m_hat| >= threshold; zero
/// (and flagged) elsewhere.
struct DriftEstimate {
  std::vector<double> grid;
  std::vector<double> mu_hat;
  std::vector<std::uint8_t> in_region;
  double threshold = 0.0;

  std::size_t region_size() const;
};

/// The extra information needed to split s = sigma^2 + nu_K xi^2.
struct SeparationPolicy {
  enum class Kind { known_sigma, known_xi, known_fraction };
  Kind kind = Kind::known_sigma;
  /// known_sigma: sigma^2(t); known_xi: xi^2(t); known_fraction:
  /// rho(t) = nu_K xi^2(t) / s(t) in [0, 1].
  TimeFunction payload;

  static SeparationPolicy known_sigma(TimeFunction sigma2) { return {Kind::known_sigma, std::move(sigma2)}; }
  static SeparationPolicy known_xi(TimeFunction xi2) { return {Kind::known_xi, std::move(xi2)}; }
  static SeparationPolicy known_fraction(TimeFunction rho) { return {Kind::known_fraction, std::move(rho)}; }

  void validate(std::span<const double> grid) const;
};

struct Separation {
  std::vector<double> sigma2;
  std::vector<double> xi2;
  std::vector<std::uint8_t> sigma2_floored;
  std::vector<std::uint8_t> xi2_floored;
};

enum CoefficientFlag : std::uint8_t {
  kOutsideRegion = 1u << 0,
  kBeyondTrim = 1u << 1,
  kDiagFloored = 1u << 2,
  kTriFloored = 1u << 3,
  kSigmaFloored = 1u << 4,
  kXiFloored = 1u << 5,
  kMeanFlagged = 1u << 6,
  kTriMissing = 1u << 7,
};

enum class SeparationSource { triangular, diagonal };

struct CoefficientOptions {
  double nu_K = 1.0;
  double epsilon = 0.1;
  std::optional<double> drift_threshold;  // default drift_threshold_fraction * sup |m_hat|
  double drift_threshold_fraction = 1e-3;
  std::optional<SeparationPolicy> policy;
  SeparationSource source = SeparationSource::triangular;
};

struct CoefficientEstimate {
  std::vector<double> grid;
  std::vector<double> mu_hat;
  std::vector<double> s_hat_diag;
  std::vector<double> s_hat_tri;  // NaN beyond 1 - epsilon
  std::optional<Separation> separation;
  std::vector<std::uint8_t> flags;
  double epsilon = 0.1;
  double nu_K = 1.0;
  double drift_threshold = 0.0;
  std::optional<SeparationPolicy> policy;
  SeparationSource source = SeparationSource::triangular;
};

/// Without an explicit threshold the region is |m_hat| >= fraction * sup |m_hat|.
DriftEstimate estimate_drift(const MeanEstimate& mean_est, std::optional<double> threshold = {},
                             double fraction = 1e-3);

/// Trapezoid integral of mu_hat over [a, b] with linear interpolation at the
/// ends (exact for piecewise-linear mu_hat).
double integrate_mu(std::span<const double> grid, std::span<const double> mu_hat, double a, double b);

/// H(t) = (1 - t)^-1 int_t^1 exp(-int_t^tau mu_hat) dsG_hat(t, tau) dtau - mu_hat(t) D_hat(t)
/// where dsG is the derivative in the first (earlier) time argument. t must
/// be a grid point with t <= 1 - epsilon. When the drift region ends before
/// 1 the average runs over [t, tau_end] instead, tau_end the last region
/// point of the stretch starting at t; the integrand is constant in tau
/// under the model, so this targets the same value. SparseWindow when t is
/// outside the region.
double estimate_H(const DriftEstimate& drift, const CovEstimate& cov, double t, double epsilon);

struct TotalNoise {
  std::vector<double> s_diag;
  std::vector<double> s_tri;
  std::vector<std::uint8_t> diag_floored;
  std::vector<std::uint8_t> tri_floored;
  std::vector<std::uint8_t> tri_missing;
};

/// s_diag = dD_hat - 2 mu_hat D_hat on the whole grid, s_tri = H_hat on
/// [0, 1 - epsilon]; both floored at zero.
TotalNoise estimate_total_noise(const DriftEstimate& drift, const CovEstimate& cov, double epsilon);

Separation separate(std::span<const double> grid, std::span<const double> s_hat,
                    const SeparationPolicy& policy, double nu_K);

CoefficientEstimate estimate_coefficients(const MeanEstimate& mean_est, const CovEstimate& cov_est,
                                          const CoefficientOptions& options);

void write_coefficients_csv(std::ostream& out, const CoefficientEstimate& est);

}  // namespace levyest
