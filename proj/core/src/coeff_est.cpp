#include "levyest/coeff_est.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "levyest/csv.hpp"
#include "levyest/error.hpp"

namespace levyest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kGridTolerance = 1e-9;

std::size_t grid_index(std::span<const double> grid, double t) {
  const auto it = std::lower_bound(grid.begin(), grid.end(), t - kGridTolerance);
  if (it == grid.end() || std::abs(*it - t) > kGridTolerance) {
    throw PreconditionError("t=" + csv::format(t) + " is not an evaluation grid point");
  }
  return static_cast<std::size_t>(it - grid.begin());
}

}  // namespace

std::size_t DriftEstimate::region_size() const {
  return static_cast<std::size_t>(std::count(in_region.begin(), in_region.end(), std::uint8_t{1}));
}

DriftEstimate estimate_drift(const MeanEstimate& mean_est, std::optional<double> threshold, double fraction) {
  const std::size_t m = mean_est.grid.size();
  DriftEstimate out;
  out.grid = mean_est.grid;
  out.mu_hat.assign(m, 0.0);
  out.in_region.assign(m, 0);
  double sup = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    if (!mean_est.flagged[k]) sup = std::max(sup, std::abs(mean_est.m_hat[k]));
  }
  out.threshold = threshold ? *threshold : fraction * sup;
  for (std::size_t k = 0; k < m; ++k) {
    if (mean_est.flagged[k]) continue;
    const double mk = mean_est.m_hat[k];
    if (mk != 0.0 && std::abs(mk) >= out.threshold) {
      out.mu_hat[k] = mean_est.dm_hat[k] / mk;
      out.in_region[k] = 1;
    }
  }
  if (out.region_size() == 0) {
    throw NoIdentifiableRegion("|m_hat| is below the drift threshold everywhere");
  }
  return out;
}

double integrate_mu(std::span<const double> grid, std::span<const double> mu_hat, double a, double b) {
  if (a == b) return 0.0;
  if (a > b) return -integrate_mu(grid, mu_hat, b, a);
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double x0 = std::max(a, grid[k]);
    const double x1 = std::min(b, grid[k + 1]);
    if (!(x1 > x0)) continue;
    const double slope = (mu_hat[k + 1] - mu_hat[k]) / (grid[k + 1] - grid[k]);
    const double f0 = mu_hat[k] + slope * (x0 - grid[k]);
    const double f1 = mu_hat[k] + slope * (x1 - grid[k]);
    acc += 0.5 * (x1 - x0) * (f0 + f1);
  }
  return acc;
}

double estimate_H(const DriftEstimate& drift, const CovEstimate& cov, double t, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw PreconditionError("epsilon must lie in (0, 1)");
  if (t > 1.0 - epsilon + kGridTolerance) {
    throw PreconditionError("t=" + csv::format(t) + " beyond the trim 1 - epsilon");
  }
  const auto& grid = cov.grid;
  const std::size_t a = grid_index(grid, t);
  if (drift.grid.size() != grid.size()) throw PreconditionError("drift and covariance grids differ");
  if (cov.diag_flagged[a]) throw SparseWindow(t, "no diagonal estimate");
  if (!drift.in_region[a]) throw SparseWindow(t, "t is outside the drift region");

  // running int_t^tau mu_hat along the grid, integrand exp(-.) * dsG(t, tau),
  // over the stretch of the drift region that starts at t
  double running = 0.0;
  double acc = 0.0;
  double prev_tau = 0.0, prev_f = 0.0;
  bool have_prev = false;
  std::size_t used = 0, skipped = 0;
  for (std::size_t b = a; b < grid.size(); ++b) {
    if (!drift.in_region[b]) break;
    if (b > a) running += 0.5 * (grid[b] - grid[b - 1]) * (drift.mu_hat[b] + drift.mu_hat[b - 1]);
    if (cov.is_flagged(a, b)) {
      ++skipped;
      continue;
    }
    const double f = std::exp(-running) * cov.dsG(a, b);
    if (have_prev) acc += 0.5 * (grid[b] - prev_tau) * (f + prev_f);
    prev_tau = grid[b];
    prev_f = f;
    have_prev = true;
    ++used;
  }
  if (used < 2 || 5 * skipped > used + skipped) {
    throw SparseWindow(t, "too few unflagged (t, tau) pairs for the triangular average");
  }
  return acc / (prev_tau - t) - drift.mu_hat[a] * cov.D_hat[a];
}

TotalNoise estimate_total_noise(const DriftEstimate& drift, const CovEstimate& cov, double epsilon) {
  const std::size_t m = cov.grid.size();
  TotalNoise out;
  out.s_diag.assign(m, kNaN);
  out.s_tri.assign(m, kNaN);
  out.diag_floored.assign(m, 0);
  out.tri_floored.assign(m, 0);
  out.tri_missing.assign(m, 0);
  for (std::size_t k = 0; k < m; ++k) {
    if (!cov.diag_flagged[k]) {
      const double s = cov.dD_hat[k] - 2.0 * drift.mu_hat[k] * cov.D_hat[k];
      out.diag_floored[k] = s < 0.0;
      out.s_diag[k] = std::max(s, 0.0);
    }
    if (cov.grid[k] > 1.0 - epsilon + kGridTolerance) continue;
    try {
      const double s = estimate_H(drift, cov, cov.grid[k], epsilon);
      out.tri_floored[k] = s < 0.0;
      out.s_tri[k] = std::max(s, 0.0);
    } catch (const SparseWindow&) {
      out.tri_missing[k] = 1;
    }
  }
  return out;
}

void SeparationPolicy::validate(std::span<const double> grid) const {
  for (double t : grid) {
    const double v = payload(t);
    if (!std::isfinite(v) || v < 0.0) {
      throw PolicyError("separation payload is negative or not finite at t=" + csv::format(t));
    }
    if (kind == Kind::known_fraction && v > 1.0) {
      throw PolicyError("known fraction must lie in [0, 1], got " + csv::format(v));
    }
  }
}

Separation separate(std::span<const double> grid, std::span<const double> s_hat,
                    const SeparationPolicy& policy, double nu_K) {
  if (!(nu_K > 0.0) || !std::isfinite(nu_K)) throw PolicyError("nu_K must be positive");
  if (grid.size() != s_hat.size()) throw PreconditionError("grid and s_hat differ in length");
  policy.validate(grid);
  const std::size_t m = grid.size();
  Separation out;
  out.sigma2.assign(m, kNaN);
  out.xi2.assign(m, kNaN);
  out.sigma2_floored.assign(m, 0);
  out.xi2_floored.assign(m, 0);
  for (std::size_t k = 0; k < m; ++k) {
    const double s = s_hat[k];
    if (std::isnan(s)) continue;
    const double v = policy.payload(grid[k]);
    // The split always satisfies sigma2 + nu_K * xi2 = s; a known component
    // larger than s is capped and the other floored at zero.
    switch (policy.kind) {
      case SeparationPolicy::Kind::known_sigma: {
        const double sig = std::min(v, s);
        out.sigma2[k] = sig;
        out.xi2[k] = (s - sig) / nu_K;
        out.xi2_floored[k] = v > s;
        break;
      }
      case SeparationPolicy::Kind::known_xi: {
        const double jump = std::min(nu_K * v, s);
        out.xi2[k] = jump / nu_K;
        out.sigma2[k] = s - jump;
        out.sigma2_floored[k] = nu_K * v > s;
        break;
      }
      case SeparationPolicy::Kind::known_fraction:
        out.sigma2[k] = (1.0 - v) * s;
        out.xi2[k] = v * s / nu_K;
        break;
    }
  }
  return out;
}

CoefficientEstimate estimate_coefficients(const MeanEstimate& mean_est, const CovEstimate& cov_est,
                                          const CoefficientOptions& options) {
  if (mean_est.grid != cov_est.grid) throw PreconditionError("mean and covariance grids differ");
  const auto drift = estimate_drift(mean_est, options.drift_threshold, options.drift_threshold_fraction);
  auto noise = estimate_total_noise(drift, cov_est, options.epsilon);

  CoefficientEstimate est;
  est.grid = mean_est.grid;
  est.mu_hat = drift.mu_hat;
  est.epsilon = options.epsilon;
  est.nu_K = options.nu_K;
  est.drift_threshold = drift.threshold;
  est.policy = options.policy;
  est.source = options.source;
  const std::size_t m = est.grid.size();
  est.flags.assign(m, 0);
  for (std::size_t k = 0; k < m; ++k) {
    std::uint8_t f = 0;
    if (!drift.in_region[k]) f |= kOutsideRegion;
    if (mean_est.flagged[k]) f |= kMeanFlagged;
    if (est.grid[k] > 1.0 - options.epsilon + kGridTolerance) f |= kBeyondTrim;
    if (noise.diag_floored[k]) f |= kDiagFloored;
    if (noise.tri_floored[k]) f |= kTriFloored;
    if (noise.tri_missing[k]) f |= kTriMissing;
    est.flags[k] = f;
  }
  if (options.policy) {
    const auto& s = options.source == SeparationSource::triangular ? noise.s_tri : noise.s_diag;
    auto sep = separate(est.grid, s, *options.policy, options.nu_K);
    for (std::size_t k = 0; k < m; ++k) {
      if (sep.sigma2_floored[k]) est.flags[k] |= kSigmaFloored;
      if (sep.xi2_floored[k]) est.flags[k] |= kXiFloored;
    }
    est.separation = std::move(sep);
  }
  est.s_hat_diag = std::move(noise.s_diag);
  est.s_hat_tri = std::move(noise.s_tri);
  return est;
}

void write_coefficients_csv(std::ostream& out, const CoefficientEstimate& est) {
  out << "t,mu_hat,s_diag,s_tri,sigma2_hat,xi2_hat,flags\n";
  for (std::size_t k = 0; k < est.grid.size(); ++k) {
    const double sig = est.separation ? est.separation->sigma2[k] : std::numeric_limits<double>::quiet_NaN();
    const double xi = est.separation ? est.separation->xi2[k] : std::numeric_limits<double>::quiet_NaN();
    out << csv::format(est.grid[k]) << ',' << csv::format(est.mu_hat[k]) << ','
        << csv::format(est.s_hat_diag[k]) << ',' << csv::format(est.s_hat_tri[k]) << ','
        << csv::format(sig) << ',' << csv::format(xi) << ',' << int(est.flags[k]) << '\n';
  }
}

}  // namespace levyest
