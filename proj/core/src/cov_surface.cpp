#include "levyest/cov_surface.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "internal.hpp"
#include "levyest/csv.hpp"
#include "levyest/error.hpp"
#include "levyest/local_poly.hpp"
#include "levyest/wls.hpp"

namespace levyest {

CovSmoother::CovSmoother(const SparseObservations& obs, PairOrientation orientation,
                         bool include_diagonal)
    : orientation_(orientation) {
  std::vector<double> a, b, z;
  for (const auto& c : obs.curves()) {
    const std::size_t r = c.t.size();
    for (std::size_t j = 0; j < r; ++j) {
      for (std::size_t k = 0; k < j; ++k) {
        // times are sorted, so T_ik < T_ij
        const double prod = c.y[j] * c.y[k];
        a.push_back(c.t[k]);
        b.push_back(c.t[j]);
        z.push_back(prod);
        if (orientation == PairOrientation::both) {
          a.push_back(c.t[j]);
          b.push_back(c.t[k]);
          z.push_back(prod);
        }
      }
      if (include_diagonal) {
        a.push_back(c.t[j]);
        b.push_back(c.t[j]);
        z.push_back(c.y[j] * c.y[j]);
      }
    }
  }
  std::vector<std::size_t> idx(a.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto x, auto y) { return a[x] < a[y]; });
  a_.resize(idx.size());
  b_.resize(idx.size());
  z_.resize(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    a_[k] = a[idx[k]];
    b_[k] = b[idx[k]];
    z_[k] = z[idx[k]];
  }
}

namespace {

// Monomials x^p y^q with p + q <= d, ordered by total degree so that the
// constant comes first, then x, then y.
std::vector<std::array<int, 2>> monomials(int degree) {
  std::vector<std::array<int, 2>> out;
  for (int total = 0; total <= degree; ++total) {
    for (int q = 0; q <= total; ++q) out.push_back({total - q, q});
  }
  return out;
}

}  // namespace

SurfaceFit CovSmoother::fit_at(double s, double t, const SurfaceOptions& options) const {
  if (!(options.bandwidth > 0.0)) throw PreconditionError("bandwidth must be positive");
  if (options.degree < 1) throw PreconditionError("surface degree must be >= 1");
  const auto mono = monomials(options.degree);
  const std::size_t p = mono.size();
  std::vector<double> row(p);
  std::vector<double> xp(static_cast<std::size_t>(options.degree) + 1);
  std::vector<double> yp(static_cast<std::size_t>(options.degree) + 1);
  double h = options.bandwidth;
  for (int widen = 0; widen <= options.max_widenings; ++widen, h *= options.widen_factor) {
    const auto lo = std::upper_bound(a_.begin(), a_.end(), s - h) - a_.begin();
    const auto hi = std::lower_bound(a_.begin(), a_.end(), s + h) - a_.begin();
    NormalEquations ne(p);
    const double h2 = h * h;
    for (auto k = lo; k < hi; ++k) {
      const double y = (b_[k] - t) / h;
      if (std::abs(y) >= 1.0) continue;
      const double x = (a_[k] - s) / h;
      const double w = options.kernel(x) * options.kernel(y) / h2;
      if (!(w > 0.0)) continue;
      xp[0] = yp[0] = 1.0;
      for (std::size_t e = 1; e < xp.size(); ++e) {
        xp[e] = xp[e - 1] * x;
        yp[e] = yp[e - 1] * y;
      }
      for (std::size_t c = 0; c < p; ++c) row[c] = xp[mono[c][0]] * yp[mono[c][1]];
      ne.add(row, w, z_[k]);
    }
    if (ne.rows_with_weight() < p) continue;
    try {
      const auto sol = ne.solve();
      return {sol.coefficients(0), sol.coefficients(1) / h, sol.coefficients(2) / h, h, widen};
    } catch (const SingularFit&) {
      continue;
    }
  }
  throw SparseWindow(s, "surface window at (" + csv::format(s) + ", " + csv::format(t) +
                            ") has too few pairs after widening");
}

SurfaceFit fit_cov_at(const SparseObservations& obs, double s, double t, int degree, double h,
                      Kernel kernel, PairOrientation orientation) {
  SurfaceOptions opt;
  opt.degree = degree;
  opt.bandwidth = h;
  opt.kernel = kernel;
  return CovSmoother(obs, orientation).fit_at(s, t, opt);
}

DiagFit fit_diag(const CovSmoother& smoother, double t, const SurfaceOptions& options) {
  const double eps = 1e-3 * options.bandwidth;
  const auto centre = smoother.fit_at(t, t, options);
  const double s0 = std::max(0.0, t - eps);
  const double t0 = std::min(1.0, t + eps);
  const auto side = smoother.fit_at(s0, t0, options);
  return {centre.G, side.dsG + side.dtG};
}

DiagFit fit_diag(const SparseObservations& obs, double t, int degree, double h, Kernel kernel,
                 PairOrientation orientation) {
  SurfaceOptions opt;
  opt.degree = degree;
  opt.bandwidth = h;
  opt.kernel = kernel;
  return fit_diag(CovSmoother(obs, orientation), t, opt);
}

CovEstimate fit_cov_grid(const CovSmoother& smoother, std::span<const double> grid,
                         const SurfaceOptions& options) {
  const std::size_t m = grid.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CovEstimate est;
  est.grid.assign(grid.begin(), grid.end());
  est.G_hat.assign(m * m, nan);
  est.dsG_hat.assign(m * m, nan);
  est.dtG_hat.assign(m * m, nan);
  est.flagged.assign(m * m, 1);
  est.D_hat.assign(m, nan);
  est.dD_hat.assign(m, nan);
  est.diag_flagged.assign(m, 1);
  est.degree = options.degree;
  est.bandwidth = options.bandwidth;
  est.epsilon_d = 1e-3 * options.bandwidth;
  est.kernel = options.kernel;
  est.orientation = smoother.orientation();

  std::size_t failures = 0;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a; b < m; ++b) {
      try {
        double G = 0.0, ds = 0.0, dt = 0.0;
        if (a == b) {
          const double t = grid[a];
          G = smoother.fit_at(t, t, options).G;
          const auto side = smoother.fit_at(std::max(0.0, t - est.epsilon_d),
                                            std::min(1.0, t + est.epsilon_d), options);
          ds = side.dsG;
          dt = side.dtG;
          est.D_hat[a] = G;
          est.dD_hat[a] = ds + dt;
          est.diag_flagged[a] = 0;
        } else {
          const auto fit = smoother.fit_at(grid[a], grid[b], options);
          G = fit.G;
          ds = fit.dsG;
          dt = fit.dtG;
        }
        const auto i = est.index(a, b), j = est.index(b, a);
        est.G_hat[i] = est.G_hat[j] = G;
        est.dsG_hat[i] = est.dtG_hat[j] = ds;
        est.dtG_hat[i] = est.dsG_hat[j] = dt;
        est.flagged[i] = est.flagged[j] = 0;
      } catch (const SparseWindow&) {
        ++failures;
      }
    }
  }
  const std::size_t pairs = m * (m + 1) / 2;
  if (5 * failures > pairs) {
    throw EstimationFailed("surface fit failed at " + std::to_string(failures) + " of " +
                           std::to_string(pairs) + " grid pairs");
  }
  return est;
}

CovEstimate fit_cov_grid(const SparseObservations& obs, std::span<const double> grid, int degree,
                         double h, Kernel kernel, PairOrientation orientation) {
  SurfaceOptions opt;
  opt.degree = degree;
  opt.bandwidth = h;
  opt.kernel = kernel;
  return fit_cov_grid(CovSmoother(obs, orientation), grid, opt);
}

double default_bandwidth_cov(const SparseObservations& obs, int degree, double constant) {
  if (obs.n() == 0) throw ValidationError("no observations");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& c : obs.curves()) {
    lo = std::min(lo, c.t.front());
    hi = std::max(hi, c.t.back());
  }
  const double rbar = obs.mean_r();
  const double eff = static_cast<double>(obs.n()) * rbar * rbar;
  const double h = constant * (hi - lo) * std::pow(eff, -1.0 / (2.0 * degree + 4.0));
  return detail::clamp_bandwidth(h, obs);
}

NoiseVariance noise_variance_estimate(const SparseObservations& obs, const CovEstimate& cov,
                                      int degree, double bandwidth) {
  SmootherOptions opt;
  opt.degree = degree;
  opt.bandwidth = bandwidth > 0.0 ? bandwidth : default_bandwidth_mean(obs, degree);
  opt.kernel = cov.kernel;
  const auto squares = fit_mean_curve(MeanSmoother::of_squares(obs), cov.grid, opt);

  std::vector<double> grid, sq, d;
  for (std::size_t k = 0; k < cov.grid.size(); ++k) {
    if (squares.flagged[k] || cov.diag_flagged[k]) continue;
    grid.push_back(cov.grid[k]);
    sq.push_back(squares.m_hat[k]);
    d.push_back(cov.D_hat[k]);
  }
  if (grid.size() < 2) throw EstimationFailed("noise variance: too few usable grid points");
  double acc = 0.0;
  std::size_t count = 0;
  for (const auto& c : obs.curves()) {
    for (double t : c.t) {
      acc += detail::interpolate_linear(grid, sq, t) - detail::interpolate_linear(grid, d, t);
      ++count;
    }
  }
  const double raw = acc / static_cast<double>(count);
  return raw < 0.0 ? NoiseVariance{0.0, true} : NoiseVariance{raw, false};
}

void write_cov_csv(std::ostream& out, const CovEstimate& est) {
  out << "s,t,G_hat,dsG_hat,dtG_hat,flag\n";
  const std::size_t m = est.size();
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a; b < m; ++b) {
      const auto i = est.index(a, b);
      out << csv::format(est.grid[a]) << ',' << csv::format(est.grid[b]) << ','
          << csv::format(est.G_hat[i]) << ',' << csv::format(est.dsG_hat[i]) << ','
          << csv::format(est.dtG_hat[i]) << ',' << int(est.flagged[i]) << '\n';
    }
  }
}

void write_diag_csv(std::ostream& out, const CovEstimate& est) {
  out << "t,D_hat,dD_hat\n";
  for (std::size_t k = 0; k < est.size(); ++k) {
    out << csv::format(est.grid[k]) << ',' << csv::format(est.D_hat[k]) << ','
        << csv::format(est.dD_hat[k]) << '\n';
  }
}

}  // namespace levyest
