#include "levyest/local_poly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "levyest/csv.hpp"
#include "levyest/error.hpp"
#include "levyest/wls.hpp"
#include "internal.hpp"

namespace levyest {

MeanSmoother::MeanSmoother(std::span<const double> t, std::span<const double> y)
    : t_(t.begin(), t.end()), y_(y.begin(), y.end()) {
  if (t_.size() != y_.size()) throw PreconditionError("t and y differ in length");
  sort_pooled();
}

MeanSmoother::MeanSmoother(const SparseObservations& obs) {
  t_.reserve(obs.total());
  y_.reserve(obs.total());
  for (const auto& c : obs.curves()) {
    t_.insert(t_.end(), c.t.begin(), c.t.end());
    y_.insert(y_.end(), c.y.begin(), c.y.end());
  }
  sort_pooled();
}

MeanSmoother MeanSmoother::of_squares(const SparseObservations& obs) {
  MeanSmoother s(obs);
  for (auto& v : s.y_) v *= v;
  return s;
}

void MeanSmoother::sort_pooled() {
  std::vector<std::size_t> idx(t_.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return t_[a] < t_[b]; });
  std::vector<double> t(t_.size()), y(y_.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    t[k] = t_[idx[k]];
    y[k] = y_[idx[k]];
  }
  t_ = std::move(t);
  y_ = std::move(y);
}

LocalFit MeanSmoother::fit_at(double t, const SmootherOptions& options) const {
  if (!(options.bandwidth > 0.0)) throw PreconditionError("bandwidth must be positive");
  if (options.degree < 1) throw PreconditionError("local polynomial degree must be >= 1");
  const auto p = static_cast<std::size_t>(options.degree) + 1;
  std::vector<double> row(p);
  double h = options.bandwidth;
  for (int widen = 0; widen <= options.max_widenings; ++widen, h *= options.widen_factor) {
    const auto lo = std::upper_bound(t_.begin(), t_.end(), t - h) - t_.begin();
    const auto hi = std::lower_bound(t_.begin(), t_.end(), t + h) - t_.begin();
    std::size_t distinct = 0;
    for (auto k = lo; k < hi; ++k) {
      if ((k == lo || t_[k] != t_[k - 1]) && options.kernel((t_[k] - t) / h) > 0.0) ++distinct;
    }
    if (distinct < p) continue;
    NormalEquations ne(p);
    for (auto k = lo; k < hi; ++k) {
      const double x = (t_[k] - t) / h;
      const double w = options.kernel(x) / h;
      double pw = 1.0;
      for (std::size_t l = 0; l < p; ++l, pw *= x) row[l] = pw;
      ne.add(row, w, y_[k]);
    }
    try {
      const auto sol = ne.solve();
      return {sol.coefficients(0), sol.coefficients(1) / h, h, widen, sol.condition};
    } catch (const SingularFit&) {
      continue;
    }
  }
  throw SparseWindow(t, "fewer than " + std::to_string(p) + " distinct design points after widening");
}

std::size_t MeanEstimate::flagged_count() const {
  return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), std::uint8_t{1}));
}

LocalFit fit_mean_at(const SparseObservations& obs, double t, int degree, double h, Kernel kernel) {
  SmootherOptions opt;
  opt.degree = degree;
  opt.bandwidth = h;
  opt.kernel = kernel;
  return MeanSmoother(obs).fit_at(t, opt);
}

MeanEstimate fit_mean_curve(const MeanSmoother& smoother, std::span<const double> grid,
                            const SmootherOptions& options) {
  MeanEstimate est;
  est.grid.assign(grid.begin(), grid.end());
  est.degree = options.degree;
  est.bandwidth = options.bandwidth;
  est.kernel = options.kernel;
  const std::size_t m = grid.size();
  est.m_hat.assign(m, std::numeric_limits<double>::quiet_NaN());
  est.dm_hat.assign(m, std::numeric_limits<double>::quiet_NaN());
  est.flagged.assign(m, 0);
  for (std::size_t k = 0; k < m; ++k) {
    try {
      const auto fit = smoother.fit_at(grid[k], options);
      est.m_hat[k] = fit.value;
      est.dm_hat[k] = fit.slope;
    } catch (const SparseWindow&) {
      est.flagged[k] = 1;
    }
  }
  if (5 * est.flagged_count() > m) {
    throw EstimationFailed("mean fit failed at " + std::to_string(est.flagged_count()) + " of " +
                           std::to_string(m) + " grid points");
  }
  return est;
}

MeanEstimate fit_mean_curve(const SparseObservations& obs, std::span<const double> grid, int degree,
                            double h, Kernel kernel) {
  SmootherOptions opt;
  opt.degree = degree;
  opt.bandwidth = h;
  opt.kernel = kernel;
  return fit_mean_curve(MeanSmoother(obs), grid, opt);
}

namespace {

std::vector<double> pooled_sorted_times(const SparseObservations& obs) {
  std::vector<double> t;
  t.reserve(obs.total());
  for (const auto& c : obs.curves()) t.insert(t.end(), c.t.begin(), c.t.end());
  std::sort(t.begin(), t.end());
  return t;
}

}  // namespace

double median_design_gap(const SparseObservations& obs) {
  auto t = pooled_sorted_times(obs);
  t.erase(std::unique(t.begin(), t.end()), t.end());
  if (t.size() < 2) return 1.0;
  std::vector<double> gaps(t.size() - 1);
  for (std::size_t k = 1; k < t.size(); ++k) gaps[k - 1] = t[k] - t[k - 1];
  const auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
  std::nth_element(gaps.begin(), mid, gaps.end());
  if (gaps.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(gaps.begin(), mid);
  return 0.5 * (lower + upper);
}

namespace detail {

double clamp_bandwidth(double h, const SparseObservations& obs) {
  const double lower = 3.0 * median_design_gap(obs);
  return std::min(std::max(h, lower), 0.5);
}

}  // namespace detail

double default_bandwidth_mean(const SparseObservations& obs, int degree, double constant) {
  if (obs.n() == 0) throw ValidationError("no observations");
  const auto t = pooled_sorted_times(obs);
  const double range = t.back() - t.front();
  const double N = static_cast<double>(obs.total());
  const double h = constant * range * std::pow(N, -1.0 / (2.0 * degree + 3.0));
  return detail::clamp_bandwidth(h, obs);
}

void write_mean_csv(std::ostream& out, const MeanEstimate& est) {
  out << "t,m_hat,dm_hat,flag\n";
  for (std::size_t k = 0; k < est.grid.size(); ++k) {
    out << csv::format(est.grid[k]) << ',' << csv::format(est.m_hat[k]) << ','
        << csv::format(est.dm_hat[k]) << ',' << int(est.flagged[k]) << '\n';
  }
}

}  // namespace levyest

namespace levyest::detail {

double interpolate_linear(std::span<const double> grid, std::span<const double> values, double t) {
  if (t <= grid.front()) return values.front();
  if (t >= grid.back()) return values.back();
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  const auto k = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double w = (t - grid[k]) / (grid[k + 1] - grid[k]);
  return (1.0 - w) * values[k] + w * values[k + 1];
}

}  // namespace levyest::detail
