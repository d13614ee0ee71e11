#include "levyest/time_function.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "levyest/error.hpp"

namespace levyest {

namespace {

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

TimeFunction::TimeFunction() : TimeFunction("0", [](double) { return 0.0; }) {}

TimeFunction::TimeFunction(std::string label, std::function<double(double)> fn)
    : label_(std::move(label)),
      fn_(std::make_shared<const std::function<double(double)>>(std::move(fn))) {}

TimeFunction TimeFunction::constant(double value) {
  return TimeFunction(num(value), [value](double) { return value; });
}

TimeFunction TimeFunction::sine(double offset, double amplitude, double frequency, double phase) {
  std::string label = num(offset) + "+" + num(amplitude) + "*sin(" + num(frequency) + "*t+" +
                      num(phase) + ")";
  return TimeFunction(std::move(label), [=](double t) {
    return offset + amplitude * std::sin(frequency * t + phase);
  });
}

TimeFunction TimeFunction::table(double t0, double t1, std::vector<double> values) {
  if (values.size() < 2) throw ValidationError("table needs at least two values");
  if (!(t1 > t0)) throw ValidationError("table requires t1 > t0");
  std::string label = "table[" + num(t0) + "," + num(t1) + "," + std::to_string(values.size()) + "]";
  auto shared = std::make_shared<const std::vector<double>>(std::move(values));
  return TimeFunction(std::move(label), [shared, t0, t1](double t) {
    const auto& v = *shared;
    const double h = (t1 - t0) / static_cast<double>(v.size() - 1);
    if (t <= t0) return v.front();
    if (t >= t1) return v.back();
    const double x = (t - t0) / h;
    const auto k = std::min(static_cast<std::size_t>(x), v.size() - 2);
    const double w = x - static_cast<double>(k);
    return (1.0 - w) * v[k] + w * v[k + 1];
  });
}

TimeFunction TimeFunction::custom(std::string label, std::function<double(double)> fn) {
  return TimeFunction(std::move(label), std::move(fn));
}

TimeFunction TimeFunction::rescaled(double t0, double span, double value_scale) const {
  auto inner = fn_;
  std::string label = num(value_scale) + "*[" + label_ + "](" + num(t0) + "+" + num(span) + "*u)";
  return TimeFunction(std::move(label), [inner, t0, span, value_scale](double u) {
    return value_scale * (*inner)(t0 + span * u);
  });
}

TimeFunction TimeFunction::scaled(double factor) const { return rescaled(0.0, 1.0, factor); }

void CoefficientSet::validate(std::span<const double> grid) const {
  std::vector<double> s2(grid.size()), x2(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    const double a = mu(t), b = sigma(t), c = xi(t);
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c)) {
      throw ValidationError("coefficient set '" + id + "' is not finite at t=" + num(t));
    }
    s2[k] = b * b;
    x2[k] = c * c;
  }
  if (grid.size() >= 2) {
    if (!std::isfinite(trapezoid(grid, s2)) || !std::isfinite(trapezoid(grid, x2))) {
      throw ValidationError("coefficient set '" + id + "' is not square integrable");
    }
  }
}

CoefficientSet supplement_coefficients() {
  CoefficientSet c;
  c.mu = TimeFunction::sine(-2.0, -1.0, 1.0);
  c.sigma = TimeFunction::sine(0.0, 0.5, 1.0);
  c.xi = TimeFunction::sine(0.0, 1.0, 1.0);
  c.id = "supplement";
  return c;
}

UnitTimeModel rescale_to_unit(const CoefficientSet& coeffs, double nu_K, double t0, double t1) {
  if (!(t1 > t0)) throw ValidationError("time span must satisfy t1 > t0");
  const double span = t1 - t0;
  UnitTimeModel out;
  out.coeffs.mu = coeffs.mu.rescaled(t0, span, span);
  out.coeffs.sigma = coeffs.sigma.rescaled(t0, span, std::sqrt(span));
  out.coeffs.xi = coeffs.xi.rescaled(t0, span, 1.0);
  out.coeffs.id = coeffs.id + "@unit[" + num(t0) + "," + num(t1) + "]";
  out.nu_K = nu_K * span;
  return out;
}

double trapezoid(std::span<const double> grid, std::span<const double> values) {
  double acc = 0.0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    acc += 0.5 * (grid[k] - grid[k - 1]) * (values[k] + values[k - 1]);
  }
  return acc;
}

std::vector<double> uniform_grid(double a, double b, std::size_t points) {
  if (points < 2) throw ValidationError("a grid needs at least two points");
  std::vector<double> g(points);
  const double h = (b - a) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) g[k] = a + h * static_cast<double>(k);
  g.back() = b;
  return g;
}

}  // namespace levyest
