#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace levyest {

/// A deterministic real function of time. Cheap to copy; the underlying
/// callable is shared.
class TimeFunction {
 public:
  TimeFunction();  // identically zero

  static TimeFunction constant(double value);
  /// offset + amplitude * sin(frequency * t + phase)
  static TimeFunction sine(double offset, double amplitude, double frequency, double phase = 0.0);
  /// Values on the uniform grid t0, t0 + h, ..., t1 with linear interpolation.
  /// Outside [t0, t1] the end values are held.
  static TimeFunction table(double t0, double t1, std::vector<double> values);
  static TimeFunction custom(std::string label, std::function<double(double)> fn);

  double operator()(double t) const { return (*fn_)(t); }
  const std::string& label() const noexcept { return label_; }

  /// u -> value_scale * f(t0 + span * u)
  TimeFunction rescaled(double t0, double span, double value_scale) const;
  TimeFunction scaled(double factor) const;

 private:
  TimeFunction(std::string label, std::function<double(double)> fn);

  std::string label_;
  std::shared_ptr<const std::function<double(double)>> fn_;
};

/// Drift mu(t), diffusion sigma(t) and jump amplitude xi(t) of
/// dX = mu X dt + sigma dW + xi dN~.
struct CoefficientSet {
  TimeFunction mu;
  TimeFunction sigma;
  TimeFunction xi;
  std::string id = "custom";

  /// Finite values at every grid point and finite trapezoid integrals of
  /// sigma^2 and xi^2. Throws ValidationError otherwise.
  void validate(std::span<const double> grid) const;
};

/// The drift/diffusion/jump model of the supplement-style simulation study:
/// mu = -(2 + sin t), sigma = sin(t)/2, xi = sin t.
CoefficientSet supplement_coefficients();

struct UnitTimeModel {
  CoefficientSet coeffs;
  double nu_K = 1.0;
};

/// Map a model on [t0, t1] to unit time u = (t - t0) / T, T = t1 - t0.
/// X(t0 + T u) solves dX = T mu X du + sqrt(T) sigma dW_u + xi dN~_u where
/// the jump intensity becomes T * nu_K.
UnitTimeModel rescale_to_unit(const CoefficientSet& coeffs, double nu_K, double t0, double t1);

/// Composite trapezoid of f over an increasing grid.
double trapezoid(std::span<const double> grid, std::span<const double> values);

std::vector<double> uniform_grid(double a, double b, std::size_t points);

}  // namespace levyest
