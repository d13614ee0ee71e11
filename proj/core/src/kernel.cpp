#include "levyest/kernel.hpp"

#include <cmath>

#include "levyest/error.hpp"

namespace levyest {

namespace {

// exp(-u^2 / (2 * (1/3)^2)) truncated at |u| = 1 (three standard deviations)
const double kGaussNorm = std::sqrt(2.0 * M_PI) / 3.0 * std::erf(3.0 / std::sqrt(2.0));

}  // namespace

Kernel Kernel::from_name(std::string_view name) {
  if (name == "epanechnikov") return Kernel(Family::epanechnikov);
  if (name == "gaussian-truncated") return Kernel(Family::gaussian_truncated);
  throw ConfigError("unknown kernel '" + std::string(name) + "'");
}

std::string Kernel::name() const {
  return family_ == Family::epanechnikov ? "epanechnikov" : "gaussian-truncated";
}

double Kernel::operator()(double u) const noexcept {
  const double a = std::abs(u);
  if (a >= 1.0) return 0.0;
  if (family_ == Family::epanechnikov) return 0.75 * (1.0 - u * u);
  return std::exp(-4.5 * u * u) / kGaussNorm;
}

}  // namespace levyest
