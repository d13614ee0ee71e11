#pragma once

#include "levyest/observations.hpp"

namespace levyest::detail {

// Clamp a rule-of-thumb bandwidth to [3 * median design gap, 0.5].
double clamp_bandwidth(double h, const SparseObservations& obs);

double interpolate_linear(std::span<const double> grid, std::span<const double> values, double t);

}  // namespace levyest::detail
