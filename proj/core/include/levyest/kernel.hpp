#pragma once

#include <string>
#include <string_view>

namespace levyest {

/// Symmetric kernel supported on [-1, 1], integrating to one.
class Kernel {
 public:
  enum class Family { epanechnikov, gaussian_truncated };

  constexpr Kernel() = default;
  explicit constexpr Kernel(Family family) : family_(family) {}

  static Kernel from_name(std::string_view name);

  Family family() const noexcept { return family_; }
  std::string name() const;

  double operator()(double u) const noexcept;
  /// K(u / h) / h
  double scaled(double u, double h) const noexcept { return (*this)(u / h) / h; }

 private:
  Family family_ = Family::epanechnikov;
};

}  // namespace levyest
