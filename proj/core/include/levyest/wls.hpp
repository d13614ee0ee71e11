#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace levyest {

struct WlsResult {
  Eigen::VectorXd coefficients;
  double condition = 0.0;  // ratio of extreme eigenvalues of the normal matrix
};

/// Accumulates X'WX and X'Wy one row at a time.
class NormalEquations {
 public:
  explicit NormalEquations(std::size_t columns);

  void add(std::span<const double> basis_row, double weight, double response);
  std::size_t rows_with_weight() const noexcept { return rows_; }

  /// Throws SingularFit when the normal matrix is (numerically) rank deficient.
  WlsResult solve() const;

 private:
  Eigen::MatrixXd xtwx_;
  Eigen::VectorXd xtwy_;
  std::size_t rows_ = 0;
};

/// argmin_b sum_k w_k (y_k - basis_k . b)^2
WlsResult solve_wls(const Eigen::MatrixXd& basis, std::span<const double> weights,
                    std::span<const double> responses);

}  // namespace levyest
