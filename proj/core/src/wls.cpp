#include "levyest/wls.hpp"

#include <cmath>
#include <string>

#include "levyest/error.hpp"

namespace levyest {

namespace {

constexpr double kRankTolerance = 1e-12;

}  // namespace

NormalEquations::NormalEquations(std::size_t columns)
    : xtwx_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(columns), static_cast<Eigen::Index>(columns))),
      xtwy_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(columns))) {}

void NormalEquations::add(std::span<const double> basis_row, double weight, double response) {
  if (!(weight > 0.0)) return;
  const auto p = xtwy_.size();
  for (Eigen::Index i = 0; i < p; ++i) {
    const double wi = weight * basis_row[static_cast<std::size_t>(i)];
    xtwy_(i) += wi * response;
    for (Eigen::Index j = 0; j <= i; ++j) xtwx_(i, j) += wi * basis_row[static_cast<std::size_t>(j)];
  }
  ++rows_;
}

WlsResult NormalEquations::solve() const {
  const auto p = xtwy_.size();
  if (rows_ < static_cast<std::size_t>(p)) {
    throw SingularFit("only " + std::to_string(rows_) + " weighted rows for " + std::to_string(p) +
                      " coefficients");
  }
  Eigen::MatrixXd a = xtwx_.selfadjointView<Eigen::Lower>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  if (!(lmax > 0.0) || !(lmin > kRankTolerance * lmax)) {
    throw SingularFit("rank-deficient normal equations");
  }
  WlsResult out;
  out.coefficients = a.ldlt().solve(xtwy_);
  out.condition = lmax / lmin;
  if (!out.coefficients.allFinite()) throw SingularFit("non-finite solution");
  return out;
}

WlsResult solve_wls(const Eigen::MatrixXd& basis, std::span<const double> weights,
                    std::span<const double> responses) {
  const auto rows = static_cast<std::size_t>(basis.rows());
  if (weights.size() != rows || responses.size() != rows) {
    throw PreconditionError("basis, weights and responses must have the same number of rows");
  }
  NormalEquations ne(static_cast<std::size_t>(basis.cols()));
  std::vector<double> row(static_cast<std::size_t>(basis.cols()));
  for (std::size_t k = 0; k < rows; ++k) {
    if (weights[k] < 0.0 || !std::isfinite(weights[k])) {
      throw PreconditionError("weights must be finite and non-negative");
    }
    for (Eigen::Index j = 0; j < basis.cols(); ++j) row[static_cast<std::size_t>(j)] = basis(static_cast<Eigen::Index>(k), j);
    ne.add(row, weights[k], responses[k]);
  }
  return ne.solve();
}

}  // namespace levyest
