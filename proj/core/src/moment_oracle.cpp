#include "levyest/moment_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "levyest/csv.hpp"
#include "levyest/error.hpp"

namespace levyest {

namespace {

constexpr int kSubsteps = 16;

double q_of(const CoefficientSet& c, double nu_K, double t) {
  const double s = c.sigma(t);
  const double x = c.xi(t);
  return s * s + nu_K * x * x;
}

}  // namespace

std::vector<double> solve_mean(const TimeFunction& mu, double m0, std::span<const double> grid) {
  std::vector<double> m(grid.size());
  if (grid.empty()) return m;
  double M = 0.0;
  double prev = mu(grid[0]);
  m[0] = m0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double cur = mu(grid[k]);
    M += 0.5 * (grid[k] - grid[k - 1]) * (prev + cur);
    prev = cur;
    m[k] = m0 * std::exp(M);
  }
  return m;
}

std::vector<double> solve_second_moment(const TimeFunction& mu, const TimeFunction& sigma,
                                        const TimeFunction& xi, double nu_K, double D0,
                                        std::span<const double> grid) {
  std::vector<double> D(grid.size());
  if (grid.empty()) return D;
  auto q = [&](double t) {
    const double s = sigma(t), x = xi(t);
    return s * s + nu_K * x * x;
  };
  D[0] = D0;
  double mu_prev = mu(grid[0]);
  double q_prev = q(grid[0]);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double h = grid[k] - grid[k - 1];
    const double mu_cur = mu(grid[k]);
    const double q_cur = q(grid[k]);
    const double growth = std::exp(h * (mu_prev + mu_cur));  // exp(2 dM)
    D[k] = growth * D[k - 1] + 0.5 * h * (growth * q_prev + q_cur);
    mu_prev = mu_cur;
    q_prev = q_cur;
  }
  return D;
}

MomentSolution::MomentSolution(CoefficientSet coeffs, double nu_K, double m0, double D0,
                               double t_end, double step)
    : coeffs_(std::move(coeffs)), nu_K_(nu_K), m0_(m0), D0_(D0), step_(step) {
  if (!(t_end > 0.0) || !(step > 0.0) || step > t_end) {
    throw PreconditionError("oracle needs 0 < step <= t_end");
  }
  if (!(nu_K >= 0.0)) throw PreconditionError("nu_K must be non-negative");
  if (D0 < m0 * m0 - 1e-12) throw PreconditionError("D0 must be at least m0^2");
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / step - 1e-9));
  grid_ = uniform_grid(0.0, t_end, steps + 1);
  step_ = t_end / static_cast<double>(steps);
  coeffs_.validate(grid_);
  M_.assign(grid_.size(), 0.0);
  for (std::size_t k = 1; k < grid_.size(); ++k) {
    M_[k] = M_[k - 1] + 0.5 * step_ * (coeffs_.mu(grid_[k - 1]) + coeffs_.mu(grid_[k]));
  }
  m_ = solve_mean(coeffs_.mu, m0, grid_);
  D_ = solve_second_moment(coeffs_.mu, coeffs_.sigma, coeffs_.xi, nu_K, D0, grid_);
}

std::size_t MomentSolution::node_below(double t) const {
  if (t <= grid_.front()) return 0;
  const auto k = static_cast<std::size_t>(std::floor(t / step_));
  return std::min(k, grid_.size() - 1);
}

double MomentSolution::M_at(double t) const {
  const std::size_t k = node_below(t);
  const double span = t - grid_[k];
  if (span == 0.0) return M_[k];
  const int sub = std::max(kSubsteps, static_cast<int>(std::ceil(std::abs(span) / step_)) * kSubsteps);
  const double h = span / sub;
  double acc = 0.0;
  double prev = coeffs_.mu(grid_[k]);
  for (int j = 1; j <= sub; ++j) {
    const double cur = coeffs_.mu(grid_[k] + j * h);
    acc += 0.5 * h * (prev + cur);
    prev = cur;
  }
  return M_[k] + acc;
}

double MomentSolution::m_at(double t) const { return m0_ * std::exp(M_at(t)); }

double MomentSolution::D_at(double t) const {
  const std::size_t k = node_below(t);
  const double span = t - grid_[k];
  if (span == 0.0) return D_[k];
  const int sub = std::max(kSubsteps, static_cast<int>(std::ceil(std::abs(span) / step_)) * kSubsteps);
  const double h = span / sub;
  double D = D_[k];
  double tau = grid_[k];
  double mu_prev = coeffs_.mu(tau);
  double q_prev = q_of(coeffs_, nu_K_, tau);
  for (int j = 1; j <= sub; ++j) {
    tau = grid_[k] + j * h;
    const double mu_cur = coeffs_.mu(tau);
    const double q_cur = q_of(coeffs_, nu_K_, tau);
    const double growth = std::exp(h * (mu_prev + mu_cur));
    D = growth * D + 0.5 * h * (growth * q_prev + q_cur);
    mu_prev = mu_cur;
    q_prev = q_cur;
  }
  return D;
}

double MomentSolution::noise_sum(double t) const { return q_of(coeffs_, nu_K_, t); }

namespace {

double extension(const MomentSolution& sol, double s, double t) {
  return std::exp(sol.M_at(t) - sol.M_at(s)) * sol.D_at(s);
}

}  // namespace

double cov_value(const MomentSolution& sol, double s, double t) {
  if (s > t + 1e-12 || s < -1e-12 || t > sol.t_end() + 1e-12) {
    throw PreconditionError("cov_value needs 0 <= s <= t <= t_end");
  }
  if (s == t) return sol.D_at(t);
  return extension(sol, s, t);
}

double cov_ds(const MomentSolution& sol, double s, double t, double fd_step) {
  return (extension(sol, s + fd_step, t) - extension(sol, s - fd_step, t)) / (2.0 * fd_step);
}

double cov_dt(const MomentSolution& sol, double s, double t, double fd_step) {
  return (extension(sol, s, t + fd_step) - extension(sol, s, t - fd_step)) / (2.0 * fd_step);
}

double diagonal_identity(const MomentSolution& sol, double t, double fd_step) {
  const double dD = (sol.D_at(t + fd_step) - sol.D_at(t - fd_step)) / (2.0 * fd_step);
  return dD - 2.0 * sol.coeffs().mu(t) * sol.D_at(t);
}

double triangular_identity(const MomentSolution& sol, double s, double t, double fd_step) {
  const double factor = std::exp(sol.M_at(s) - sol.M_at(t));
  return factor * cov_ds(sol, s, t, fd_step) - sol.coeffs().mu(s) * sol.D_at(s);
}

double H_value(const MomentSolution& sol, double t, double fd_step) {
  const double end = sol.t_end();
  if (t < 0.0 || t > end) throw PreconditionError("H_value needs 0 <= t <= t_end");
  const double Mt = sol.M_at(t);
  auto integrand = [&](double tau) { return std::exp(Mt - sol.M_at(tau)) * cov_ds(sol, t, tau, fd_step); };
  const double length = end - t;
  double average;
  if (length < 1e-9) {
    average = integrand(t);
  } else {
    const auto intervals = std::max<std::size_t>(
        8, static_cast<std::size_t>(std::ceil(length / (sol.grid()[1] - sol.grid()[0]))));
    const double h = length / static_cast<double>(intervals);
    double acc = 0.5 * (integrand(t) + integrand(end));
    for (std::size_t j = 1; j < intervals; ++j) acc += integrand(t + static_cast<double>(j) * h);
    average = acc * h / length;
  }
  return average - sol.coeffs().mu(t) * sol.D_at(t);
}

IdentityResiduals verify_pde_identity(const MomentSolution& sol, double s, double t, double fd_step) {
  IdentityResiduals r;
  const double G = extension(sol, s, t);
  r.dt_residual = cov_dt(sol, s, t, fd_step) - sol.coeffs().mu(t) * G;
  r.ds_residual = triangular_identity(sol, s, t, fd_step) - sol.noise_sum(s);
  return r;
}

void write_moments_csv(std::ostream& out, const MomentSolution& sol, std::size_t stride) {
  stride = std::max<std::size_t>(stride, 1);
  out << "t,m,D\n";
  const auto& g = sol.grid();
  for (std::size_t k = 0; k < g.size(); k += stride) {
    out << csv::format(g[k]) << ',' << csv::format(sol.m()[k]) << ',' << csv::format(sol.D()[k]) << '\n';
  }
  if ((g.size() - 1) % stride != 0) {
    const std::size_t k = g.size() - 1;
    out << csv::format(g[k]) << ',' << csv::format(sol.m()[k]) << ',' << csv::format(sol.D()[k]) << '\n';
  }
}

void write_G_csv(std::ostream& out, const MomentSolution& sol, std::span<const double> grid) {
  out << "s,t,G\n";
  for (std::size_t a = 0; a < grid.size(); ++a) {
    for (std::size_t b = a; b < grid.size(); ++b) {
      out << csv::format(grid[a]) << ',' << csv::format(grid[b]) << ','
          << csv::format(cov_value(sol, grid[a], grid[b])) << '\n';
    }
  }
}

}  // namespace levyest
