#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "levyest/error.hpp"
#include "levyest/harness.hpp"
#include "levyest/kernel.hpp"
#include "levyest/local_poly.hpp"
#include "levyest/moment_oracle.hpp"
#include "levyest/wls.hpp"

using namespace levyest;

namespace {

// n curves of r sorted uniform times with y = f(t) exactly.
SparseObservations exact_curves(std::size_t n, std::size_t r, double (*f)(double), std::uint64_t seed) {
  std::mt19937_64 e(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Curve> curves;
  for (std::size_t i = 0; i < n; ++i) {
    Curve c;
    c.id = std::to_string(i);
    for (std::size_t j = 0; j < r; ++j) c.t.push_back(u(e));
    std::sort(c.t.begin(), c.t.end());
    for (double t : c.t) c.y.push_back(f(t));
    curves.push_back(std::move(c));
  }
  return SparseObservations(std::move(curves));
}

double line(double t) { return 2.0 + 3.0 * (t - 0.4); }
double quad(double t) { return 1.0 + t + t * t; }

}  // namespace

TEST(Kernel, IntegratesToOneSymmetricNonNegative) {
  for (auto fam : {Kernel::Family::epanechnikov, Kernel::Family::gaussian_truncated}) {
    const Kernel k(fam);
    const int steps = 200000;
    double acc = 0.0;
    for (int j = 0; j < steps; ++j) acc += k(-1.0 + (j + 0.5) * 2.0 / steps);
    EXPECT_NEAR(acc * 2.0 / steps, 1.0, 1e-6) << k.name();
    for (double u : {0.1, 0.5, 0.99}) {
      EXPECT_EQ(k(u), k(-u));
      EXPECT_GE(k(u), 0.0);
    }
    EXPECT_EQ(k(1.0), 0.0);
    EXPECT_EQ(k(-1.5), 0.0);
  }
  EXPECT_EQ(Kernel::from_name("gaussian-truncated").family(), Kernel::Family::gaussian_truncated);
  EXPECT_THROW(Kernel::from_name("box"), Error);
}

TEST(Wls, WeightedMean) {
  Eigen::MatrixXd x(2, 1);
  x << 1, 1;
  const std::vector<double> w{1, 1}, y{2, 4};
  EXPECT_NEAR(solve_wls(x, w, y).coefficients(0), 3.0, 1e-15);
}

TEST(Wls, MatchesHandSolvedNormalEquations) {
  const std::vector<double> t{0, 1, 2, 3, 4}, w{1, 2, 3, 2, 1}, y{1.0, 2.5, 2.0, 4.5, 5.0};
  Eigen::MatrixXd x(5, 2);
  for (int k = 0; k < 5; ++k) x.row(k) << 1.0, t[k];
  // [S0 S1; S1 S2] b = [T0; T1] by Cramer's rule
  double S0 = 0, S1 = 0, S2 = 0, T0 = 0, T1 = 0;
  for (int k = 0; k < 5; ++k) {
    S0 += w[k];
    S1 += w[k] * t[k];
    S2 += w[k] * t[k] * t[k];
    T0 += w[k] * y[k];
    T1 += w[k] * t[k] * y[k];
  }
  const double det = S0 * S2 - S1 * S1;
  const auto b = solve_wls(x, w, y).coefficients;
  EXPECT_NEAR(b(0), (T0 * S2 - S1 * T1) / det, 1e-12);
  EXPECT_NEAR(b(1), (S0 * T1 - S1 * T0) / det, 1e-12);
}

TEST(Wls, ZeroWeightsAreSingular) {
  Eigen::MatrixXd x(3, 2);
  x << 1, 0, 1, 1, 1, 2;
  const std::vector<double> w{0, 0, 0}, y{1, 2, 3};
  EXPECT_THROW(solve_wls(x, w, y), SingularFit);
  const std::vector<double> same{1, 1, 1};
  Eigen::MatrixXd collinear(3, 2);
  collinear << 1, 2, 1, 2, 1, 2;
  EXPECT_THROW(solve_wls(collinear, same, y), SingularFit);
  const std::vector<double> negative{1, -1, 1};
  EXPECT_THROW(solve_wls(x, negative, y), PreconditionError);
}

TEST(FitMeanAt, ReproducesLine) {
  const auto obs = exact_curves(30, 5, line, 1);
  for (int d : {1, 2}) {
    const auto fit = fit_mean_at(obs, 0.4, d, 0.2);
    EXPECT_NEAR(fit.value, 2.0, 1e-10);
    EXPECT_NEAR(fit.slope, 3.0, 1e-10);
  }
}

TEST(FitMeanAt, ReproducesQuadratic) {
  const auto obs = exact_curves(40, 5, quad, 2);
  for (double t0 : {0.0, 0.3, 0.77, 1.0}) {
    const auto fit = fit_mean_at(obs, t0, 2, 0.15);
    EXPECT_NEAR(fit.value, 1.0 + t0 + t0 * t0, 1e-10);
    EXPECT_NEAR(fit.slope, 1.0 + 2.0 * t0, 1e-10);
  }
}

TEST(FitMeanAt, WidensThenFails) {
  const std::vector<double> t{0.1, 0.2, 0.9}, y{1, 2, 3};
  const MeanSmoother s(t, y);
  SmootherOptions opt;
  opt.degree = 1;
  opt.bandwidth = 0.06;
  const auto fit = s.fit_at(0.15, opt);
  EXPECT_EQ(fit.widenings, 0);
  const auto wide = s.fit_at(0.5, opt);
  EXPECT_EQ(wide.widenings, 5);
  EXPECT_NEAR(wide.bandwidth, 0.06 * std::pow(1.5, 5), 1e-15);
  opt.degree = 2;
  opt.bandwidth = 0.01;
  EXPECT_THROW(s.fit_at(0.5, opt), SparseWindow);
}

TEST(FitMeanAt, KernelLocality) {
  auto obs = exact_curves(50, 6, quad, 3);
  std::vector<double> t, y, tn, yn;
  for (const auto& c : obs.curves()) {
    for (std::size_t j = 0; j < c.t.size(); ++j) {
      const double noisy = c.y[j] + std::sin(40.0 * c.t[j]);
      t.push_back(c.t[j]);
      y.push_back(noisy);
      if (std::abs(c.t[j] - 0.5) < 0.1) {
        tn.push_back(c.t[j]);
        yn.push_back(noisy);
      }
    }
  }
  SmootherOptions opt;
  opt.bandwidth = 0.1;
  const auto all = MeanSmoother(t, y).fit_at(0.5, opt);
  const auto local = MeanSmoother(tn, yn).fit_at(0.5, opt);
  EXPECT_NEAR(all.value, local.value, 1e-12);
  EXPECT_NEAR(all.slope, local.slope, 1e-10);
}

TEST(FitMeanAt, AffineEquivariance) {
  std::mt19937_64 e(4);
  std::normal_distribution<double> nd;
  std::vector<double> t, y, scaled, shifted;
  for (int k = 0; k < 300; ++k) {
    t.push_back((k + 0.5) / 300.0);
    y.push_back(std::cos(3 * t.back()) + 0.3 * nd(e));
    scaled.push_back(2.5 * y.back());
    shifted.push_back(y.back() + 4.0);
  }
  SmootherOptions opt;
  opt.bandwidth = 0.12;
  const auto base = MeanSmoother(t, y).fit_at(0.3, opt);
  const auto sc = MeanSmoother(t, scaled).fit_at(0.3, opt);
  const auto sh = MeanSmoother(t, shifted).fit_at(0.3, opt);
  EXPECT_NEAR(sc.value, 2.5 * base.value, 1e-10);
  EXPECT_NEAR(sc.slope, 2.5 * base.slope, 1e-9);
  EXPECT_NEAR(sh.value, base.value + 4.0, 1e-10);
  EXPECT_NEAR(sh.slope, base.slope, 1e-9);
}

TEST(FitMeanCurve, NoiselessLineEverywhereAndDeterministic) {
  const auto obs = exact_curves(20, 4, line, 5);
  const auto grid = uniform_grid(0.0, 1.0, 21);
  const auto a = fit_mean_curve(obs, grid, 2, 0.2);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    EXPECT_NEAR(a.m_hat[k], line(grid[k]), 1e-10);
    EXPECT_NEAR(a.dm_hat[k], 3.0, 1e-9);
  }
  const auto b = fit_mean_curve(obs, grid, 2, 0.2);
  EXPECT_EQ(a.m_hat, b.m_hat);
  EXPECT_EQ(a.dm_hat, b.dm_hat);
}

TEST(FitMeanCurve, DefaultBandwidthLeavesNoFlags) {
  ExperimentConfig cfg = parse_config(R"({"schema_version":1,"design":{"n":100,"r":5,"noise_sd":0.1}})");
  const auto obs = simulate_observations(cfg, 100, 7);
  const auto est = fit_mean_curve(obs, uniform_grid(0.0, 1.0, 101), 2, default_bandwidth_mean(obs, 2));
  EXPECT_EQ(est.flagged_count(), 0u);
}

TEST(FitMeanCurve, TooManyFailuresThrow) {
  const std::vector<double> t{0.1, 0.11, 0.12}, y{1, 2, 3};
  const MeanSmoother s(t, y);
  SmootherOptions opt;
  opt.degree = 2;
  opt.bandwidth = 0.02;
  opt.max_widenings = 0;
  EXPECT_THROW(fit_mean_curve(s, uniform_grid(0.0, 1.0, 11), opt), EstimationFailed);
}

TEST(DefaultBandwidthMean, FormulaClampAndMonotone) {
  // 100 curves x 10 equally spaced distinct times: N = 1000, range = 0.98
  std::vector<Curve> curves;
  for (int i = 0; i < 100; ++i) {
    Curve c;
    c.id = std::to_string(i);
    for (int j = 0; j < 10; ++j) {
      c.t.push_back(0.01 + 0.098 * j + 0.0009 * i);
      c.y.push_back(1.0);
    }
    curves.push_back(std::move(c));
  }
  const SparseObservations obs(curves);
  const double range = obs.curve(99).t.back() - obs.curve(0).t.front();
  EXPECT_NEAR(default_bandwidth_mean(obs, 2), range * std::pow(1000.0, -1.0 / 7.0), 1e-12);
  EXPECT_NEAR(std::pow(1000.0, -1.0 / 7.0), 0.373, 1e-3);

  const SparseObservations two({{"a", {0.0, 1.0}, {1, 1}}, {"b", {0.0, 1.0}, {1, 1}}});
  EXPECT_DOUBLE_EQ(default_bandwidth_mean(two, 2), 0.5);

  auto doubled = curves;
  for (auto c : curves) {
    c.id += "b";
    for (auto& t : c.t) t += 0.00045;
    doubled.push_back(std::move(c));
  }
  EXPECT_LT(default_bandwidth_mean(SparseObservations(doubled), 2), default_bandwidth_mean(obs, 2));
}

TEST(FitMeanCurve, SupErrorShrinksWithN) {
  ExperimentConfig cfg = parse_config(R"({"schema_version":1,"design":{"r":10,"noise_sd":0.1}})");
  const auto unit = unit_model(cfg.model);
  const MomentSolution oracle(unit.coeffs, unit.nu_K, 1.0, 1.0);
  const auto grid = uniform_grid(0.0, 1.0, 51);
  auto median_sup = [&](std::size_t n) {
    std::vector<double> sups;
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto obs = simulate_observations(cfg, n, 1000 + s);
      const auto est = fit_mean_curve(obs, grid, 2, 0.1);
      double sup = 0.0;
      for (std::size_t k = 0; k < grid.size(); ++k) sup = std::max(sup, std::abs(est.m_hat[k] - oracle.m_at(grid[k])));
      sups.push_back(sup);
    }
    std::nth_element(sups.begin(), sups.begin() + 10, sups.end());
    return sups[10];
  };
  EXPECT_LT(median_sup(200), median_sup(50));
}

TEST(MeanCsv, Header) {
  const auto obs = exact_curves(10, 5, line, 6);
  std::ostringstream out;
  write_mean_csv(out, fit_mean_curve(obs, uniform_grid(0.0, 1.0, 3), 1, 0.3));
  EXPECT_EQ(out.str().substr(0, 19), "t,m_hat,dm_hat,flag");
}
