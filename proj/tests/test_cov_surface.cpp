#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "levyest/cov_surface.hpp"
#include "levyest/error.hpp"
#include "levyest/harness.hpp"
#include "levyest/moment_oracle.hpp"

using namespace levyest;

namespace {

std::vector<double> sorted_uniform(std::mt19937_64& e, std::size_t r) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> t(r);
  for (auto& x : t) x = u(e);
  std::sort(t.begin(), t.end());
  return t;
}

SparseObservations curves_of(std::size_t n, std::size_t r, double (*x)(double), double noise, std::uint64_t seed) {
  std::mt19937_64 e(seed);
  std::normal_distribution<double> nd(0.0, noise > 0.0 ? noise : 1.0);
  std::vector<Curve> out;
  for (std::size_t i = 0; i < n; ++i) {
    Curve c{std::to_string(i), sorted_uniform(e, r), {}};
    for (double t : c.t) c.y.push_back(x(t) + (noise > 0.0 ? nd(e) : 0.0));
    out.push_back(std::move(c));
  }
  return SparseObservations(std::move(out));
}

double constant_two(double) { return 2.0; }
double constant_one(double) { return 1.0; }
double decay(double t) { return std::exp(-t); }

}  // namespace

TEST(CovSmoother, PlaneReproduction) {
  // r = 2 curves with Y_1 = 1 make every product equal to Y_2
  const double s = 0.3, t = 0.6;
  std::mt19937_64 e(11);
  std::vector<Curve> curves;
  for (int i = 0; i < 300; ++i) {
    auto times = sorted_uniform(e, 2);
    const double z = 1.0 + 2.0 * (times[0] - s) + 3.0 * (times[1] - t);
    curves.push_back({std::to_string(i), times, {1.0, z}});
  }
  const auto fit = fit_cov_at(SparseObservations(curves), s, t, 1, 0.25);
  EXPECT_NEAR(fit.G, 1.0, 1e-10);
  EXPECT_NEAR(fit.dsG, 2.0, 1e-10);
  EXPECT_NEAR(fit.dtG, 3.0, 1e-10);
}

TEST(CovSmoother, SinglePairIsSparse) {
  const SparseObservations one({{"a", {0.2, 0.7}, {1.0, 2.0}}});
  EXPECT_THROW(fit_cov_at(one, 0.2, 0.7, 1, 0.3), SparseWindow);
}

TEST(CovSmoother, PairCounts) {
  const auto obs = curves_of(5, 4, constant_one, 0.0, 1);
  EXPECT_EQ(CovSmoother(obs).pairs(), 5u * 6u);
  EXPECT_EQ(CovSmoother(obs, PairOrientation::both).pairs(), 5u * 12u);
  EXPECT_EQ(CovSmoother(obs, PairOrientation::upper, true).pairs(), 5u * 10u);
}

TEST(CovSmoother, ConstantPathsGiveSquare) {
  const auto obs = curves_of(60, 6, constant_two, 0.0, 2);
  const auto grid = uniform_grid(0.0, 1.0, 11);
  const auto est = fit_cov_grid(obs, grid, 1, 0.25);
  for (std::size_t a = 0; a < grid.size(); ++a) {
    EXPECT_NEAR(est.D_hat[a], 4.0, 1e-10);
    EXPECT_NEAR(est.dD_hat[a], 0.0, 1e-8);
    for (std::size_t b = a; b < grid.size(); ++b) EXPECT_NEAR(est.G(a, b), 4.0, 1e-10);
  }
  const auto d = fit_diag(obs, 0.5, 1, 0.25);
  EXPECT_NEAR(d.D, 4.0, 1e-10);
  EXPECT_NEAR(d.dD, 0.0, 1e-8);
}

TEST(CovSmoother, BothOrientationIsSymmetric) {
  const auto obs = curves_of(80, 6, decay, 0.3, 3);
  const CovSmoother sm(obs, PairOrientation::both);
  SurfaceOptions opt;
  opt.bandwidth = 0.2;
  const auto st = sm.fit_at(0.3, 0.7, opt);
  const auto ts = sm.fit_at(0.7, 0.3, opt);
  EXPECT_NEAR(st.G, ts.G, 1e-12);
  EXPECT_NEAR(st.dsG, ts.dtG, 1e-10);
  EXPECT_NEAR(st.dtG, ts.dsG, 1e-10);
}

TEST(CovSmoother, ScaleEquivariance) {
  const auto obs = curves_of(80, 6, decay, 0.3, 4);
  auto curves = obs.curves();
  for (auto& c : curves) {
    for (auto& y : c.y) y *= -1.7;
  }
  const SparseObservations scaled(curves);
  const auto grid = uniform_grid(0.0, 1.0, 6);
  const auto a = fit_cov_grid(obs, grid, 1, 0.3);
  const auto b = fit_cov_grid(scaled, grid, 1, 0.3);
  const double c2 = 1.7 * 1.7;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    EXPECT_NEAR(b.D_hat[k], c2 * a.D_hat[k], 1e-10);
    EXPECT_NEAR(b.dD_hat[k], c2 * a.dD_hat[k], 1e-7);
    for (std::size_t j = k; j < grid.size(); ++j) {
      EXPECT_NEAR(b.G(k, j), c2 * a.G(k, j), 1e-10);
      EXPECT_NEAR(b.dsG(k, j), c2 * a.dsG(k, j), 1e-8);
    }
  }
}

TEST(CovSmoother, LinearInEachObservation) {
  const auto obs = curves_of(60, 6, decay, 0.2, 5);
  auto fit_with = [&](double delta, bool include_diagonal) {
    auto curves = obs.curves();
    curves[7].y[2] += delta;
    SurfaceOptions opt;
    opt.bandwidth = 0.35;
    const auto t = curves[7].t[2];
    return CovSmoother(SparseObservations(curves), PairOrientation::upper, include_diagonal)
        .fit_at(t, t, opt)
        .G;
  };
  const double second = fit_with(2.0, false) - 2.0 * fit_with(1.0, false) + fit_with(0.0, false);
  EXPECT_NEAR(second, 0.0, 1e-10);
  const double biased = fit_with(2.0, true) - 2.0 * fit_with(1.0, true) + fit_with(0.0, true);
  EXPECT_GT(std::abs(biased), 1e-4);
}

TEST(FitDiag, DecayDerivativeShrinksWithBandwidth) {
  const auto obs = curves_of(400, 10, decay, 0.0, 6);
  const double truth = -2.0 * std::exp(-1.0);
  const auto wide = fit_diag(obs, 0.5, 1, 0.3);
  const auto narrow = fit_diag(obs, 0.5, 1, 0.1);
  EXPECT_NEAR(narrow.D, std::exp(-1.0), 0.01);
  EXPECT_LT(std::abs(narrow.dD - truth), std::abs(wide.dD - truth));
  EXPECT_NEAR(narrow.dD, truth, 0.03);
}

TEST(FitDiag, NoiseDoesNotBiasDiagonal) {
  const auto obs = curves_of(400, 10, constant_one, 0.5, 7);
  const auto clean = fit_diag(obs, 0.5, 1, 0.2);
  EXPECT_NEAR(clean.D, 1.0, 0.05);
  SurfaceOptions opt;
  opt.bandwidth = 0.2;
  const auto biased = CovSmoother(obs, PairOrientation::upper, true).fit_at(0.5, 0.5, opt);
  EXPECT_GT(biased.G - clean.D, 0.0);
}

TEST(FitCovGrid, SmokeWithDefaultBandwidth) {
  ExperimentConfig cfg = parse_config(R"({"schema_version":1,"design":{"r":8,"noise_sd":0.1}})");
  const auto obs = simulate_observations(cfg, 100, 8);
  const auto est = fit_cov_grid(obs, uniform_grid(0.0, 1.0, 21), 1, default_bandwidth_cov(obs, 1));
  EXPECT_EQ(std::count(est.flagged.begin(), est.flagged.end(), 1), 0);
  for (std::size_t a = 0; a < est.size(); ++a) {
    for (std::size_t b = a; b < est.size(); ++b) EXPECT_TRUE(std::isfinite(est.G(a, b)));
  }
}

TEST(FitCovGrid, TooSparseFails) {
  const SparseObservations few({{"a", {0.1, 0.15}, {1, 1}}, {"b", {0.12, 0.18}, {1, 1}}});
  EXPECT_THROW(fit_cov_grid(few, uniform_grid(0.0, 1.0, 11), 1, 0.05), EstimationFailed);
}

TEST(FitCovGrid, ErrorAgainstOracleShrinksWithN) {
  ExperimentConfig cfg = parse_config(R"({"schema_version":1,"design":{"r":10,"noise_sd":0.0}})");
  const auto unit = unit_model(cfg.model);
  const MomentSolution oracle(unit.coeffs, unit.nu_K, 1.0, 1.0);
  const double truth = cov_value(oracle, 0.3, 0.6);
  auto mean_error = [&](std::size_t n) {
    double acc = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto obs = simulate_observations(cfg, n, 500 + s);
      acc += std::abs(fit_cov_at(obs, 0.3, 0.6, 1, default_bandwidth_cov(obs, 1)).G - truth);
    }
    return acc / 10.0;
  };
  EXPECT_LT(mean_error(400), mean_error(50));
}

TEST(DefaultBandwidthCov, FormulaAndConstant) {
  const auto obs = curves_of(100, 10, constant_one, 0.0, 9);
  double lo = 1.0, hi = 0.0;
  for (const auto& c : obs.curves()) {
    lo = std::min(lo, c.t.front());
    hi = std::max(hi, c.t.back());
  }
  const double h = (hi - lo) * std::pow(100.0 * 100.0, -1.0 / 6.0);
  EXPECT_NEAR(default_bandwidth_cov(obs, 1), h, 1e-12);
  EXPECT_NEAR(default_bandwidth_cov(obs, 1, 2.0), 2.0 * h, 1e-12);
  EXPECT_DOUBLE_EQ(default_bandwidth_cov(obs, 1, 10.0), 0.5);
}

TEST(NoiseVariance, ConstantPathsRecoverNoise) {
  const auto obs = curves_of(400, 10, constant_one, 0.5, 10);
  const auto grid = uniform_grid(0.0, 1.0, 26);
  const auto cov = fit_cov_grid(obs, grid, 1, 0.2);
  const auto nv = noise_variance_estimate(obs, cov);
  EXPECT_NEAR(nv.value, 0.25, 0.05);
  EXPECT_FALSE(nv.floored);

  const auto clean = curves_of(400, 10, decay, 0.0, 11);
  const auto est = noise_variance_estimate(clean, fit_cov_grid(clean, grid, 1, 0.2));
  EXPECT_LT(est.value, 5e-3);
}
