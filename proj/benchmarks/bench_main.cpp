#include <random>

#include <benchmark/benchmark.h>

#include "levyest/config.hpp"
#include "levyest/cov_surface.hpp"
#include "levyest/harness.hpp"
#include "levyest/local_poly.hpp"
#include "levyest/sde_sim.hpp"
#include "levyest/wls.hpp"

using namespace levyest;

namespace {

const ExperimentConfig& study_config() {
  static const auto cfg = parse_config(R"({"schema_version": 1, "design": {"r": 10, "noise_sd": 0.1},
    "estimation": {"h_G_constant": 2.0, "policy": {"kind": "known_sigma"}}})");
  return cfg;
}

void BM_SolveWls(benchmark::State& state) {
  const auto rows = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 e(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd x(rows, 3);
  std::vector<double> w(rows), y(rows);
  for (Eigen::Index k = 0; k < rows; ++k) {
    const double t = u(e);
    x.row(k) << 1.0, t, t * t;
    w[k] = 1.0 - t * t;
    y[k] = u(e);
  }
  for (auto _ : state) benchmark::DoNotOptimize(solve_wls(x, w, y));
}
BENCHMARK(BM_SolveWls)->Arg(100)->Arg(1000);

void BM_SimulatePath(benchmark::State& state) {
  const auto coeffs = supplement_coefficients();
  const PathGrid grid(0.0, 1.0, static_cast<std::size_t>(state.range(0)));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_path(coeffs, {}, grid, 1.0, ++seed));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulatePath)->Arg(1000)->Arg(50000);

void BM_FitMeanCurve(benchmark::State& state) {
  const auto obs = simulate_observations(study_config(), static_cast<std::size_t>(state.range(0)), 3);
  const auto grid = uniform_grid(0.0, 1.0, 51);
  const double h = default_bandwidth_mean(obs, 2);
  for (auto _ : state) benchmark::DoNotOptimize(fit_mean_curve(obs, grid, 2, h));
}
BENCHMARK(BM_FitMeanCurve)->Arg(100)->Arg(400);

void BM_FitCovGrid(benchmark::State& state) {
  const auto obs = simulate_observations(study_config(), static_cast<std::size_t>(state.range(0)), 4);
  const auto grid = uniform_grid(0.0, 1.0, 51);
  const double h = default_bandwidth_cov(obs, 1, 2.0);
  const CovSmoother smoother(obs);
  SurfaceOptions opt;
  opt.bandwidth = h;
  for (auto _ : state) benchmark::DoNotOptimize(fit_cov_grid(smoother, grid, opt));
}
BENCHMARK(BM_FitCovGrid)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_Pipeline(benchmark::State& state) {
  const auto obs = simulate_observations(study_config(), static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(run_pipeline(study_config(), obs));
}
BENCHMARK(BM_Pipeline)->Arg(35)->Arg(400)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
