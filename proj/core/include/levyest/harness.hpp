#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "levyest/coeff_est.hpp"
#include "levyest/config.hpp"
#include "levyest/cov_surface.hpp"
#include "levyest/local_poly.hpp"
#include "levyest/moment_oracle.hpp"
#include "levyest/observations.hpp"
#include "levyest/sde_sim.hpp"

namespace levyest {

/// Native-time coefficients with sigma multiplied by brownian_scale.
CoefficientSet native_coefficients(const ModelBlock& model);
/// The model mapped onto [0, 1]; identity when the span already is [0, 1].
UnitTimeModel unit_model(const ModelBlock& model);

/// Paths simulated on the native span and mapped onto [0, 1]. Path i depends
/// only on (master_seed, i), so smaller ensembles are prefixes of larger ones.
SamplePathSet simulate_unit_paths(const ExperimentConfig& cfg, std::size_t n, std::uint64_t master_seed);
SparseObservations simulate_observations(const ExperimentConfig& cfg, std::size_t n,
                                         std::uint64_t master_seed);

std::vector<double> eval_grid(const EstimationBlock& est);
std::optional<SeparationPolicy> resolve_policy(const ExperimentConfig& cfg);

struct PipelineResult {
  MeanEstimate mean;
  CovEstimate cov;
  CoefficientEstimate coefficients;
  double h_m = 0.0;
  double h_G = 0.0;
};

/// mean fit, covariance fit, drift, total noise and (with a policy) separation.
PipelineResult run_pipeline(const ExperimentConfig& cfg, const SparseObservations& obs);

struct PointEstimate {
  std::string quantity;
  double t = 0.0;
  double value = 0.0;
};

/// mu_hat and either (sigma2 from s_diag, xi2 from s_tri) under a policy or
/// (s_diag, s_tri) without one, linearly interpolated at t.
std::vector<PointEstimate> point_estimates(const PipelineResult& result, double t);

struct EmseRow {
  std::size_t n = 0;
  std::size_t replication = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double emse_mu = 0.0;
  double sup_s_err = 0.0;    // sup |s_tri - s| on the sup window
  double sup_xi2_err = 0.0;  // sup |xi2_hat - xi2|, NaN without a policy
  std::size_t region_points = 0;
  std::size_t excluded_points = 0;
};

struct EmseSummary {
  std::size_t n = 0;
  std::size_t successes = 0;
  double median_mu = 0.0;
  double q25_mu = 0.0;
  double q75_mu = 0.0;
  double median_s = 0.0;
  double median_xi2 = 0.0;
};

struct EmseResult {
  std::vector<EmseRow> rows;  // ordered by (n, replication)
  std::vector<EmseSummary> summary;
  double sup_window = 0.8;
};

/// For every n and replication: simulate, observe, estimate and score against
/// the moment oracle. Replication seeds are shared across n.
EmseResult run_emse(const ExperimentConfig& cfg, double sup_window = 0.8);

struct BootstrapQuantity {
  std::string name;
  double estimate = 0.0;
  double bmse = 0.0;
};

struct BootstrapResult {
  double t_star = 0.5;
  std::size_t B = 0;
  std::size_t successes = 0;
  std::vector<BootstrapQuantity> quantities;
  /// values[b][q]; NaN rows mark failed resamples.
  std::vector<std::vector<double>> values;

  /// BMSE over the successful resamples among the first `count`.
  std::vector<double> bmse_over_first(std::size_t count) const;
};

/// Curve-level bootstrap: resample b draws n curves with replacement from the
/// stream derive_seed(master, bootstrap, b), so a run with 2B resamples
/// extends the run with B.
BootstrapResult run_bootstrap(const ExperimentConfig& cfg, const SparseObservations& obs, double t_star,
                              std::size_t B);

struct OracleCheck {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct OracleReport {
  std::vector<OracleCheck> checks;
  bool all_pass() const;
};

/// Identity web of the moment system plus Monte-Carlo-vs-ODE bands. With
/// negative_control the oracle is solved with a wrong nu_K while the
/// identities are scored against the configured one.
OracleReport run_oracle_check(const ExperimentConfig& cfg, bool negative_control = false);

struct Manifest {
  std::string subcommand;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
  std::vector<std::string> notes;
};

/// Deterministic JSON (no timestamps) so reruns compare byte for byte.
void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& cfg, const Manifest& manifest);

std::vector<std::string> rescale_notes(const ModelBlock& model);

void write_emse_csv(std::ostream& out, const EmseResult& result);
void write_emse_summary_csv(std::ostream& out, const EmseResult& result);
void write_bootstrap_csv(std::ostream& out, const BootstrapResult& result);
void write_oracle_csv(std::ostream& out, const OracleReport& report);
void write_points_csv(std::ostream& out, const std::vector<PointEstimate>& points);

/// Writes mean.csv, cov.csv, diag.csv, coefficients.csv and points.csv into
/// dir; returns the file names.
std::vector<std::string> write_pipeline_outputs(const std::filesystem::path& dir, const PipelineResult& result,
                                                double t_star);

std::string version_string();

}  // namespace levyest
