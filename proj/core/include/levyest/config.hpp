#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "levyest/coeff_est.hpp"
#include "levyest/cov_surface.hpp"
#include "levyest/kernel.hpp"
#include "levyest/observations.hpp"
#include "levyest/sde_sim.hpp"
#include "levyest/time_function.hpp"

namespace levyest {

inline constexpr int kConfigSchemaVersion = 1;

struct ModelBlock {
  std::string preset = "supplement";  // "supplement" or "custom"
  CoefficientSet coeffs = supplement_coefficients();
  LevyConfig levy;
  InitialLaw x0 = InitialLaw::point(1.0);
  double t0 = 0.0;
  double t1 = 1.0;
  std::size_t steps = 1000;
  std::size_t record_every = 1;
  /// Multiplies sigma; sqrt(50) turns W into a driver with covariance 50 min(s, t).
  double brownian_scale = 1.0;
};

struct DesignBlock {
  std::vector<std::size_t> n{200};
  DesignConfig design;
};

struct PolicySpec {
  SeparationPolicy::Kind kind = SeparationPolicy::Kind::known_sigma;
  /// Taken from the (rescaled) model when true, else from `payload`.
  bool from_model = true;
  TimeFunction payload;
};

struct EstimationBlock {
  int d_mean = 2;
  int d_cov = 1;
  std::optional<double> h_m;  // empty = automatic
  std::optional<double> h_G;
  double h_m_constant = 1.0;
  double h_G_constant = 1.0;
  double epsilon = 0.1;
  Kernel kernel;
  PairOrientation orientation = PairOrientation::upper;
  std::size_t eval_points = 51;
  std::optional<double> drift_threshold;
  double drift_threshold_fraction = 1e-3;
  std::optional<PolicySpec> policy;
  SeparationSource source = SeparationSource::triangular;
};

enum class ExperimentKind { estimate, emse, bootstrap, oracle_check };

struct ExperimentBlock {
  ExperimentKind kind = ExperimentKind::estimate;
  std::size_t replications = 20;
  std::size_t B = 1000;
  double t_star = 0.5;
  std::uint64_t master_seed = 1;
  double emse_region_fraction = 0.05;
  std::size_t mc_paths = 10000;
  double oracle_step = 1e-3;
  std::size_t check_points = 11;
};

struct OutputBlock {
  std::filesystem::path directory = "out";
  bool csv = true;
  bool json = true;
};

struct ExperimentConfig {
  int schema_version = kConfigSchemaVersion;
  ModelBlock model;
  DesignBlock design;
  EstimationBlock estimation;
  ExperimentBlock experiment;
  OutputBlock output;
  /// Canonical JSON text of the parsed document (sorted keys), hashed into
  /// run manifests.
  std::string canonical;

  /// Throws ConfigError on violated invariants.
  void validate() const;
};

/// Relative file references (table files) resolve against base_dir.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& file);

std::string to_string(ExperimentKind kind);
std::uint64_t fnv1a(const std::string& text) noexcept;

}  // namespace levyest
