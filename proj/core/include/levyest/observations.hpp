#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "levyest/rng.hpp"
#include "levyest/sde_sim.hpp"

namespace levyest {

/// Sampling density of design times on [0, 1]. The clipped-linear law has
/// density proportional to max(intercept + slope * t, floor).
struct DesignLaw {
  enum class Kind { uniform, clipped_linear };
  Kind kind = Kind::uniform;
  double intercept = 0.0;
  double slope = 0.0;
  double floor = 1.0;

  static DesignLaw uniform() { return {}; }
  static DesignLaw clipped_linear(double intercept, double slope, double floor);

  double density(double t) const;  // normalised on [0, 1]
  double min_density() const;
  double max_density() const;
  double draw(Engine& engine) const;
  void validate() const;
};

struct NoiseLaw {
  enum class Kind { gaussian, uniform };
  Kind kind = Kind::gaussian;
  double draw(Engine& engine, double sd) const;
};

struct DesignConfig {
  std::size_t r = 10;
  DesignLaw design_law;
  double noise_sd = 0.0;
  NoiseLaw noise_law;

  void validate() const;
};

struct Curve {
  std::string id;
  std::vector<double> t;
  std::vector<double> y;
};

struct ObservationRecord {
  std::size_t curve;
  std::size_t index;
  double t;
  double y;
};

/// Noisy values Y_ij = X_i(T_ij) + U_ij at strictly increasing design times.
class SparseObservations {
 public:
  SparseObservations() = default;
  explicit SparseObservations(std::vector<Curve> curves);

  std::size_t n() const noexcept { return curves_.size(); }
  std::size_t total() const noexcept;
  double mean_r() const noexcept;
  const Curve& curve(std::size_t i) const { return curves_[i]; }
  const std::vector<Curve>& curves() const noexcept { return curves_; }
  std::vector<ObservationRecord> records() const;

  /// Throws ValidationError: n >= 1, r_i >= 2, strictly increasing times
  /// inside [0, 1], finite values.
  void validate() const;

  /// Curves drawn with replacement, in the order of the index list.
  SparseObservations resample(std::span<const std::size_t> indices) const;

  friend bool operator==(const SparseObservations& a, const SparseObservations& b);

 private:
  std::vector<Curve> curves_;
};

/// r strictly increasing design times in [0, 1].
std::vector<double> draw_design(std::size_t r, const DesignLaw& law, std::uint64_t seed);

/// paths must live on [0, 1] (see SamplePathSet::rescaled_to_unit).
SparseObservations observe(const SamplePathSet& paths, const DesignConfig& cfg, std::uint64_t seed);

struct IngestOptions {
  std::optional<std::pair<double, double>> rescale_time;  // map [t0, t1] -> [0, 1]
};

/// Long CSV with header curve_id,t,y. Rows are grouped per curve in first
/// appearance order and sorted by time.
SparseObservations ingest_csv(std::istream& in, const IngestOptions& options = {});

/// One curve per line, equally spaced columns mapped to t = (j - 0.5) / J.
/// A non-numeric header line and a non-numeric leading label column are
/// both accepted.
SparseObservations ingest_wide_csv(std::istream& in);

void write_observations_csv(std::ostream& out, const SparseObservations& obs);

}  // namespace levyest
