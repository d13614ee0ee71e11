#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "levyest/rng.hpp"
#include "levyest/time_function.hpp"

namespace levyest {

/// Small-jump Levy measure restricted to K = {|y| <= 1}. Only the total mass
/// nu(K) enters the dynamics because xi does not depend on the jump size.
struct LevyConfig {
  double nu_K = 1.0;
  std::string jump_size_law = "uniform(-1,1)";  // provenance only

  void validate() const;
};

class PathGrid {
 public:
  PathGrid(double t0, double t1, std::size_t steps);

  double t0() const noexcept { return t0_; }
  double t1() const noexcept { return t1_; }
  std::size_t steps() const noexcept { return steps_; }
  double dt() const noexcept { return (t1_ - t0_) / static_cast<double>(steps_); }
  double at(std::size_t k) const noexcept;
  std::vector<double> points() const;

 private:
  double t0_;
  double t1_;
  std::size_t steps_;
};

struct InitialLaw {
  enum class Kind { point, normal };
  Kind kind = Kind::point;
  double mean = 1.0;
  double sd = 0.0;

  static InitialLaw point(double x0) { return {Kind::point, x0, 0.0}; }
  static InitialLaw normal(double mean, double sd) { return {Kind::normal, mean, sd}; }

  double draw(Engine& engine) const;
  double second_moment() const noexcept { return mean * mean + sd * sd; }
};

/// n paths stored row-major on the recorded time points (every
/// record_every-th point of the simulation grid, always including both ends).
struct SamplePathSet {
  std::vector<double> times;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  std::string coeff_id;

  std::size_t n() const noexcept { return seeds.size(); }
  std::size_t points() const noexcept { return times.size(); }
  std::span<const double> row(std::size_t i) const;
  double at(std::size_t i, std::size_t k) const { return values[i * times.size() + k]; }

  /// Same paths with times mapped affinely from [t0, t1] onto [0, 1].
  SamplePathSet rescaled_to_unit() const;
  /// Linear interpolation of path i at time t; RangeError outside the grid.
  double interpolate(std::size_t i, double t) const;
};

struct EnsembleOptions {
  std::size_t record_every = 1;
  unsigned threads = 1;
};

/// Euler recursion with compensated Poisson jumps:
/// X_{k+1} = X_k + mu X_k dt + sigma sqrt(dt) Z_k + xi (N_k - nu_K dt).
std::vector<double> simulate_path(const CoefficientSet& coeffs, const LevyConfig& levy,
                                  const PathGrid& grid, double x0, std::uint64_t seed);

SamplePathSet simulate_ensemble(const CoefficientSet& coeffs, const LevyConfig& levy,
                                const PathGrid& grid, const InitialLaw& x0_law, std::size_t n,
                                std::uint64_t master_seed, const EnsembleOptions& options = {});

std::uint64_t path_seed(std::uint64_t master_seed, std::size_t index) noexcept;

/// CSV with header path_id,t,x.
void write_paths_csv(std::ostream& out, const SamplePathSet& paths);
SamplePathSet read_paths_csv(std::istream& in);

}  // namespace levyest
