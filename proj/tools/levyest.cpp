// levyest: simulate, observe and estimate linear jump-diffusion models from
// sparse noisy curves.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "levyest/config.hpp"
#include "levyest/error.hpp"
#include "levyest/harness.hpp"
#include "levyest/moment_oracle.hpp"
#include "levyest/observations.hpp"
#include "levyest/rng.hpp"
#include "levyest/sde_sim.hpp"

namespace fs = std::filesystem;
using namespace levyest;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct DataArgs {
  std::string data;
  bool wide = false;
  std::vector<double> rescale;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? parse_config(R"({"schema_version": 1})") : load_config(c.config);
  if (c.seed) cfg.experiment.master_seed = *c.seed;
  if (!c.out.empty()) cfg.output.directory = c.out;
  fs::create_directories(cfg.output.directory);
  return cfg;
}

std::ofstream open(const fs::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  return out;
}

void finish(const ExperimentConfig& cfg, Manifest m) {
  if (!cfg.output.csv) {
    for (const auto& f : m.outputs) fs::remove(cfg.output.directory / f);
    m.outputs.clear();
  }
  if (cfg.output.json) write_manifest(cfg.output.directory, cfg, m);
  std::cout << "wrote " << m.outputs.size() << " file(s) to " << cfg.output.directory.string() << '\n';
}

// Observations from a file, or simulated from the config when none is given.
SparseObservations obtain(const ExperimentConfig& cfg, const DataArgs& d, Manifest& m) {
  if (d.data.empty()) {
    const std::size_t n = cfg.design.n.front();
    m.notes.push_back("observations simulated: n=" + std::to_string(n));
    auto obs = simulate_observations(cfg, n, cfg.experiment.master_seed);
    auto out = open(cfg.output.directory / "observations.csv");
    write_observations_csv(out, obs);
    m.outputs.push_back("observations.csv");
    return obs;
  }
  std::ifstream in(d.data);
  if (!in) throw Error("cannot open " + d.data);
  m.notes.push_back("observations read from " + fs::path(d.data).filename().string());
  if (d.wide) return ingest_wide_csv(in);
  IngestOptions opts;
  if (d.rescale.size() == 2) {
    opts.rescale_time = std::make_pair(d.rescale[0], d.rescale[1]);
    m.notes.push_back("observation times mapped from [" + std::to_string(d.rescale[0]) + "," +
                      std::to_string(d.rescale[1]) + "] to [0,1]");
  }
  return ingest_csv(in, opts);
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON experiment configuration")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Override the master seed");
  app->add_option("--out", c.out, "Output directory");
}

void add_data(CLI::App* app, DataArgs& d) {
  app->add_option("--data", d.data, "Observation CSV (curve_id,t,y)")->check(CLI::ExistingFile);
  app->add_flag("--wide", d.wide, "Data is one curve per row on an equally spaced grid");
  app->add_option("--rescale-time", d.rescale, "Map observation times from [t0,t1] onto [0,1]")
      ->expected(2);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Jump-diffusion simulation and coefficient estimation from sparse curves"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  Common c_sim, c_obs, c_est, c_emse, c_boot, c_orc;
  DataArgs d_est, d_boot;
  std::optional<std::size_t> sim_n, obs_n, boot_B;
  std::optional<double> boot_t;
  std::string paths_file;
  bool negative_control = false;

  auto* sim = app.add_subcommand("simulate", "Simulate sample paths on the native time span");
  add_common(sim, c_sim);
  sim->add_option("--n", sim_n, "Number of paths (default: first design.n)");

  auto* obs = app.add_subcommand("observe", "Draw sparse noisy observations from paths");
  add_common(obs, c_obs);
  obs->add_option("--paths", paths_file, "Paths CSV (path_id,t,x); simulated when omitted")
      ->check(CLI::ExistingFile);
  obs->add_option("--n", obs_n, "Number of simulated paths (default: first design.n)");

  auto* est = app.add_subcommand("estimate", "Estimate mean, covariance and coefficients");
  add_common(est, c_est);
  add_data(est, d_est);

  auto* emse = app.add_subcommand("emse", "EMSE convergence study over the design.n list");
  add_common(emse, c_emse);

  auto* boot = app.add_subcommand("bootstrap", "Curve-level bootstrap MSE at t_star");
  add_common(boot, c_boot);
  add_data(boot, d_boot);
  boot->add_option("--B", boot_B, "Number of resamples");
  boot->add_option("--t-star", boot_t, "Evaluation time in [0,1]");

  auto* orc = app.add_subcommand("oracle-check", "Moment identities and Monte Carlo agreement");
  add_common(orc, c_orc);
  orc->add_flag("--negative-control", negative_control, "Solve the oracle with a wrong nu_K");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const auto cfg = load(c_sim);
      const auto& m = cfg.model;
      const std::size_t n = sim_n.value_or(cfg.design.n.front());
      EnsembleOptions opts;
      opts.record_every = m.record_every;
      const auto paths = simulate_ensemble(native_coefficients(m), m.levy, PathGrid(m.t0, m.t1, m.steps), m.x0,
                                           n, cfg.experiment.master_seed, opts);
      auto out = open(cfg.output.directory / "paths.csv");
      write_paths_csv(out, paths);
      out.close();
      Manifest man{"simulate", cfg.experiment.master_seed, {"paths.csv"}, rescale_notes(m)};
      finish(cfg, man);
    } else if (obs->parsed()) {
      const auto cfg = load(c_obs);
      Manifest man{"observe", cfg.experiment.master_seed, {}, rescale_notes(cfg.model)};
      SamplePathSet paths;
      if (paths_file.empty()) {
        paths = simulate_unit_paths(cfg, obs_n.value_or(cfg.design.n.front()), cfg.experiment.master_seed);
      } else {
        std::ifstream in(paths_file);
        paths = read_paths_csv(in).rescaled_to_unit();
        man.notes.push_back("paths read from " + fs::path(paths_file).filename().string());
      }
      const auto data = observe(paths, cfg.design.design,
                                derive_seed(cfg.experiment.master_seed, Stream::observation, 0));
      auto out = open(cfg.output.directory / "observations.csv");
      write_observations_csv(out, data);
      out.close();
      man.outputs.push_back("observations.csv");
      finish(cfg, man);
    } else if (est->parsed()) {
      const auto cfg = load(c_est);
      Manifest man{"estimate", cfg.experiment.master_seed, {}, rescale_notes(cfg.model)};
      const auto data = obtain(cfg, d_est, man);
      const auto result = run_pipeline(cfg, data);
      for (auto& f : write_pipeline_outputs(cfg.output.directory, result, cfg.experiment.t_star)) {
        man.outputs.push_back(f);
      }
      man.notes.push_back("h_m=" + std::to_string(result.h_m) + " h_G=" + std::to_string(result.h_G));
      for (const auto& p : point_estimates(result, cfg.experiment.t_star)) {
        std::cout << p.quantity << "(" << p.t << ") = " << p.value << '\n';
      }
      finish(cfg, man);
    } else if (emse->parsed()) {
      const auto cfg = load(c_emse);
      const auto result = run_emse(cfg);
      {
        auto out = open(cfg.output.directory / "emse.csv");
        write_emse_csv(out, result);
      }
      {
        auto out = open(cfg.output.directory / "emse_summary.csv");
        write_emse_summary_csv(out, result);
      }
      write_emse_summary_csv(std::cout, result);
      finish(cfg, {"emse", cfg.experiment.master_seed, {"emse.csv", "emse_summary.csv"}, rescale_notes(cfg.model)});
    } else if (boot->parsed()) {
      const auto cfg = load(c_boot);
      Manifest man{"bootstrap", cfg.experiment.master_seed, {}, rescale_notes(cfg.model)};
      const auto data = obtain(cfg, d_boot, man);
      const auto result =
          run_bootstrap(cfg, data, boot_t.value_or(cfg.experiment.t_star), boot_B.value_or(cfg.experiment.B));
      {
        auto out = open(cfg.output.directory / "bootstrap.csv");
        write_bootstrap_csv(out, result);
      }
      write_bootstrap_csv(std::cout, result);
      man.outputs.push_back("bootstrap.csv");
      finish(cfg, man);
    } else if (orc->parsed()) {
      const auto cfg = load(c_orc);
      const auto report = run_oracle_check(cfg, negative_control);
      {
        auto out = open(cfg.output.directory / "oracle_check.csv");
        write_oracle_csv(out, report);
      }
      const auto unit = unit_model(cfg.model);
      const MomentSolution sol(unit.coeffs, unit.nu_K, cfg.model.x0.mean, cfg.model.x0.second_moment(), 1.0,
                               cfg.experiment.oracle_step);
      {
        auto out = open(cfg.output.directory / "moments.csv");
        write_moments_csv(out, sol, std::max<std::size_t>(1, sol.grid().size() / 200));
      }
      {
        auto out = open(cfg.output.directory / "G.csv");
        write_G_csv(out, sol, eval_grid(cfg.estimation));
      }
      write_oracle_csv(std::cout, report);
      Manifest man{"oracle-check", cfg.experiment.master_seed, {"oracle_check.csv", "moments.csv", "G.csv"},
                   rescale_notes(cfg.model)};
      if (negative_control) man.notes.push_back("negative control: oracle solved with a wrong nu_K");
      finish(cfg, man);
      if (!report.all_pass()) return 2;
    }
  } catch (const Error& e) {
    std::cerr << "levyest: error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "levyest: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
