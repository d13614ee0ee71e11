#include "levyest/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include <nlohmann/json.hpp>

#include "levyest/csv.hpp"
#include "levyest/error.hpp"
#include "levyest/rng.hpp"
#include "internal.hpp"

#ifndef LEVYEST_VERSION
#define LEVYEST_VERSION "0.0.0"
#endif

namespace levyest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_unit_span(const ModelBlock& model) { return model.t0 == 0.0 && model.t1 == 1.0; }

double quantile(std::vector<double> v, double p) {
  if (v.empty()) return kNaN;
  std::sort(v.begin(), v.end());
  const double pos = p * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::ofstream open_output(const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  return out;
}

}  // namespace

std::string version_string() { return LEVYEST_VERSION; }

CoefficientSet native_coefficients(const ModelBlock& model) {
  CoefficientSet c = model.coeffs;
  if (model.brownian_scale != 1.0) {
    c.sigma = c.sigma.scaled(model.brownian_scale);
    c.id += "*bm" + csv::format(model.brownian_scale);
  }
  return c;
}

UnitTimeModel unit_model(const ModelBlock& model) {
  const auto native = native_coefficients(model);
  if (is_unit_span(model)) return {native, model.levy.nu_K};
  return rescale_to_unit(native, model.levy.nu_K, model.t0, model.t1);
}

SamplePathSet simulate_unit_paths(const ExperimentConfig& cfg, std::size_t n, std::uint64_t master_seed) {
  const auto& m = cfg.model;
  const PathGrid grid(m.t0, m.t1, m.steps);
  EnsembleOptions opts;
  opts.record_every = m.record_every;
  auto paths = simulate_ensemble(native_coefficients(m), m.levy, grid, m.x0, n, master_seed, opts);
  return is_unit_span(m) ? paths : paths.rescaled_to_unit();
}

SparseObservations simulate_observations(const ExperimentConfig& cfg, std::size_t n,
                                         std::uint64_t master_seed) {
  const auto paths = simulate_unit_paths(cfg, n, master_seed);
  return observe(paths, cfg.design.design, derive_seed(master_seed, Stream::observation, 0));
}

std::vector<double> eval_grid(const EstimationBlock& est) { return uniform_grid(0.0, 1.0, est.eval_points); }

std::optional<SeparationPolicy> resolve_policy(const ExperimentConfig& cfg) {
  const auto& spec = cfg.estimation.policy;
  if (!spec) return std::nullopt;
  if (!spec->from_model) return SeparationPolicy{spec->kind, spec->payload};
  const auto unit = unit_model(cfg.model);
  const auto sigma = unit.coeffs.sigma;
  const auto xi = unit.coeffs.xi;
  const double nu = unit.nu_K;
  switch (spec->kind) {
    case SeparationPolicy::Kind::known_sigma:
      return SeparationPolicy::known_sigma(TimeFunction::custom("sigma^2", [sigma](double t) {
        const double s = sigma(t);
        return s * s;
      }));
    case SeparationPolicy::Kind::known_xi:
      return SeparationPolicy::known_xi(TimeFunction::custom("xi^2", [xi](double t) {
        const double x = xi(t);
        return x * x;
      }));
    case SeparationPolicy::Kind::known_fraction:
      return SeparationPolicy::known_fraction(TimeFunction::custom("rho", [sigma, xi, nu](double t) {
        const double s = sigma(t), x = xi(t);
        const double total = s * s + nu * x * x;
        return total > 0.0 ? nu * x * x / total : 0.0;
      }));
  }
  return std::nullopt;
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, const SparseObservations& obs) {
  obs.validate();
  const auto& e = cfg.estimation;
  const auto grid = eval_grid(e);
  PipelineResult out;
  out.h_m = e.h_m ? *e.h_m : default_bandwidth_mean(obs, e.d_mean, e.h_m_constant);
  out.h_G = e.h_G ? *e.h_G : default_bandwidth_cov(obs, e.d_cov, e.h_G_constant);

  SmootherOptions mopts;
  mopts.degree = e.d_mean;
  mopts.bandwidth = out.h_m;
  mopts.kernel = e.kernel;
  out.mean = fit_mean_curve(MeanSmoother(obs), grid, mopts);

  SurfaceOptions sopts;
  sopts.degree = e.d_cov;
  sopts.bandwidth = out.h_G;
  sopts.kernel = e.kernel;
  out.cov = fit_cov_grid(CovSmoother(obs, e.orientation), grid, sopts);

  CoefficientOptions copts;
  copts.nu_K = unit_model(cfg.model).nu_K;
  copts.epsilon = e.epsilon;
  copts.drift_threshold = e.drift_threshold;
  copts.drift_threshold_fraction = e.drift_threshold_fraction;
  copts.policy = resolve_policy(cfg);
  copts.source = e.source;
  out.coefficients = estimate_coefficients(out.mean, out.cov, copts);
  return out;
}

std::vector<PointEstimate> point_estimates(const PipelineResult& result, double t) {
  const auto& c = result.coefficients;
  std::vector<PointEstimate> out;
  out.push_back({"mu_hat", t, detail::interpolate_linear(c.grid, c.mu_hat, t)});
  if (c.policy) {
    // sigma^2 from the diagonal route, xi^2 from the triangular route
    const auto diag = separate(c.grid, c.s_hat_diag, *c.policy, c.nu_K);
    const auto tri = separate(c.grid, c.s_hat_tri, *c.policy, c.nu_K);
    out.push_back({"sigma2_D_hat", t, detail::interpolate_linear(c.grid, diag.sigma2, t)});
    out.push_back({"xi2_hat", t, detail::interpolate_linear(c.grid, tri.xi2, t)});
  } else {
    out.push_back({"s_diag_hat", t, detail::interpolate_linear(c.grid, c.s_hat_diag, t)});
    out.push_back({"s_tri_hat", t, detail::interpolate_linear(c.grid, c.s_hat_tri, t)});
  }
  return out;
}

EmseResult run_emse(const ExperimentConfig& cfg, double sup_window) {
  EmseResult result;
  result.sup_window = sup_window;
  const auto unit = unit_model(cfg.model);
  const auto grid = eval_grid(cfg.estimation);
  const MomentSolution oracle(unit.coeffs, unit.nu_K, cfg.model.x0.mean, cfg.model.x0.second_moment(), 1.0,
                              cfg.experiment.oracle_step);
  std::vector<double> mu(grid.size()), m_abs(grid.size()), s(grid.size()), xi2(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    mu[k] = unit.coeffs.mu(grid[k]);
    m_abs[k] = std::abs(oracle.m_at(grid[k]));
    s[k] = oracle.noise_sum(grid[k]);
    const double x = unit.coeffs.xi(grid[k]);
    xi2[k] = x * x;
  }
  const double m_sup = *std::max_element(m_abs.begin(), m_abs.end());
  const double m_floor = cfg.experiment.emse_region_fraction * m_sup;

  for (std::size_t n : cfg.design.n) {
    std::vector<double> mu_vals, s_vals, xi_vals;
    for (std::size_t rep = 0; rep < cfg.experiment.replications; ++rep) {
      EmseRow row;
      row.n = n;
      row.replication = rep;
      row.seed = derive_seed(cfg.experiment.master_seed, Stream::replication, rep);
      try {
        const auto obs = simulate_observations(cfg, n, row.seed);
        const auto fit = run_pipeline(cfg, obs);
        const auto& c = fit.coefficients;
        std::vector<double> sq(grid.size(), 0.0);
        for (std::size_t k = 0; k < grid.size(); ++k) {
          const bool in = !(c.flags[k] & kOutsideRegion) && m_abs[k] >= m_floor;
          if (in) {
            sq[k] = (c.mu_hat[k] - mu[k]) * (c.mu_hat[k] - mu[k]);
            ++row.region_points;
          } else {
            ++row.excluded_points;
          }
        }
        if (row.region_points == 0) throw NoIdentifiableRegion("empty scoring region");
        row.emse_mu = trapezoid(grid, sq);
        row.sup_s_err = 0.0;
        row.sup_xi2_err = c.separation ? 0.0 : kNaN;
        for (std::size_t k = 0; k < grid.size(); ++k) {
          if (grid[k] > sup_window + 1e-12 || (c.flags[k] & kOutsideRegion)) continue;
          if (!std::isnan(c.s_hat_tri[k])) row.sup_s_err = std::max(row.sup_s_err, std::abs(c.s_hat_tri[k] - s[k]));
          if (c.separation && !std::isnan(c.separation->xi2[k])) {
            row.sup_xi2_err = std::max(row.sup_xi2_err, std::abs(c.separation->xi2[k] - xi2[k]));
          }
        }
        row.ok = true;
        mu_vals.push_back(row.emse_mu);
        s_vals.push_back(row.sup_s_err);
        if (c.separation) xi_vals.push_back(row.sup_xi2_err);
      } catch (const Error& e) {
        row.ok = false;
        row.error = e.what();
      }
      result.rows.push_back(row);
    }
    if (2 * mu_vals.size() < cfg.experiment.replications) {
      throw EstimationFailed("more than half of the replications failed at n=" + std::to_string(n));
    }
    EmseSummary sum;
    sum.n = n;
    sum.successes = mu_vals.size();
    sum.median_mu = quantile(mu_vals, 0.5);
    sum.q25_mu = quantile(mu_vals, 0.25);
    sum.q75_mu = quantile(mu_vals, 0.75);
    sum.median_s = quantile(s_vals, 0.5);
    sum.median_xi2 = quantile(xi_vals, 0.5);
    result.summary.push_back(sum);
  }
  return result;
}

std::vector<double> BootstrapResult::bmse_over_first(std::size_t count) const {
  count = std::min(count, values.size());
  std::vector<double> out(quantities.size(), kNaN);
  for (std::size_t q = 0; q < quantities.size(); ++q) {
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < count; ++b) {
      const double v = values[b][q];
      if (std::isnan(v)) continue;
      acc += (v - quantities[q].estimate) * (v - quantities[q].estimate);
      ++used;
    }
    if (used > 0) out[q] = acc / static_cast<double>(used);
  }
  return out;
}

BootstrapResult run_bootstrap(const ExperimentConfig& cfg, const SparseObservations& obs, double t_star,
                              std::size_t B) {
  if (B < 1) throw PreconditionError("bootstrap needs B >= 1");
  BootstrapResult result;
  result.t_star = t_star;
  result.B = B;
  const auto full = point_estimates(run_pipeline(cfg, obs), t_star);
  for (const auto& p : full) result.quantities.push_back({p.quantity, p.value, 0.0});

  const std::size_t n = obs.n();
  std::vector<std::size_t> idx(n);
  result.values.assign(B, std::vector<double>(full.size(), kNaN));
  for (std::size_t b = 0; b < B; ++b) {
    Engine engine(derive_seed(cfg.experiment.master_seed, Stream::bootstrap, b));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (auto& i : idx) i = pick(engine);
    try {
      const auto pts = point_estimates(run_pipeline(cfg, obs.resample(idx)), t_star);
      bool finite = true;
      for (const auto& p : pts) finite = finite && std::isfinite(p.value);
      if (!finite) continue;
      for (std::size_t q = 0; q < pts.size(); ++q) result.values[b][q] = pts[q].value;
      ++result.successes;
    } catch (const Error&) {
    }
  }
  if (5 * result.successes < 4 * B) {
    throw EstimationFailed("only " + std::to_string(result.successes) + " of " + std::to_string(B) +
                           " bootstrap resamples succeeded");
  }
  const auto bmse = result.bmse_over_first(B);
  for (std::size_t q = 0; q < bmse.size(); ++q) result.quantities[q].bmse = bmse[q];
  return result;
}

bool OracleReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const OracleCheck& c) { return c.pass; });
}

OracleReport run_oracle_check(const ExperimentConfig& cfg, bool negative_control) {
  OracleReport report;
  const auto unit = unit_model(cfg.model);
  const double m0 = cfg.model.x0.mean;
  const double D0 = cfg.model.x0.second_moment();
  const double nu_oracle = negative_control ? 2.0 * unit.nu_K + 1.0 : unit.nu_K;
  const MomentSolution sol(unit.coeffs, nu_oracle, m0, D0, 1.0, cfg.experiment.oracle_step);
  auto truth = [&](double t) {
    const double s = unit.coeffs.sigma(t), x = unit.coeffs.xi(t);
    return s * s + unit.nu_K * x * x;
  };
  auto add = [&](std::string name, double value, double tol) {
    report.checks.push_back({std::move(name), value, tol, value <= tol});
  };

  const double tol = 1e-4;
  const double end = 1.0 - cfg.estimation.epsilon;
  const auto pts = uniform_grid(0.0, end, cfg.experiment.check_points);
  double diag = 0.0, tri = 0.0, avg = 0.0, diag_tri = 0.0, diag_avg = 0.0, tri_avg = 0.0, dt = 0.0;
  for (double t : pts) {
    const double sd = diagonal_identity(sol, t);
    const double st = triangular_identity(sol, t, std::min(1.0, t + 0.5 * (1.0 - t)));
    const double sh = H_value(sol, t);
    const double target = truth(t);
    diag = std::max(diag, std::abs(sd - target));
    tri = std::max(tri, std::abs(st - target));
    avg = std::max(avg, std::abs(sh - target));
    diag_tri = std::max(diag_tri, std::abs(sd - st));
    diag_avg = std::max(diag_avg, std::abs(sd - sh));
    tri_avg = std::max(tri_avg, std::abs(st - sh));
    for (double u : pts) {
      if (u <= t) continue;
      dt = std::max(dt, std::abs(verify_pde_identity(sol, t, u).dt_residual));
    }
  }
  add("identity.diagonal_vs_truth", diag, tol);
  add("identity.triangular_vs_truth", tri, tol);
  add("identity.averaged_vs_truth", avg, tol);
  add("identity.diagonal_vs_triangular", diag_tri, tol);
  add("identity.diagonal_vs_averaged", diag_avg, tol);
  add("identity.triangular_vs_averaged", tri_avg, tol);
  add("identity.dtG_minus_muG", dt, tol);

  if (cfg.experiment.mc_paths > 0) {
    const auto paths = simulate_unit_paths(cfg, cfg.experiment.mc_paths, cfg.experiment.master_seed);
    const auto check = uniform_grid(0.0, 1.0, cfg.experiment.check_points);
    const double N = static_cast<double>(paths.n());
    double worst_mean = 0.0, worst_second = 0.0;
    for (double t : check) {
      double s1 = 0.0, s2 = 0.0, s4 = 0.0;
      for (std::size_t i = 0; i < paths.n(); ++i) {
        const double x = paths.interpolate(i, t);
        s1 += x;
        s2 += x * x;
        s4 += x * x * x * x;
      }
      const double mean = s1 / N, second = s2 / N;
      const double se_mean = std::sqrt(std::max(second - mean * mean, 0.0) / (N - 1.0));
      const double se_second = std::sqrt(std::max(s4 / N - second * second, 0.0) / (N - 1.0));
      const double zm = std::abs(mean - sol.m_at(t)) / std::max(se_mean, 1e-300);
      const double zs = std::abs(second - sol.D_at(t)) / std::max(se_second, 1e-300);
      worst_mean = std::max(worst_mean, std::abs(mean - sol.m_at(t)) <= 1e-12 ? 0.0 : zm);
      worst_second = std::max(worst_second, std::abs(second - sol.D_at(t)) <= 1e-12 ? 0.0 : zs);
    }
    add("monte_carlo.mean_max_z", worst_mean, 4.0);
    add("monte_carlo.second_moment_max_z", worst_second, 4.0);
  }
  return report;
}

std::vector<std::string> rescale_notes(const ModelBlock& model) {
  std::vector<std::string> notes;
  if (!is_unit_span(model)) {
    const double T = model.t1 - model.t0;
    notes.push_back("time span [" + csv::format(model.t0) + "," + csv::format(model.t1) +
                    "] mapped to [0,1]: mu_u = " + csv::format(T) + "*mu(t0+T u), sigma_u = sqrt(" +
                    csv::format(T) + ")*sigma(t0+T u), xi_u = xi(t0+T u), nu_u = " + csv::format(T) + "*nu_K");
  }
  if (model.brownian_scale != 1.0) {
    const double c = model.brownian_scale;
    notes.push_back("driver is Brownian motion scaled by " + csv::format(c) +
                    ", a Gaussian process with covariance " + csv::format(c * c) + "*min(s,t)");
  }
  return notes;
}

void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& cfg, const Manifest& manifest) {
  nlohmann::ordered_json j;
  j["tool"] = "levyest";
  j["version"] = version_string();
  j["subcommand"] = manifest.subcommand;
  j["schema_version"] = cfg.schema_version;
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(cfg.canonical)));
  j["config_hash"] = std::string("fnv1a64:") + hash;
  j["seed"] = manifest.seed;
  j["coefficients"] = unit_model(cfg.model).coeffs.id;
  j["outputs"] = manifest.outputs;
  j["notes"] = manifest.notes;
  auto out = open_output(dir / "manifest.json");
  out << j.dump(2) << '\n';
}

void write_emse_csv(std::ostream& out, const EmseResult& result) {
  out << "n,replication,seed,ok,emse_mu,sup_s_err,sup_xi2_err,region_points,excluded_points,error\n";
  for (const auto& r : result.rows) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    out << r.n << ',' << r.replication << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ','
        << csv::format(r.ok ? r.emse_mu : kNaN) << ',' << csv::format(r.ok ? r.sup_s_err : kNaN) << ','
        << csv::format(r.ok ? r.sup_xi2_err : kNaN) << ',' << r.region_points << ',' << r.excluded_points << ','
        << err << '\n';
  }
}

void write_emse_summary_csv(std::ostream& out, const EmseResult& result) {
  out << "n,successes,median_emse_mu,q25_emse_mu,q75_emse_mu,median_sup_s_err,median_sup_xi2_err\n";
  for (const auto& s : result.summary) {
    out << s.n << ',' << s.successes << ',' << csv::format(s.median_mu) << ',' << csv::format(s.q25_mu) << ','
        << csv::format(s.q75_mu) << ',' << csv::format(s.median_s) << ',' << csv::format(s.median_xi2) << '\n';
  }
}

void write_bootstrap_csv(std::ostream& out, const BootstrapResult& result) {
  out << "quantity,t_star,B,estimate,bmse,successes\n";
  for (const auto& q : result.quantities) {
    out << q.name << ',' << csv::format(result.t_star) << ',' << result.B << ',' << csv::format(q.estimate)
        << ',' << csv::format(q.bmse) << ',' << result.successes << '\n';
  }
}

void write_oracle_csv(std::ostream& out, const OracleReport& report) {
  out << "check,value,tolerance,pass\n";
  for (const auto& c : report.checks) {
    out << c.name << ',' << csv::format(c.value) << ',' << csv::format(c.tolerance) << ','
        << (c.pass ? "pass" : "fail") << '\n';
  }
}

void write_points_csv(std::ostream& out, const std::vector<PointEstimate>& points) {
  out << "quantity,t,estimate\n";
  for (const auto& p : points) out << p.quantity << ',' << csv::format(p.t) << ',' << csv::format(p.value) << '\n';
}

std::vector<std::string> write_pipeline_outputs(const std::filesystem::path& dir, const PipelineResult& result,
                                                double t_star) {
  {
    auto out = open_output(dir / "mean.csv");
    write_mean_csv(out, result.mean);
  }
  {
    auto out = open_output(dir / "cov.csv");
    write_cov_csv(out, result.cov);
  }
  {
    auto out = open_output(dir / "diag.csv");
    write_diag_csv(out, result.cov);
  }
  {
    auto out = open_output(dir / "coefficients.csv");
    write_coefficients_csv(out, result.coefficients);
  }
  {
    auto out = open_output(dir / "points.csv");
    write_points_csv(out, point_estimates(result, t_star));
  }
  return {"mean.csv", "cov.csv", "diag.csv", "coefficients.csv", "points.csv"};
}

}  // namespace levyest
