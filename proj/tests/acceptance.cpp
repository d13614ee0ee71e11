// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any criterion fails.
//
//   levyest_acceptance [--cli path/to/levyest] [--only 1,5,8] [--configs dir]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "levyest/config.hpp"
#include "levyest/cov_surface.hpp"
#include "levyest/harness.hpp"
#include "levyest/local_poly.hpp"
#include "levyest/moment_oracle.hpp"

namespace fs = std::filesystem;
using namespace levyest;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Args {
  std::string cli;
  fs::path configs = "configs";
  std::set<int> only;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

CoefficientSet constant_model(double mu, double sigma2, double xi2) {
  return {TimeFunction::constant(mu), TimeFunction::constant(std::sqrt(sigma2)),
          TimeFunction::constant(std::sqrt(xi2)), "constant"};
}

Outcome identity_web() {
  const auto start = std::chrono::steady_clock::now();
  const MomentSolution sol(constant_model(-1.0, 0.04, 0.09), 2.0, 1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k <= 90; ++k) {
    const double t = k / 100.0;
    const double diag = diagonal_identity(sol, t);
    const double avg = H_value(sol, t);
    for (double tau : {t + 0.01, t + (1.0 - t) / 2.0, 1.0}) {
      const double tri = triangular_identity(sol, t, tau);
      worst = std::max({worst, std::abs(diag - tri), std::abs(tri - avg)});
    }
    worst = std::max(worst, std::abs(diag - avg));
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-4 && elapsed < 1.0,
          "max pairwise gap " + fmt("%.3g", worst) + " (tol 1e-4), " + fmt("%.3f", elapsed) + " s (limit 1 s)"};
}

Outcome simulator_vs_ode(const fs::path& configs) {
  const auto start = std::chrono::steady_clock::now();
  auto cfg = load_config(configs / "supplement_case1.json");
  const std::size_t points = 11;
  cfg.model.record_every = cfg.model.steps / (points - 1);
  const std::size_t N = 10000;
  const auto paths = simulate_unit_paths(cfg, N, cfg.experiment.master_seed);
  const auto unit = unit_model(cfg.model);
  const MomentSolution oracle(unit.coeffs, unit.nu_K, cfg.model.x0.mean, cfg.model.x0.second_moment(), 1.0,
                              1e-5);
  double worst = 0.0;
  for (std::size_t k = 0; k < paths.points(); ++k) {
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double x = paths.at(i, k);
      s1 += x;
      s2 += x * x;
      s4 += x * x * x * x;
    }
    const double n = static_cast<double>(N);
    const double mean = s1 / n, second = s2 / n;
    const double se_mean = std::sqrt(std::max(0.0, second - mean * mean) / n);
    const double se_second = std::sqrt(std::max(0.0, s4 / n - second * second) / n);
    const double t = paths.times[k];
    auto z = [](double diff, double se) {
      if (se > 0.0) return std::abs(diff) / se;
      return std::abs(diff) < 1e-12 ? 0.0 : HUGE_VAL;
    };
    worst = std::max({worst, z(mean - oracle.m_at(t), se_mean), z(second - oracle.D_at(t), se_second)});
  }
  const double elapsed = seconds_since(start);
  return {paths.points() == points && worst <= 4.0 && elapsed < 30.0,
          "max |z| " + fmt("%.2f", worst) + " over " + std::to_string(paths.points()) +
              " points (limit 4), " + fmt("%.1f", elapsed) + " s (limit 30 s)"};
}

Outcome polynomial_reproduction() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 engine(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto quad = [](double t) { return 0.7 - 1.3 * t + 2.1 * t * t; };
  auto dquad = [](double t) { return -1.3 + 4.2 * t; };
  auto plane = [](double a, double b) { return 0.5 + 1.5 * a - 0.8 * b; };

  std::vector<Curve> line_curves, plane_curves;
  for (int i = 0; i < 200; ++i) {
    Curve c{std::to_string(i), {}, {}};
    for (int j = 0; j < 5; ++j) c.t.push_back(u(engine));
    std::sort(c.t.begin(), c.t.end());
    for (double t : c.t) c.y.push_back(quad(t));
    line_curves.push_back(c);
    // r = 2 with Y_1 = 1, so the single product equals Y_2
    std::vector<double> tt{u(engine), u(engine)};
    std::sort(tt.begin(), tt.end());
    plane_curves.push_back({std::to_string(i), tt, {1.0, plane(tt[0], tt[1])}});
  }
  const SparseObservations line_obs(line_curves), plane_obs(plane_curves);
  const MeanSmoother mean(line_obs);
  const CovSmoother cov(plane_obs);
  SmootherOptions mopt;
  mopt.degree = 2;
  mopt.bandwidth = 0.2;
  SurfaceOptions sopt;
  sopt.degree = 1;
  sopt.bandwidth = 0.3;
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double t = u(engine);
    const auto fit = mean.fit_at(t, mopt);
    worst = std::max({worst, std::abs(fit.value - quad(t)), std::abs(fit.slope - dquad(t))});
    double a = u(engine), b = u(engine);
    if (a > b) std::swap(a, b);
    const auto sf = cov.fit_at(a, b, sopt);
    worst = std::max({worst, std::abs(sf.G - plane(a, b)), std::abs(sf.dsG - 1.5), std::abs(sf.dtG + 0.8)});
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-10 && elapsed < 1.0,
          "max error " + fmt("%.3g", worst) + " (tol 1e-10), " + fmt("%.3f", elapsed) + " s (limit 1 s)"};
}

// D_hat from the estimation pipeline (study bandwidth constants) against the
// level of a one-dimensional smoother of Y^2, which keeps the j = k products.
// Both are averaged over the interior evaluation grid [0.1, 0.9].
Outcome diagonal_bias() {
  const double c = 1.5, rho = 0.5;
  const auto cfg = parse_config(R"({"schema_version": 1,
    "model": {"preset": "custom", "mu": 0, "sigma": 0, "xi": 0, "x0": 1.5},
    "design": {"n": 400, "r": 10, "noise_sd": 0.5},
    "estimation": {"h_m_constant": 1.0, "h_G_constant": 2.0, "eval_points": 51}})");
  const auto obs = simulate_observations(cfg, 400, 404);
  const auto res = run_pipeline(cfg, obs);
  SmootherOptions mopt;
  mopt.degree = cfg.estimation.d_mean;
  mopt.bandwidth = res.h_m;
  const auto squares = fit_mean_curve(MeanSmoother::of_squares(obs), res.cov.grid, mopt);
  double bias = 0.0, shift = 0.0, worst = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < res.cov.grid.size(); ++k) {
    const double t = res.cov.grid[k];
    if (t < 0.1 - 1e-9 || t > 0.9 + 1e-9) continue;
    bias += res.cov.D_hat[k] - c * c;
    shift += squares.m_hat[k] - c * c;
    worst = std::max(worst, std::abs(res.cov.D_hat[k] - c * c));
    ++count;
  }
  bias /= count;
  shift /= count;
  const double target = rho * rho;
  return {std::abs(bias) < 0.05 && std::abs(shift - target) <= 0.4 * target,
          "mean D_hat - c^2 " + fmt("%.4f", bias) + " (limit 0.05, pointwise max " + fmt("%.4f", worst) +
              "); diagonal-inclusive shift " + fmt("%.4f", shift) + " (target 0.25 +/- 40%)"};
}

std::string join(const std::vector<double>& v, const char* f) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + fmt(f, v[k]);
  return s;
}

void trend_criteria(const fs::path& configs, Outcome& emse_out, Outcome& xi_out) {
  const auto start = std::chrono::steady_clock::now();
  const auto cfg = load_config(configs / "unit_study.json");
  EmseResult res;
  try {
    res = run_emse(cfg);
  } catch (const std::exception& e) {
    emse_out = xi_out = {false, std::string("study failed: ") + e.what()};
    return;
  }
  const double elapsed = seconds_since(start);
  std::vector<double> med, xi;
  bool decreasing = true;
  for (std::size_t k = 0; k < res.summary.size(); ++k) {
    med.push_back(res.summary[k].median_mu);
    xi.push_back(res.summary[k].median_xi2);
    if (k > 0 && !(med[k] < med[k - 1])) decreasing = false;
  }
  emse_out = {decreasing && elapsed < 600.0 && res.summary.size() == 4,
              "median EMSE(mu) by n: " + join(med, "%.4g") + "; " + fmt("%.1f", elapsed) + " s (limit 600 s)"};
  double ratio = HUGE_VAL;
  std::size_t i100 = 0, i400 = 0;
  for (std::size_t k = 0; k < res.summary.size(); ++k) {
    if (res.summary[k].n == 100) i100 = k + 1;
    if (res.summary[k].n == 400) i400 = k + 1;
  }
  if (i100 && i400) ratio = res.summary[i400 - 1].median_xi2 / res.summary[i100 - 1].median_xi2;
  xi_out = {ratio <= 0.7, "median sup|xi2_hat - xi2| by n: " + join(xi, "%.4g") + "; ratio n=400/n=100 " +
                              fmt("%.3f", ratio) + " (limit 0.7)"};
}

Outcome bootstrap(const fs::path& configs) {
  const auto cfg = load_config(configs / "bootstrap.json");
  const auto obs = simulate_observations(cfg, cfg.design.n.front(), cfg.experiment.master_seed);
  const auto start = std::chrono::steady_clock::now();
  const auto once = run_bootstrap(cfg, obs, cfg.experiment.t_star, cfg.experiment.B);
  const double elapsed = seconds_since(start);
  const auto twice = run_bootstrap(cfg, obs, cfg.experiment.t_star, 2 * cfg.experiment.B);
  std::ostringstream table;
  write_bootstrap_csv(table, once);
  std::cout << table.str();
  double worst = 0.0;
  std::string detail;
  for (std::size_t q = 0; q < once.quantities.size(); ++q) {
    const double a = once.quantities[q].bmse, b = twice.quantities[q].bmse;
    const double change = std::abs(b - a) / a;
    worst = std::max(worst, change);
    detail += once.quantities[q].name + " " + fmt("%.4g", a) + "->" + fmt("%.4g", b) + "; ";
  }
  return {once.quantities.size() == 3 && elapsed < 300.0 && worst < 0.1,
          detail + "max relative change " + fmt("%.3f", worst) + " (limit 0.1), B=" +
              std::to_string(once.B) + " in " + fmt("%.1f", elapsed) + " s (limit 300 s)"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome reproducibility(const Args& args) {
  if (args.cli.empty()) return {false, "no --cli given"};
  const fs::path base = fs::temp_directory_path() / "levyest_acceptance_repro";
  fs::remove_all(base);
  const std::string cfg = (args.configs / "unit_study.json").string();
  struct Run {
    std::string name;
    std::string argv;
  };
  const std::vector<Run> runs{
      {"simulate", "simulate --config " + cfg + " --n 100"},
      {"observe", "observe --config " + cfg + " --n 100"},
      {"estimate", "estimate --config " + cfg},
      {"emse", "emse --config " + cfg},
      {"bootstrap", "bootstrap --config " + (args.configs / "bootstrap.json").string() + " --B 100"},
      {"oracle-check", "oracle-check --config " + (args.configs / "oracle_check.json").string()},
  };
  std::string detail;
  bool pass = true;
  std::size_t compared = 0;
  for (const auto& run : runs) {
    std::vector<fs::path> dirs;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path dir = base / run.name / std::to_string(rep);
      const std::string cmd = "\"" + args.cli + "\" " + run.argv + " --out \"" + dir.string() + "\" > \"" +
                              (base / (run.name + std::to_string(rep) + ".log")).string() + "\" 2>&1";
      fs::create_directories(base);
      const int rc = std::system(cmd.c_str());
      if (rc != 0) {
        pass = false;
        detail += run.name + " exited with " + std::to_string(rc) + "; ";
      }
      dirs.push_back(dir);
    }
    std::set<std::string> names;
    for (const auto& d : dirs) {
      if (!fs::exists(d)) continue;
      for (const auto& e : fs::directory_iterator(d)) names.insert(e.path().filename().string());
    }
    bool same = !names.empty();
    for (const auto& n : names) {
      if (!fs::exists(dirs[0] / n) || !fs::exists(dirs[1] / n) || slurp(dirs[0] / n) != slurp(dirs[1] / n)) {
        same = false;
        detail += run.name + "/" + n + " differs; ";
      }
      ++compared;
    }
    if (!same) pass = false;
  }
  fs::remove_all(base);
  return {pass, detail + std::to_string(runs.size()) + " subcommands, " + std::to_string(compared) +
                    " files compared byte for byte"};
}

}  // namespace

int main(int argc, char** argv) {
  Args args;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) {
      args.cli = argv[++i];
    } else if (a == "--configs" && i + 1 < argc) {
      args.configs = argv[++i];
    } else if (a == "--only" && i + 1 < argc) {
      std::stringstream list(argv[++i]);
      for (std::string item; std::getline(list, item, ',');) args.only.insert(std::stoi(item));
    } else {
      std::cerr << "usage: levyest_acceptance [--cli path] [--configs dir] [--only 1,2,...]\n";
      return 2;
    }
  }
  auto wanted = [&](int k) { return args.only.empty() || args.only.count(k) > 0; };

  int failures = 0;
  auto report = [&](int k, const char* name, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << k << "] " << name << ": " << o.detail << std::endl;
    if (!o.pass) ++failures;
  };
  auto guarded = [](const std::function<Outcome()>& fn) -> Outcome {
    try {
      return fn();
    } catch (const std::exception& e) {
      return {false, std::string("threw: ") + e.what()};
    }
  };

  if (wanted(1)) report(1, "moment identity web", guarded(identity_web));
  if (wanted(2)) report(2, "simulator vs moment ODE", guarded([&] { return simulator_vs_ode(args.configs); }));
  if (wanted(3)) report(3, "polynomial reproduction", guarded(polynomial_reproduction));
  if (wanted(4)) report(4, "diagonal-bias avoidance", guarded(diagonal_bias));
  if (wanted(5) || wanted(6)) {
    Outcome emse, xi;
    try {
      trend_criteria(args.configs, emse, xi);
    } catch (const std::exception& e) {
      emse = xi = {false, std::string("threw: ") + e.what()};
    }
    if (wanted(5)) report(5, "EMSE(mu) decreasing in n", emse);
    if (wanted(6)) report(6, "xi2 sup-error rate", xi);
  }
  if (wanted(7)) report(7, "bootstrap BMSE table", guarded([&] { return bootstrap(args.configs); }));
  if (wanted(8)) report(8, "byte-identical reruns", guarded([&] { return reproducibility(args); }));
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
