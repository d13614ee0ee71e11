#include "levyest/sde_sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <thread>

#include "levyest/csv.hpp"
#include "levyest/error.hpp"

namespace levyest {

void LevyConfig::validate() const {
  if (!std::isfinite(nu_K) || !(nu_K > 0.0)) {
    throw ValidationError("nu_K must be finite and positive (finite activity of small jumps)");
  }
}

PathGrid::PathGrid(double t0, double t1, std::size_t steps) : t0_(t0), t1_(t1), steps_(steps) {
  if (steps == 0) throw ValidationError("path grid needs at least one step");
  if (!std::isfinite(t0) || !std::isfinite(t1) || !(t1 > t0)) {
    throw ValidationError("path grid requires finite t0 < t1");
  }
}

double PathGrid::at(std::size_t k) const noexcept {
  if (k >= steps_) return t1_;
  return t0_ + dt() * static_cast<double>(k);
}

std::vector<double> PathGrid::points() const {
  std::vector<double> p(steps_ + 1);
  for (std::size_t k = 0; k <= steps_; ++k) p[k] = at(k);
  return p;
}

double InitialLaw::draw(Engine& engine) const {
  if (kind == Kind::point || sd == 0.0) return mean;
  std::normal_distribution<double> nd(mean, sd);
  return nd(engine);
}

std::span<const double> SamplePathSet::row(std::size_t i) const {
  return {values.data() + i * times.size(), times.size()};
}

SamplePathSet SamplePathSet::rescaled_to_unit() const {
  SamplePathSet out = *this;
  const double t0 = times.front();
  const double span = times.back() - t0;
  for (auto& t : out.times) t = (t - t0) / span;
  out.times.front() = 0.0;
  out.times.back() = 1.0;
  return out;
}

double SamplePathSet::interpolate(std::size_t i, double t) const {
  const double lo = times.front(), hi = times.back();
  if (t < lo || t > hi) {
    throw RangeError("time " + csv::format(t) + " outside path grid [" + csv::format(lo) + ", " +
                     csv::format(hi) + "]");
  }
  auto it = std::upper_bound(times.begin(), times.end(), t);
  std::size_t k = static_cast<std::size_t>(it - times.begin());
  if (k >= times.size()) return at(i, times.size() - 1);
  k -= 1;
  const double w = (t - times[k]) / (times[k + 1] - times[k]);
  return (1.0 - w) * at(i, k) + w * at(i, k + 1);
}

namespace {

struct StepTable {
  std::vector<double> drift;      // mu(t_k) dt
  std::vector<double> diffusion;  // sigma(t_k) sqrt(dt)
  std::vector<double> jump;       // xi(t_k)
  double jump_rate;               // nu_K dt
};

StepTable make_steps(const CoefficientSet& coeffs, const LevyConfig& levy, const PathGrid& grid) {
  levy.validate();
  coeffs.validate(grid.points());
  StepTable s;
  const double dt = grid.dt();
  const double sq = std::sqrt(dt);
  s.drift.resize(grid.steps());
  s.diffusion.resize(grid.steps());
  s.jump.resize(grid.steps());
  for (std::size_t k = 0; k < grid.steps(); ++k) {
    const double t = grid.at(k);
    s.drift[k] = coeffs.mu(t) * dt;
    s.diffusion[k] = coeffs.sigma(t) * sq;
    s.jump[k] = coeffs.xi(t);
  }
  s.jump_rate = levy.nu_K * dt;
  return s;
}

std::vector<std::size_t> recorded_indices(std::size_t steps, std::size_t every) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k <= steps; k += every) idx.push_back(k);
  if (idx.back() != steps) idx.push_back(steps);
  return idx;
}

// Writes the recorded states of one path into out (size = recorded points).
void run_path(const StepTable& s, double x0, std::uint64_t seed, std::size_t every,
              std::span<double> out) {
  Engine engine(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::poisson_distribution<int> poisson(s.jump_rate);
  const std::size_t steps = s.drift.size();
  double x = x0;
  std::size_t slot = 0;
  out[slot++] = x;
  for (std::size_t k = 0; k < steps; ++k) {
    const double z = normal(engine);
    const int jumps = poisson(engine);
    x += s.drift[k] * x + s.diffusion[k] * z + s.jump[k] * (static_cast<double>(jumps) - s.jump_rate);
    if (!std::isfinite(x)) throw SimulationDiverged(k + 1, "non-finite state");
    const std::size_t step = k + 1;
    if (step % every == 0 || step == steps) out[slot++] = x;
  }
}

}  // namespace

std::uint64_t path_seed(std::uint64_t master_seed, std::size_t index) noexcept {
  return derive_seed(master_seed, Stream::path, index);
}

std::vector<double> simulate_path(const CoefficientSet& coeffs, const LevyConfig& levy,
                                  const PathGrid& grid, double x0, std::uint64_t seed) {
  const auto steps = make_steps(coeffs, levy, grid);
  std::vector<double> out(grid.steps() + 1);
  run_path(steps, x0, seed, 1, out);
  return out;
}

SamplePathSet simulate_ensemble(const CoefficientSet& coeffs, const LevyConfig& levy,
                                const PathGrid& grid, const InitialLaw& x0_law, std::size_t n,
                                std::uint64_t master_seed, const EnsembleOptions& options) {
  if (n == 0) throw ValidationError("ensemble size must be at least 1");
  const std::size_t every = std::max<std::size_t>(1, options.record_every);
  const auto steps = make_steps(coeffs, levy, grid);
  const auto idx = recorded_indices(grid.steps(), every);

  SamplePathSet set;
  set.coeff_id = coeffs.id + "|nu_K=" + csv::format(levy.nu_K);
  set.times.reserve(idx.size());
  for (auto k : idx) set.times.push_back(grid.at(k));
  set.values.assign(n * idx.size(), 0.0);
  set.seeds.resize(n);
  for (std::size_t i = 0; i < n; ++i) set.seeds[i] = path_seed(master_seed, i);

  const std::size_t width = idx.size();
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Engine init(derive_seed(master_seed, Stream::initial_state, i));
      const double x0 = x0_law.draw(init);
      try {
        run_path(steps, x0, set.seeds[i], every, std::span<double>(set.values).subspan(i * width, width));
      } catch (const SimulationDiverged& e) {
        throw SimulationDiverged(e.step(), "path " + std::to_string(i));
      }
    }
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(n)));
  if (threads == 1) {
    work(0, n);
    return set;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t b = std::min(n, w * chunk), e = std::min(n, b + chunk);
    pool.emplace_back([&, w, b, e] {
      try {
        work(b, e);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return set;
}

void write_paths_csv(std::ostream& out, const SamplePathSet& paths) {
  out << "path_id,t,x\n";
  for (std::size_t i = 0; i < paths.n(); ++i) {
    const std::string id = std::to_string(i);
    for (std::size_t k = 0; k < paths.points(); ++k) {
      out << id << ',' << csv::format(paths.times[k]) << ',' << csv::format(paths.at(i, k)) << '\n';
    }
  }
}

SamplePathSet read_paths_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty paths file");
  ++lineno;
  if (csv::trim(line) != "path_id,t,x") throw ParseError(1, "expected header path_id,t,x");
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 3) throw ParseError(lineno, "expected 3 fields");
    std::string id(f[0]);
    auto [it, inserted] = rows.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.first.push_back(csv::parse_double(f[1], lineno));
    it->second.second.push_back(csv::parse_double(f[2], lineno));
  }
  if (order.empty()) throw ValidationError("paths file has no rows");
  SamplePathSet set;
  set.coeff_id = "csv";
  set.times = rows[order.front()].first;
  for (const auto& id : order) {
    const auto& [t, x] = rows[id];
    if (t != set.times) throw ValidationError("path " + id + " is on a different time grid");
    set.values.insert(set.values.end(), x.begin(), x.end());
    set.seeds.push_back(0);
  }
  return set;
}

}  // namespace levyest
