#include "levyest/observations.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <string>

#include "levyest/csv.hpp"
#include "levyest/error.hpp"

namespace levyest {

namespace {

// Integral over [0, 1] of max(a + b t, floor).
double clipped_linear_mass(double a, double b, double floor) {
  auto line_int = [&](double lo, double hi) { return a * (hi - lo) + 0.5 * b * (hi * hi - lo * lo); };
  if (b == 0.0) return std::max(a, floor);
  const double cross = (floor - a) / b;
  if (cross <= 0.0 || cross >= 1.0) {
    const double mid = a + 0.5 * b;
    return mid >= floor ? line_int(0.0, 1.0) : floor;
  }
  // line below the floor on one side of the crossing
  if (b > 0.0) return floor * cross + line_int(cross, 1.0);
  return line_int(0.0, cross) + floor * (1.0 - cross);
}

}  // namespace

DesignLaw DesignLaw::clipped_linear(double intercept, double slope, double floor) {
  DesignLaw law;
  law.kind = Kind::clipped_linear;
  law.intercept = intercept;
  law.slope = slope;
  law.floor = floor;
  law.validate();
  return law;
}

double DesignLaw::density(double t) const {
  if (t < 0.0 || t > 1.0) return 0.0;
  if (kind == Kind::uniform) return 1.0;
  return std::max(intercept + slope * t, floor) / clipped_linear_mass(intercept, slope, floor);
}

double DesignLaw::min_density() const { return std::min(density(0.0), density(1.0)); }
double DesignLaw::max_density() const { return std::max(density(0.0), density(1.0)); }

void DesignLaw::validate() const {
  if (kind == Kind::uniform) return;
  if (!std::isfinite(intercept) || !std::isfinite(slope) || !std::isfinite(floor) || !(floor > 0.0)) {
    throw ValidationError("clipped-linear design law needs a positive floor");
  }
  if (!(min_density() > 0.0)) throw ValidationError("design density must be bounded away from zero");
}

double DesignLaw::draw(Engine& engine) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (kind == Kind::uniform) return unif(engine);
  const double envelope = max_density();
  while (true) {
    const double t = unif(engine);
    if (unif(engine) * envelope <= density(t)) return t;
  }
}

double NoiseLaw::draw(Engine& engine, double sd) const {
  if (sd == 0.0) return 0.0;
  if (kind == Kind::gaussian) {
    std::normal_distribution<double> nd(0.0, sd);
    return nd(engine);
  }
  const double half = sd * std::sqrt(3.0);
  std::uniform_real_distribution<double> ud(-half, half);
  return ud(engine);
}

void DesignConfig::validate() const {
  if (r < 2) throw ValidationError("need at least r = 2 observations per curve");
  if (!std::isfinite(noise_sd) || noise_sd < 0.0) throw ValidationError("noise_sd must be >= 0");
  design_law.validate();
}

SparseObservations::SparseObservations(std::vector<Curve> curves) : curves_(std::move(curves)) {}

std::size_t SparseObservations::total() const noexcept {
  std::size_t acc = 0;
  for (const auto& c : curves_) acc += c.t.size();
  return acc;
}

double SparseObservations::mean_r() const noexcept {
  return curves_.empty() ? 0.0 : static_cast<double>(total()) / static_cast<double>(curves_.size());
}

std::vector<ObservationRecord> SparseObservations::records() const {
  std::vector<ObservationRecord> out;
  out.reserve(total());
  for (std::size_t i = 0; i < curves_.size(); ++i) {
    for (std::size_t j = 0; j < curves_[i].t.size(); ++j) {
      out.push_back({i, j, curves_[i].t[j], curves_[i].y[j]});
    }
  }
  return out;
}

void SparseObservations::validate() const {
  if (curves_.empty()) throw ValidationError("observations contain no curves");
  for (const auto& c : curves_) {
    if (c.t.size() != c.y.size()) throw ValidationError("curve " + c.id + ": t/y length mismatch");
    if (c.t.size() < 2) throw ValidationError("curve " + c.id + " has fewer than 2 observations");
    for (std::size_t j = 0; j < c.t.size(); ++j) {
      if (!std::isfinite(c.t[j]) || !std::isfinite(c.y[j])) {
        throw ValidationError("curve " + c.id + " has a non-finite value");
      }
      if (c.t[j] < 0.0 || c.t[j] > 1.0) {
        throw ValidationError("curve " + c.id + " has a time outside [0, 1]");
      }
      if (j > 0 && !(c.t[j] > c.t[j - 1])) {
        throw ValidationError("curve " + c.id + " times are not strictly increasing");
      }
    }
  }
}

SparseObservations SparseObservations::resample(std::span<const std::size_t> indices) const {
  std::vector<Curve> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(curves_.at(i));
  return SparseObservations(std::move(out));
}

bool operator==(const SparseObservations& a, const SparseObservations& b) {
  if (a.curves_.size() != b.curves_.size()) return false;
  for (std::size_t i = 0; i < a.curves_.size(); ++i) {
    const auto& x = a.curves_[i];
    const auto& y = b.curves_[i];
    if (x.id != y.id || x.t != y.t || x.y != y.y) return false;
  }
  return true;
}

std::vector<double> draw_design(std::size_t r, const DesignLaw& law, std::uint64_t seed) {
  if (r < 2) throw ValidationError("need at least r = 2 design points");
  Engine engine(seed);
  std::vector<double> t(r);
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (auto& v : t) v = law.draw(engine);
    std::sort(t.begin(), t.end());
    if (std::adjacent_find(t.begin(), t.end()) == t.end()) return t;
  }
  // Still tied after 100 redraws: nudge ties apart.
  for (std::size_t j = 1; j < r; ++j) {
    if (!(t[j] > t[j - 1])) t[j] = std::nextafter(t[j - 1], 2.0);
  }
  if (t.back() > 1.0) {
    t.back() = 1.0;
    for (std::size_t j = r - 1; j-- > 0;) {
      if (!(t[j] < t[j + 1])) t[j] = std::nextafter(t[j + 1], -1.0);
    }
  }
  return t;
}

SparseObservations observe(const SamplePathSet& paths, const DesignConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (paths.n() == 0) throw ValidationError("no paths to observe");
  std::vector<Curve> curves(paths.n());
  for (std::size_t i = 0; i < paths.n(); ++i) {
    Curve& c = curves[i];
    c.id = std::to_string(i);
    c.t = draw_design(cfg.r, cfg.design_law, derive_seed(seed, Stream::design, i));
    Engine noise(derive_seed(seed, Stream::noise, i));
    c.y.resize(c.t.size());
    for (std::size_t j = 0; j < c.t.size(); ++j) {
      c.y[j] = paths.interpolate(i, c.t[j]) + cfg.noise_law.draw(noise, cfg.noise_sd);
    }
  }
  SparseObservations obs(std::move(curves));
  obs.validate();
  return obs;
}

namespace {

SparseObservations assemble(std::vector<std::string>& order,
                            std::map<std::string, std::vector<std::pair<double, double>>>& rows) {
  std::vector<Curve> curves;
  curves.reserve(order.size());
  for (const auto& id : order) {
    auto& pts = rows[id];
    std::stable_sort(pts.begin(), pts.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    Curve c;
    c.id = id;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (j > 0 && pts[j].first == pts[j - 1].first) {
        throw ValidationError("curve " + id + " has duplicate time " + csv::format(pts[j].first));
      }
      c.t.push_back(pts[j].first);
      c.y.push_back(pts[j].second);
    }
    curves.push_back(std::move(c));
  }
  SparseObservations obs(std::move(curves));
  obs.validate();
  return obs;
}

}  // namespace

SparseObservations ingest_csv(std::istream& in, const IngestOptions& options) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ValidationError("observation file is empty");
  ++lineno;
  const auto header = csv::split(line);
  if (header.size() != 3 || header[0] != "curve_id" || header[1] != "t" || header[2] != "y") {
    throw ParseError(lineno, "expected header curve_id,t,y");
  }
  double t0 = 0.0, span = 1.0;
  if (options.rescale_time) {
    t0 = options.rescale_time->first;
    span = options.rescale_time->second - t0;
    if (!(span > 0.0)) throw ValidationError("rescale-time requires t1 > t0");
  }
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<double, double>>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 3) throw ParseError(lineno, "expected 3 fields, got " + std::to_string(f.size()));
    if (f[0].empty()) throw ParseError(lineno, "empty curve_id");
    const double t = (csv::parse_double(f[1], lineno) - t0) / span;
    const double y = csv::parse_double(f[2], lineno);
    std::string id(f[0]);
    auto [it, inserted] = rows.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.emplace_back(t, y);
  }
  if (order.empty()) throw ValidationError("observation file has no data rows");
  return assemble(order, rows);
}

SparseObservations ingest_wide_csv(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> values;
  bool labelled = false;
  bool first = true;
  bool decided = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (csv::trim(line).empty()) continue;
    auto f = csv::split(line);
    double probe = 0.0;
    if (first) {
      first = false;
      // A header row has no numeric field after the optional label column.
      bool any_numeric = false;
      for (std::size_t k = 1; k < f.size(); ++k) any_numeric |= csv::try_parse_double(f[k], probe);
      if (!any_numeric) continue;
    }
    if (!decided) {
      decided = true;
      labelled = !csv::try_parse_double(f[0], probe);
    }
    std::vector<double> row;
    const std::size_t start = labelled ? 1 : 0;
    for (std::size_t k = start; k < f.size(); ++k) row.push_back(csv::parse_double(f[k], lineno));
    if (!values.empty() && row.size() != values.front().size()) {
      throw ParseError(lineno, "row has " + std::to_string(row.size()) + " values, expected " +
                                   std::to_string(values.front().size()));
    }
    ids.push_back(labelled ? std::string(f[0]) : std::to_string(values.size()));
    values.push_back(std::move(row));
  }
  if (values.empty()) throw ValidationError("wide file has no data rows");
  const std::size_t cols = values.front().size();
  std::vector<Curve> curves;
  for (std::size_t i = 0; i < values.size(); ++i) {
    Curve c;
    c.id = ids[i];
    c.y = std::move(values[i]);
    c.t.resize(cols);
    for (std::size_t j = 0; j < cols; ++j) {
      c.t[j] = (static_cast<double>(j) + 0.5) / static_cast<double>(cols);
    }
    curves.push_back(std::move(c));
  }
  SparseObservations obs(std::move(curves));
  obs.validate();
  return obs;
}

void write_observations_csv(std::ostream& out, const SparseObservations& obs) {
  out << "curve_id,t,y\n";
  for (const auto& c : obs.curves()) {
    for (std::size_t j = 0; j < c.t.size(); ++j) {
      out << c.id << ',' << csv::format(c.t[j]) << ',' << csv::format(c.y[j]) << '\n';
    }
  }
}

}  // namespace levyest
