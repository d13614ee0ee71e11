#include "levyest/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string_view>

#include <nlohmann/json.hpp>

#include "levyest/csv.hpp"
#include "levyest/error.hpp"

namespace levyest {

namespace {

using json = nlohmann::json;

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
T get(const json& obj, const char* key, std::string_view where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string(where) + "." + key + ": " + e.what());
  }
}

template <typename T>
void read_if(const json& obj, const char* key, std::string_view where, T& target) {
  if (obj.contains(key)) target = get<T>(obj, key, where);
}

std::vector<double> read_table_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open table file " + file.string());
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    for (const auto& field : csv::split(line, ',')) {
      const auto trimmed = csv::trim(field);
      if (trimmed.empty()) continue;
      values.push_back(csv::parse_double(trimmed, line_no));
    }
  }
  return values;
}

TimeFunction parse_function(const json& spec, const std::string& where, const std::filesystem::path& base) {
  if (spec.is_number()) return TimeFunction::constant(spec.get<double>());
  if (!spec.is_object() || spec.size() != 1) {
    throw ConfigError(where + ": expected a number or one of {constant, sine, table}");
  }
  const auto& [kind, body] = *spec.items().begin();
  if (kind == "constant") return TimeFunction::constant(get<double>(spec, "constant", where));
  if (kind == "sine") {
    const std::string w = where + ".sine";
    check_keys(body, w, {"offset", "amplitude", "frequency", "phase"});
    double offset = 0.0, amplitude = 1.0, frequency = 1.0, phase = 0.0;
    read_if(body, "offset", w, offset);
    read_if(body, "amplitude", w, amplitude);
    read_if(body, "frequency", w, frequency);
    read_if(body, "phase", w, phase);
    return TimeFunction::sine(offset, amplitude, frequency, phase);
  }
  if (kind == "table") {
    const std::string w = where + ".table";
    check_keys(body, w, {"t0", "t1", "values", "file"});
    const double t0 = get<double>(body, "t0", w);
    const double t1 = get<double>(body, "t1", w);
    std::vector<double> values;
    if (body.contains("values") == body.contains("file")) {
      throw ConfigError(w + ": give exactly one of 'values' or 'file'");
    }
    if (body.contains("values")) {
      values = get<std::vector<double>>(body, "values", w);
    } else {
      std::filesystem::path file = get<std::string>(body, "file", w);
      if (file.is_relative()) file = base / file;
      values = read_table_file(file);
    }
    try {
      return TimeFunction::table(t0, t1, std::move(values));
    } catch (const Error& e) {
      throw ConfigError(w + ": " + e.what());
    }
  }
  throw ConfigError(where + ": unknown function kind '" + kind + "'");
}

void parse_model(const json& j, ModelBlock& m, const std::filesystem::path& base) {
  check_keys(j, "model", {"preset", "mu", "sigma", "xi", "nu_K", "jump_size_law", "x0", "time_span",
                          "steps", "record_every", "brownian_scale"});
  read_if(j, "preset", "model", m.preset);
  const bool explicit_coeffs = j.contains("mu") || j.contains("sigma") || j.contains("xi");
  if (m.preset == "supplement") {
    if (explicit_coeffs) throw ConfigError("model: preset 'supplement' fixes mu, sigma and xi");
    m.coeffs = supplement_coefficients();
  } else if (m.preset == "custom") {
    if (!(j.contains("mu") && j.contains("sigma") && j.contains("xi"))) {
      throw ConfigError("model: a custom model needs mu, sigma and xi");
    }
    m.coeffs.mu = parse_function(j["mu"], "model.mu", base);
    m.coeffs.sigma = parse_function(j["sigma"], "model.sigma", base);
    m.coeffs.xi = parse_function(j["xi"], "model.xi", base);
    m.coeffs.id = "custom";
  } else {
    throw ConfigError("model.preset: expected 'supplement' or 'custom', got '" + m.preset + "'");
  }
  read_if(j, "nu_K", "model", m.levy.nu_K);
  read_if(j, "jump_size_law", "model", m.levy.jump_size_law);
  if (j.contains("x0")) {
    const auto& x = j["x0"];
    if (x.is_number()) {
      m.x0 = InitialLaw::point(x.get<double>());
    } else {
      check_keys(x, "model.x0", {"law", "value", "mean", "sd"});
      const auto law = get<std::string>(x, "law", "model.x0");
      if (law == "point") {
        m.x0 = InitialLaw::point(get<double>(x, "value", "model.x0"));
      } else if (law == "normal") {
        m.x0 = InitialLaw::normal(get<double>(x, "mean", "model.x0"), get<double>(x, "sd", "model.x0"));
      } else {
        throw ConfigError("model.x0.law: expected 'point' or 'normal'");
      }
    }
  }
  if (j.contains("time_span")) {
    const auto span = get<std::vector<double>>(j, "time_span", "model");
    if (span.size() != 2) throw ConfigError("model.time_span: expected [t0, t1]");
    m.t0 = span[0];
    m.t1 = span[1];
  }
  read_if(j, "steps", "model", m.steps);
  read_if(j, "record_every", "model", m.record_every);
  read_if(j, "brownian_scale", "model", m.brownian_scale);
}

void parse_design(const json& j, DesignBlock& d) {
  check_keys(j, "design", {"n", "r", "noise_sd", "design_law", "noise_law"});
  if (j.contains("n")) {
    if (j["n"].is_number()) {
      d.n = {get<std::size_t>(j, "n", "design")};
    } else {
      d.n = get<std::vector<std::size_t>>(j, "n", "design");
    }
  }
  read_if(j, "r", "design", d.design.r);
  read_if(j, "noise_sd", "design", d.design.noise_sd);
  if (j.contains("design_law")) {
    const auto& law = j["design_law"];
    if (law.is_string()) {
      if (law.get<std::string>() != "uniform") throw ConfigError("design.design_law: unknown law");
      d.design.design_law = DesignLaw::uniform();
    } else {
      check_keys(law, "design.design_law", {"kind", "intercept", "slope", "floor"});
      const auto kind = get<std::string>(law, "kind", "design.design_law");
      if (kind == "uniform") {
        d.design.design_law = DesignLaw::uniform();
      } else if (kind == "clipped_linear") {
        d.design.design_law = DesignLaw::clipped_linear(get<double>(law, "intercept", "design.design_law"),
                                                        get<double>(law, "slope", "design.design_law"),
                                                        get<double>(law, "floor", "design.design_law"));
      } else {
        throw ConfigError("design.design_law.kind: unknown law '" + kind + "'");
      }
    }
  }
  if (j.contains("noise_law")) {
    const auto law = get<std::string>(j, "noise_law", "design");
    if (law == "gaussian") {
      d.design.noise_law.kind = NoiseLaw::Kind::gaussian;
    } else if (law == "uniform") {
      d.design.noise_law.kind = NoiseLaw::Kind::uniform;
    } else {
      throw ConfigError("design.noise_law: expected 'gaussian' or 'uniform'");
    }
  }
}

std::optional<double> auto_or_number(const json& j, const char* key, std::string_view where) {
  const auto& v = j[key];
  if (v.is_string()) {
    if (v.get<std::string>() != "auto") throw ConfigError(std::string(where) + "." + key + ": expected \"auto\" or a number");
    return std::nullopt;
  }
  return get<double>(j, key, where);
}

void parse_estimation(const json& j, EstimationBlock& e, const std::filesystem::path& base) {
  check_keys(j, "estimation", {"d_mean", "d_cov", "h_m", "h_G", "h_m_constant", "h_G_constant", "epsilon",
                               "kernel", "pair_orientation", "eval_points", "drift_threshold", "drift_threshold_fraction",
                               "policy", "separation_source"});
  read_if(j, "d_mean", "estimation", e.d_mean);
  read_if(j, "d_cov", "estimation", e.d_cov);
  if (j.contains("h_m")) e.h_m = auto_or_number(j, "h_m", "estimation");
  if (j.contains("h_G")) e.h_G = auto_or_number(j, "h_G", "estimation");
  read_if(j, "h_m_constant", "estimation", e.h_m_constant);
  read_if(j, "h_G_constant", "estimation", e.h_G_constant);
  read_if(j, "epsilon", "estimation", e.epsilon);
  if (j.contains("kernel")) {
    try {
      e.kernel = Kernel::from_name(get<std::string>(j, "kernel", "estimation"));
    } catch (const Error& err) {
      throw ConfigError(std::string("estimation.kernel: ") + err.what());
    }
  }
  if (j.contains("pair_orientation")) {
    const auto o = get<std::string>(j, "pair_orientation", "estimation");
    if (o == "upper") {
      e.orientation = PairOrientation::upper;
    } else if (o == "both") {
      e.orientation = PairOrientation::both;
    } else {
      throw ConfigError("estimation.pair_orientation: expected 'upper' or 'both'");
    }
  }
  read_if(j, "eval_points", "estimation", e.eval_points);
  if (j.contains("drift_threshold")) e.drift_threshold = auto_or_number(j, "drift_threshold", "estimation");
  read_if(j, "drift_threshold_fraction", "estimation", e.drift_threshold_fraction);
  if (j.contains("policy") && !j["policy"].is_null()) {
    const auto& p = j["policy"];
    check_keys(p, "estimation.policy", {"kind", "from_model", "value"});
    PolicySpec spec;
    const auto kind = get<std::string>(p, "kind", "estimation.policy");
    if (kind == "known_sigma") {
      spec.kind = SeparationPolicy::Kind::known_sigma;
    } else if (kind == "known_xi") {
      spec.kind = SeparationPolicy::Kind::known_xi;
    } else if (kind == "known_fraction") {
      spec.kind = SeparationPolicy::Kind::known_fraction;
    } else {
      throw ConfigError("estimation.policy.kind: expected known_sigma, known_xi or known_fraction");
    }
    if (p.contains("value")) {
      spec.from_model = false;
      spec.payload = parse_function(p["value"], "estimation.policy.value", base);
      read_if(p, "from_model", "estimation.policy", spec.from_model);
      if (spec.from_model) throw ConfigError("estimation.policy: 'value' conflicts with from_model=true");
    } else {
      read_if(p, "from_model", "estimation.policy", spec.from_model);
      if (!spec.from_model) throw ConfigError("estimation.policy: from_model=false needs a 'value'");
    }
    e.policy = spec;
  }
  if (j.contains("separation_source")) {
    const auto s = get<std::string>(j, "separation_source", "estimation");
    if (s == "triangular") {
      e.source = SeparationSource::triangular;
    } else if (s == "diagonal") {
      e.source = SeparationSource::diagonal;
    } else {
      throw ConfigError("estimation.separation_source: expected 'triangular' or 'diagonal'");
    }
  }
}

void parse_experiment(const json& j, ExperimentBlock& x) {
  check_keys(j, "experiment", {"kind", "replications", "B", "t_star", "master_seed",
                               "emse_region_fraction", "mc_paths", "oracle_step", "check_points"});
  if (j.contains("kind")) {
    const auto k = get<std::string>(j, "kind", "experiment");
    if (k == "estimate") {
      x.kind = ExperimentKind::estimate;
    } else if (k == "emse") {
      x.kind = ExperimentKind::emse;
    } else if (k == "bootstrap") {
      x.kind = ExperimentKind::bootstrap;
    } else if (k == "oracle-check") {
      x.kind = ExperimentKind::oracle_check;
    } else {
      throw ConfigError("experiment.kind: expected estimate, emse, bootstrap or oracle-check");
    }
  }
  read_if(j, "replications", "experiment", x.replications);
  read_if(j, "B", "experiment", x.B);
  read_if(j, "t_star", "experiment", x.t_star);
  read_if(j, "master_seed", "experiment", x.master_seed);
  read_if(j, "emse_region_fraction", "experiment", x.emse_region_fraction);
  read_if(j, "mc_paths", "experiment", x.mc_paths);
  read_if(j, "oracle_step", "experiment", x.oracle_step);
  read_if(j, "check_points", "experiment", x.check_points);
}

void parse_output(const json& j, OutputBlock& o) {
  check_keys(j, "output", {"directory", "formats"});
  if (j.contains("directory")) o.directory = get<std::string>(j, "directory", "output");
  if (j.contains("formats")) {
    const auto formats = get<std::vector<std::string>>(j, "formats", "output");
    o.csv = o.json = false;
    for (const auto& f : formats) {
      if (f == "csv") {
        o.csv = true;
      } else if (f == "json") {
        o.json = true;
      } else {
        throw ConfigError("output.formats: unknown format '" + f + "'");
      }
    }
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (schema_version != kConfigSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(schema_version));
  }
  if (!(model.t1 > model.t0)) throw ConfigError("model.time_span must be increasing");
  if (model.steps == 0) throw ConfigError("model.steps must be positive");
  if (model.record_every == 0) throw ConfigError("model.record_every must be positive");
  if (!(model.brownian_scale > 0.0)) throw ConfigError("model.brownian_scale must be positive");
  try {
    model.levy.validate();
    design.design.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  if (model.x0.kind == InitialLaw::Kind::normal && !(model.x0.sd >= 0.0)) {
    throw ConfigError("model.x0.sd must be non-negative");
  }
  if (design.n.empty()) throw ConfigError("design.n must be nonempty");
  for (std::size_t k = 0; k < design.n.size(); ++k) {
    if (design.n[k] == 0) throw ConfigError("design.n entries must be positive");
    if (k > 0 && design.n[k] <= design.n[k - 1]) throw ConfigError("design.n must be strictly ascending");
  }
  if (estimation.d_mean < 1) throw ConfigError("estimation.d_mean must be at least 1");
  if (estimation.d_cov < 1) throw ConfigError("estimation.d_cov must be at least 1");
  for (const auto& h : {estimation.h_m, estimation.h_G}) {
    if (h && !(*h > 0.0)) throw ConfigError("bandwidths must be positive");
  }
  if (!(estimation.h_m_constant > 0.0) || !(estimation.h_G_constant > 0.0)) {
    throw ConfigError("bandwidth constants must be positive");
  }
  if (!(estimation.drift_threshold_fraction >= 0.0 && estimation.drift_threshold_fraction < 1.0)) {
    throw ConfigError("estimation.drift_threshold_fraction must lie in [0, 1)");
  }
  if (!(estimation.epsilon > 0.0 && estimation.epsilon < 1.0)) {
    throw ConfigError("estimation.epsilon must lie in (0, 1)");
  }
  if (estimation.eval_points < 3) throw ConfigError("estimation.eval_points must be at least 3");
  if (experiment.replications < 1) throw ConfigError("experiment.replications must be at least 1");
  if (experiment.kind == ExperimentKind::bootstrap && experiment.B < 1) {
    throw ConfigError("experiment.B must be at least 1 for bootstrap");
  }
  if (!(experiment.t_star >= 0.0 && experiment.t_star <= 1.0)) {
    throw ConfigError("experiment.t_star must lie in [0, 1]");
  }
  if (!(experiment.emse_region_fraction >= 0.0 && experiment.emse_region_fraction < 1.0)) {
    throw ConfigError("experiment.emse_region_fraction must lie in [0, 1)");
  }
  if (experiment.mc_paths < 2) throw ConfigError("experiment.mc_paths must be at least 2");
  if (!(experiment.oracle_step > 0.0)) throw ConfigError("experiment.oracle_step must be positive");
  if (experiment.check_points < 2) throw ConfigError("experiment.check_points must be at least 2");
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  check_keys(doc, "config", {"schema_version", "model", "design", "estimation", "experiment", "output"});
  ExperimentConfig cfg;
  if (!doc.contains("schema_version")) throw ConfigError("config: missing schema_version");
  cfg.schema_version = get<int>(doc, "schema_version", "config");
  if (cfg.schema_version != kConfigSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(cfg.schema_version));
  }
  if (doc.contains("model")) parse_model(doc["model"], cfg.model, base_dir);
  if (doc.contains("design")) parse_design(doc["design"], cfg.design);
  if (doc.contains("estimation")) parse_estimation(doc["estimation"], cfg.estimation, base_dir);
  if (doc.contains("experiment")) parse_experiment(doc["experiment"], cfg.experiment);
  if (doc.contains("output")) parse_output(doc["output"], cfg.output);
  cfg.canonical = doc.dump();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), file.parent_path().empty() ? "." : file.parent_path());
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::estimate: return "estimate";
    case ExperimentKind::emse: return "emse";
    case ExperimentKind::bootstrap: return "bootstrap";
    case ExperimentKind::oracle_check: return "oracle-check";
  }
  return "unknown";
}

std::uint64_t fnv1a(const std::string& text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace levyest
