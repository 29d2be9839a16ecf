#include "qpot/app.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <thread>

#include "qpot/errors.hpp"
#include "qpot/io.hpp"
#include "qpot/lambda_phage.hpp"
#include "qpot/models.hpp"
#include "qpot/postproc.hpp"

namespace qpot {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Model registry

std::vector<std::string> registered_models() {
  return {"linear", "polar", "maier-stein", "lambda-phage"};
}

namespace {

std::string joined_models() {
  std::string out;
  for (const auto& name : registered_models()) out += (out.empty() ? "" : ", ") + name;
  return out;
}

}  // namespace

std::unique_ptr<Model> make_model(const ModelSpec& spec) {
  try {
    if (spec.name == "linear") {
      return std::make_unique<LinearModel>(LinearModel::test_problem(spec.alpha, spec.gamma));
    }
    if (spec.name == "polar") return std::make_unique<PolarModel>();
    if (spec.name == "maier-stein") return std::make_unique<MaierSteinModel>(spec.alpha, spec.gamma);
    if (spec.name == "lambda-phage") {
      if (spec.diffusion == "diagonal") {
        return std::make_unique<LambdaPhageModel>(LambdaPhageModel::Diffusion::Diagonal);
      }
      if (spec.diffusion == "identity") {
        return std::make_unique<LambdaPhageModel>(LambdaPhageModel::Diffusion::Identity);
      }
      throw ConfigError("lambda-phage diffusion must be 'diagonal' or 'identity', got '" +
                        spec.diffusion + "'");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("invalid parameters for model '" + spec.name + "': " + e.what());
  }
  throw ConfigError("unknown model '" + spec.name + "'; registered models: " + joined_models());
}

// ---------------------------------------------------------------------------
// Run configuration

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "model.name",         "model.alpha",         "model.gamma",          "model.diffusion",
      "solver.N",           "solver.K",            "solver.domain",        "solver.boundary",
      "solver.cache",       "output.dir",          "output.u",             "output.labels",
      "output.gradient",    "output.residual",     "output.decomposition", "output.csv",
      "output.error_report", "map.seeds",          "rate.enabled",         "rate.epsilon",
      "rate.hessian_m",     "rate.hessian_source", "rate.saddle_seed",     "study.N",
      "study.K",            "study.alpha",         "study.gamma",          "study.workers"};
  return keys;
}

std::vector<Vec2> parse_points(const std::vector<double>& flat, const std::string& key) {
  if (flat.size() % 2 != 0) {
    throw ConfigError("config key '" + key + "' needs an even count of numbers (x,y pairs)");
  }
  std::vector<Vec2> out;
  for (std::size_t k = 0; k < flat.size(); k += 2) out.push_back({flat[k], flat[k + 1]});
  return out;
}

std::vector<double> flatten(const std::vector<Vec2>& points) {
  std::vector<double> out;
  for (Vec2 p : points) {
    out.push_back(p.x);
    out.push_back(p.y);
  }
  return out;
}

std::string bool_text(bool v) { return v ? "true" : "false"; }

std::string policy_text(BoundaryPolicy p) {
  return p == BoundaryPolicy::StopOnBoundary ? "stop" : "whole";
}

BoundaryPolicy parse_policy(const std::string& text) {
  if (text == "stop") return BoundaryPolicy::StopOnBoundary;
  if (text == "whole") return BoundaryPolicy::ComputeWholeDomain;
  throw ConfigError("solver.boundary must be 'stop' or 'whole', got '" + text + "'");
}

std::string cache_text(MidpointCache c) {
  switch (c) {
    case MidpointCache::Auto: return "auto";
    case MidpointCache::On: return "on";
    case MidpointCache::Off: return "off";
  }
  return "auto";
}

MidpointCache parse_cache(const std::string& text) {
  if (text == "auto") return MidpointCache::Auto;
  if (text == "on") return MidpointCache::On;
  if (text == "off") return MidpointCache::Off;
  throw ConfigError("solver.cache must be 'auto', 'on' or 'off', got '" + text + "'");
}

std::size_t positive_size(double v, const std::string& key) {
  if (!(v >= 1.0) || v != std::floor(v) || v > 1e9) {
    throw ConfigError("config key '" + key + "' must be a positive integer");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

RunConfig RunConfig::from_config(const ConfigMap& config) {
  for (const auto& [key, value] : config.entries()) {
    if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  RunConfig c;
  c.model.name = config.get_string("model.name", c.model.name);
  c.model.alpha = config.get_double("model.alpha", c.model.alpha);
  c.model.gamma = config.get_double("model.gamma", c.model.gamma);
  c.model.diffusion = config.get_string("model.diffusion", c.model.diffusion);

  const long N = config.get_int("solver.N", static_cast<long>(c.N));
  if (N < 1) throw ConfigError("solver.N must be positive");
  c.N = static_cast<std::size_t>(N);
  c.K = static_cast<int>(config.get_int("solver.K", c.K));
  if (const auto d = config.find("solver.domain")) {
    const auto v = parse_number_list(*d, "config key 'solver.domain'");
    if (v.size() != 4) throw ConfigError("solver.domain needs xmin,xmax,ymin,ymax");
    c.domain = Domain{v[0], v[1], v[2], v[3]};
  }
  if (const auto b = config.find("solver.boundary")) c.boundary_policy = parse_policy(*b);
  c.midpoint_cache = parse_cache(config.get_string("solver.cache", "auto"));

  c.output_dir = config.get_string("output.dir", c.output_dir);
  c.outputs.u = config.get_bool("output.u", c.outputs.u);
  c.outputs.labels = config.get_bool("output.labels", c.outputs.labels);
  c.outputs.gradient = config.get_bool("output.gradient", c.outputs.gradient);
  c.outputs.residual = config.get_bool("output.residual", c.outputs.residual);
  c.outputs.decomposition = config.get_bool("output.decomposition", c.outputs.decomposition);
  c.outputs.csv = config.get_bool("output.csv", c.outputs.csv);
  if (config.contains("output.error_report")) {
    c.outputs.error_report = config.get_bool("output.error_report", false);
  }

  c.map_seeds = parse_points(config.get_doubles("map.seeds", {}), "map.seeds");

  c.rate.enabled = config.get_bool("rate.enabled", c.rate.enabled);
  c.rate.epsilon = config.get_double("rate.epsilon", c.rate.epsilon);
  c.rate.hessian_stencil_mult =
      static_cast<int>(config.get_int("rate.hessian_m", c.rate.hessian_stencil_mult));
  try {
    c.rate.hessian_source =
        parse_hessian_source(config.get_string("rate.hessian_source", "mesh"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("rate.hessian_source: ") + e.what());
  }
  if (config.contains("rate.saddle_seed")) {
    const auto pts = parse_points(config.get_doubles("rate.saddle_seed", {}), "rate.saddle_seed");
    if (pts.size() != 1) throw ConfigError("rate.saddle_seed needs exactly one x,y pair");
    c.rate.saddle_seed = pts[0];
  }

  if (config.contains("study.N")) {
    c.study.N_list.clear();
    for (double v : config.get_doubles("study.N", {})) {
      c.study.N_list.push_back(positive_size(v, "study.N"));
    }
  }
  const std::string krule = config.get_string("study.K", "rule-of-thumb");
  if (krule != "rule-of-thumb") c.study.fixed_K = static_cast<int>(config.get_int("study.K", 0));
  c.study.alphas = config.get_doubles("study.alpha", c.study.alphas);
  c.study.gammas = config.get_doubles("study.gamma", c.study.gammas);
  c.study.workers = static_cast<int>(config.get_int("study.workers", c.study.workers));
  return c;
}

ConfigMap RunConfig::to_config() const {
  ConfigMap m;
  m.set("model.name", model.name);
  m.set("model.alpha", format_double(model.alpha));
  m.set("model.gamma", format_double(model.gamma));
  m.set("model.diffusion", model.diffusion);
  m.set("solver.N", std::to_string(N));
  m.set("solver.K", std::to_string(K));
  if (domain) {
    m.set("solver.domain", format_number_list({domain->xmin, domain->xmax, domain->ymin, domain->ymax}));
  }
  if (boundary_policy) m.set("solver.boundary", policy_text(*boundary_policy));
  m.set("solver.cache", cache_text(midpoint_cache));
  m.set("output.dir", output_dir);
  m.set("output.u", bool_text(outputs.u));
  m.set("output.labels", bool_text(outputs.labels));
  m.set("output.gradient", bool_text(outputs.gradient));
  m.set("output.residual", bool_text(outputs.residual));
  m.set("output.decomposition", bool_text(outputs.decomposition));
  m.set("output.csv", bool_text(outputs.csv));
  if (outputs.error_report) m.set("output.error_report", bool_text(*outputs.error_report));
  if (!map_seeds.empty()) m.set("map.seeds", format_number_list(flatten(map_seeds)));
  m.set("rate.enabled", bool_text(rate.enabled));
  m.set("rate.epsilon", format_double(rate.epsilon));
  m.set("rate.hessian_m", std::to_string(rate.hessian_stencil_mult));
  m.set("rate.hessian_source", to_string(rate.hessian_source));
  if (rate.saddle_seed) m.set("rate.saddle_seed", format_number_list(flatten({*rate.saddle_seed})));
  std::vector<double> ns(study.N_list.begin(), study.N_list.end());
  m.set("study.N", format_number_list(ns));
  m.set("study.K", study.fixed_K ? std::to_string(*study.fixed_K) : "rule-of-thumb");
  m.set("study.alpha", format_number_list(study.alphas));
  m.set("study.gamma", format_number_list(study.gammas));
  m.set("study.workers", std::to_string(study.workers));
  return m;
}

bool operator==(const RunConfig& a, const RunConfig& b) { return a.to_config() == b.to_config(); }

void RunConfig::validate() const {
  const auto model_ptr = make_model(model);
  if (N < 16) throw ConfigError("solver.N must be at least 16");
  if (K < 0) throw ConfigError("solver.K must be nonnegative (0 selects the rule of thumb)");
  if (domain) {
    try {
      domain->validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("solver.domain: ") + e.what());
    }
  }
  if (outputs.error_report.value_or(false) && !model_ptr->has_exact_u()) {
    throw ConfigError("error report requested but model '" + model.name +
                      "' has no exact quasi-potential");
  }
  if (!(rate.epsilon > 0.0)) throw ConfigError("rate.epsilon must be positive");
  if (rate.hessian_stencil_mult < 1) throw ConfigError("rate.hessian_m must be at least 1");
  if (study.workers < 1) throw ConfigError("study.workers must be at least 1");
  if (study.fixed_K && *study.fixed_K < 1) throw ConfigError("study.K must be at least 1");
  for (std::size_t n : study.N_list) {
    if (n < 16) throw ConfigError("study.N entries must be at least 16");
  }
}

int RunConfig::effective_K() const { return K > 0 ? K : rule_of_thumb_K(N); }

SolverConfig RunConfig::solver_config(const Model& m) const {
  SolverConfig s = SolverConfig::for_model(m, N, effective_K());
  if (domain) s.domain = *domain;
  if (boundary_policy) s.boundary_policy = *boundary_policy;
  s.midpoint_cache = midpoint_cache;
  return s;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

std::string crc_text(std::uint32_t crc) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", crc);
  return buf;
}

}  // namespace

std::string RunManifest::to_text() const {
  std::ostringstream out;
  out << "run.command = " << command << "\n";
  out << "run.version = " << version << "\n";
  for (const auto& [stage, seconds] : timings) out << "timing." << stage << " = " << format_double(seconds) << "\n";
  for (const auto& [key, value] : stats) out << key << " = " << value << "\n";
  for (std::size_t k = 0; k < files.size(); ++k) {
    const auto& f = files[k];
    out << "file." << k << ".name = " << f.name << "\n";
    out << "file." << k << ".bytes = " << f.bytes << "\n";
    out << "file." << k << ".crc32 = " << crc_text(f.crc32) << "\n";
    out << "file." << k << ".produced = " << bool_text(f.produced) << "\n";
  }
  for (const auto& [key, value] : config_echo.entries()) out << "config." << key << " = " << value << "\n";
  return out.str();
}

RunManifest RunManifest::parse(std::string_view text) {
  const ConfigMap all = ConfigMap::parse(text);
  RunManifest m;
  m.command = all.get_string("run.command", "");
  m.version = all.get_string("run.version", "");
  std::map<std::size_t, ManifestFile> files;
  for (const auto& [key, value] : all.entries()) {
    if (key.rfind("config.", 0) == 0) {
      m.config_echo.set(key.substr(7), value);
    } else if (key.rfind("timing.", 0) == 0) {
      m.timings.emplace_back(key.substr(7), parse_double(value));
    } else if (key.rfind("file.", 0) == 0) {
      const std::size_t dot = key.find('.', 5);
      if (dot == std::string::npos) throw FormatError("malformed manifest key '" + key + "'");
      const std::size_t index = std::stoul(key.substr(5, dot - 5));
      const std::string field = key.substr(dot + 1);
      ManifestFile& f = files[index];
      if (field == "name") f.name = value;
      else if (field == "bytes") f.bytes = std::stoull(value);
      else if (field == "crc32") f.crc32 = static_cast<std::uint32_t>(std::stoul(value, nullptr, 16));
      else if (field == "produced") f.produced = value == "true";
    } else if (key.rfind("run.", 0) != 0) {
      m.stats.emplace_back(key, value);
    }
  }
  for (auto& [index, f] : files) m.files.push_back(f);
  return m;
}

// ---------------------------------------------------------------------------
// Runs

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Collects the files written by one run and finishes with the manifest.
class OutputDir {
 public:
  OutputDir(const RunConfig& config, std::string command) : dir_(config.output_dir) {
    manifest_.command = std::move(command);
    manifest_.config_echo = config.to_config();
  }

  void write(const std::string& name, std::string_view bytes) {
    atomic_write(dir_ / name, bytes);
    manifest_.files.push_back({name, bytes.size(), crc32_of(bytes), true});
  }
  RunManifest& manifest() { return manifest_; }

  RunManifest finish() {
    std::set<std::string> produced;
    for (const auto& f : manifest_.files) produced.insert(f.name);
    if (fs::exists(dir_)) {
      for (const auto& entry : fs::directory_iterator(dir_)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name == kManifestName || produced.count(name)) continue;
        const std::string bytes = read_file(entry.path());
        manifest_.files.push_back({name, bytes.size(), crc32_of(bytes), false});
      }
    }
    atomic_write(dir_ / kManifestName, manifest_.to_text());
    return manifest_;
  }

 private:
  fs::path dir_;
  RunManifest manifest_;
};

template <typename Fn>
auto in_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

void add_solver_stats(RunManifest& m, const SolveResult& r, int K) {
  auto add = [&](const std::string& key, const std::string& value) {
    m.stats.emplace_back("stats." + key, value);
  };
  add("K", std::to_string(K));
  add("heap_inserts", std::to_string(r.stats.heap_inserts));
  add("heap_decreases", std::to_string(r.stats.heap_decreases));
  add("heap_extractions", std::to_string(r.stats.heap_extractions));
  add("one_point_updates", std::to_string(r.stats.one_point_updates));
  add("triangle_solves", std::to_string(r.stats.triangle_solves));
  add("triangle_interior", std::to_string(r.stats.triangle_interior));
  add("root_failures", std::to_string(r.stats.root_failures));
  add("degenerate_triangles", std::to_string(r.stats.degenerate_triangles));
  add("reached_boundary", bool_text(r.stats.reached_boundary));
  add("max_anisotropy", format_double(r.stats.max_anisotropy));
  std::size_t accepted = 0;
  for (NodeIndex n = 0; n < r.labels.values.size(); ++n) accepted += r.accepted(n) ? 1 : 0;
  add("accepted_nodes", std::to_string(accepted));
  for (std::size_t k = 0; k < r.warnings.size(); ++k) add("warning." + std::to_string(k), r.warnings[k]);
}

struct Solved {
  std::unique_ptr<Model> model;
  SolveResult result;
  ScalarField u;  // accepted nodes only
};

Solved solve_stage(const RunConfig& config, OutputDir& out) {
  config.validate();
  auto model = make_model(config.model);
  const auto t0 = Clock::now();
  SolveResult result = in_stage("solve", [&] { return solve(*model, config.solver_config(*model)); });
  out.manifest().timings.emplace_back("solve", seconds_since(t0));
  add_solver_stats(out.manifest(), result, config.effective_K());
  ScalarField u = accepted_field(result);
  return Solved{std::move(model), std::move(result), std::move(u)};
}

std::string error_report_text(const ErrorReport& e) {
  std::ostringstream out;
  out << "max_abs = " << format_double(e.max_abs) << "\n"
      << "rms = " << format_double(e.rms) << "\n"
      << "normalized_max_abs = " << format_double(e.normalized_max_abs) << "\n"
      << "max_u = " << format_double(e.max_u) << "\n"
      << "n_valid_nodes = " << e.n_valid_nodes << "\n";
  return out.str();
}

void write_field_outputs(const RunConfig& config, const Solved& s, OutputDir& out) {
  const auto t0 = Clock::now();
  in_stage("postprocess", [&] {
    if (config.outputs.u) out.write("u.bin", encode_field(s.result.u));
    if (config.outputs.csv) out.write("u.csv", field_csv(s.u));
    if (config.outputs.labels) out.write("labels.bin", encode_field(s.result.labels));
    if (config.outputs.gradient) out.write("gradient.bin", encode_field(gradient_field(s.u)));
    if (config.outputs.residual) out.write("residual.bin", encode_field(hj_residual(s.u, *s.model)));
    if (config.outputs.decomposition) {
      const Decomposition d = decompose_field(s.u, *s.model);
      out.write("rotational.bin", encode_field(d.rotational));
      out.manifest().stats.emplace_back("stats.decomposition_anisotropic_caveat",
                                        bool_text(d.anisotropic_caveat));
    }
    if (config.outputs.error_report.value_or(s.model->has_exact_u())) {
      const ErrorReport e = error_report(s.result, *s.model);
      out.write("error_report.txt", error_report_text(e));
      out.manifest().stats.emplace_back("error.normalized_max_abs", format_double(e.normalized_max_abs));
      out.manifest().stats.emplace_back("error.rms", format_double(e.rms));
    }
    return 0;
  });
  out.manifest().timings.emplace_back("postprocess", seconds_since(t0));
}

}  // namespace

RunManifest run_single(const RunConfig& config) {
  OutputDir out(config, "solve");
  const Solved s = solve_stage(config, out);
  write_field_outputs(config, s, out);
  return in_stage("write", [&] { return out.finish(); });
}

RunManifest run_map(const RunConfig& config) {
  if (config.map_seeds.empty()) throw ConfigError("map requires at least one seed (map.seeds)");
  OutputDir out(config, "map");
  const Solved s = solve_stage(config, out);
  write_field_outputs(config, s, out);
  const auto t0 = Clock::now();
  in_stage("map", [&] {
    const VectorField grad = gradient_field(s.u);
    for (std::size_t k = 0; k < config.map_seeds.size(); ++k) {
      const MapTrace trace = trace_map(s.u, grad, *s.model, config.map_seeds[k]);
      const std::string key = "map." + std::to_string(k);
      out.write("map_" + std::to_string(k) + ".csv", path_csv(trace.path));
      out.manifest().stats.emplace_back(key + ".status", to_string(trace.status));
      out.manifest().stats.emplace_back(key + ".steps", std::to_string(trace.steps));
      out.manifest().stats.emplace_back(key + ".length", format_double(trace.path.length()));
    }
    return 0;
  });
  out.manifest().timings.emplace_back("map", seconds_since(t0));
  return in_stage("write", [&] { return out.finish(); });
}

namespace {

Vec2 default_saddle_seed(const RunConfig& config, const Model& model) {
  if (config.rate.saddle_seed) return *config.rate.saddle_seed;
  if (const auto* lp = dynamic_cast<const LambdaPhageModel*>(&model)) return lp->saddle_seed();
  if (dynamic_cast<const PolarModel*>(&model)) return PolarModel::saddle();
  throw ConfigError("model '" + config.model.name +
                    "' has no known saddle; set rate.saddle_seed to a point near one");
}

}  // namespace

RunManifest run_rate(const RunConfig& config) {
  if (config.model.name == "maier-stein") {
    throw ConfigError(
        "rate estimate refused for maier-stein: its quasi-potential is non-differentiable at "
        "the saddle point (0, 0), so the sharp exit-time formula, which needs U twice "
        "differentiable there, is not applicable");
  }
  config.validate();
  {
    const auto probe = make_model(config.model);
    if (probe->attractor().kind != AttractorSpec::Kind::StablePoint) {
      throw ConfigError("rate estimate needs a stable-point attractor");
    }
    (void)default_saddle_seed(config, *probe);
  }
  OutputDir out(config, "rate");
  const Solved s = solve_stage(config, out);
  write_field_outputs(config, s, out);

  const Vec2 equilibrium = s.model->attractor().point;
  const auto t0 = Clock::now();
  const Vec2 saddle =
      in_stage("saddle", [&] { return find_saddle(*s.model, default_saddle_seed(config, *s.model)); });
  const VectorField grad = gradient_field(s.u);
  const Path map = in_stage("map", [&] { return map_to_saddle(s.u, grad, *s.model, saddle, equilibrium); });
  RateRequest request;
  request.epsilon = config.rate.epsilon;
  request.saddle = saddle;
  request.equilibrium = equilibrium;
  request.map = map;
  request.hessian_stencil_mult = config.rate.hessian_stencil_mult;
  request.hessian_source = config.rate.hessian_source;
  const RateEstimate est = in_stage("rate", [&] { return transition_time(request, s.u, *s.model); });
  out.manifest().timings.emplace_back("rate", seconds_since(t0));

  std::string record = "saddle_x=" + format_double(saddle.x) + "\nsaddle_y=" + format_double(saddle.y) +
                       "\nequilibrium_x=" + format_double(equilibrium.x) +
                       "\nequilibrium_y=" + format_double(equilibrium.y) +
                       "\nepsilon=" + format_double(config.rate.epsilon) +
                       "\nhessian_source=" + to_string(config.rate.hessian_source) + "\n" +
                       est.to_record();
  in_stage("write", [&] {
    out.write("rate.txt", record);
    out.write("map.csv", path_csv(map));
    return 0;
  });
  std::istringstream lines(est.to_record());
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) out.manifest().stats.emplace_back("rate." + line.substr(0, eq), line.substr(eq + 1));
  }
  out.manifest().stats.emplace_back("rate.saddle", format_number_list({saddle.x, saddle.y}));
  return in_stage("write", [&] { return out.finish(); });
}

RunManifest run_export_tables(const RunConfig& config) {
  OutputDir out(config, "export-tables");
  in_stage("write", [&] {
    out.write("lambda_phage_table.csv", lambda_phage_table_csv(LambdaPhageParams::defaults()));
    return 0;
  });
  return in_stage("write", [&] { return out.finish(); });
}

// ---------------------------------------------------------------------------
// Convergence studies

std::optional<PowerLawFit> fit_power_law(const std::vector<double>& N, const std::vector<double>& E) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < std::min(N.size(), E.size()); ++k) {
    if (N[k] > 0.0 && E[k] > 0.0 && std::isfinite(E[k])) pts.emplace_back(std::log(N[k]), std::log(E[k]));
  }
  if (pts.size() < 3) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(pts.size());
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return std::nullopt;
  const double slope = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - slope * sx) / n;
  return PowerLawFit{std::exp(intercept), -slope, pts.size()};
}

std::string StudyResult::rows_csv() const {
  std::string out = "N,K,alpha,gamma,normalized_max_error,rms_error,max_abs_error,wall_seconds,status\n";
  for (const auto& r : rows) {
    out += std::to_string(r.N) + "," + std::to_string(r.K) + "," + format_double(r.alpha) + "," +
           format_double(r.gamma) + ",";
    if (r.ok) {
      out += format_double(r.normalized_max_error) + "," + format_double(r.rms_error) + "," +
             format_double(r.max_abs_error) + "," + format_double(r.wall_seconds) + ",ok\n";
    } else {
      std::string why = r.failure;
      std::replace(why.begin(), why.end(), ',', ';');
      std::replace(why.begin(), why.end(), '\n', ' ');
      out += ",,,," + std::string("failed: ") + why + "\n";
    }
  }
  return out;
}

std::string StudyResult::fits_csv() const {
  std::string out = "alpha,gamma,C,p,points,note\n";
  for (const auto& f : fits) {
    out += format_double(f.alpha) + "," + format_double(f.gamma) + ",";
    if (f.fit) {
      out += format_double(f.fit->C) + "," + format_double(f.fit->p) + "," +
             std::to_string(f.fit->points) + ",\n";
    } else {
      out += ",,," + f.note + "\n";
    }
  }
  return out;
}

StudyResult run_convergence_study(const RunConfig& config) {
  config.validate();
  if (!make_model(config.model)->has_exact_u()) {
    throw ConfigError("convergence study needs a model with an exact quasi-potential; '" +
                      config.model.name + "' has none");
  }
  if (config.study.N_list.empty()) throw ConfigError("study.N is empty");

  StudyResult result;
  for (double alpha : config.study.alphas) {
    for (double gamma : config.study.gammas) {
      for (std::size_t N : config.study.N_list) {
        StudyRow row;
        row.N = N;
        row.K = config.study.fixed_K.value_or(rule_of_thumb_K(N));
        row.alpha = alpha;
        row.gamma = gamma;
        result.rows.push_back(row);
      }
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < result.rows.size(); k = next++) {
      StudyRow& row = result.rows[k];
      try {
        RunConfig rc = config;
        rc.model.alpha = row.alpha;
        rc.model.gamma = row.gamma;
        rc.N = row.N;
        rc.K = row.K;
        const auto model = make_model(rc.model);
        const SolveResult r = solve(*model, rc.solver_config(*model));
        const ErrorReport e = error_report(r, *model);
        row.normalized_max_error = e.normalized_max_abs;
        row.rms_error = e.rms;
        row.max_abs_error = e.max_abs;
        row.wall_seconds = r.stats.wall_seconds;
        row.ok = true;
      } catch (const std::exception& e) {
        row.ok = false;
        row.failure = e.what();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(config.study.workers, static_cast<int>(result.rows.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (double alpha : config.study.alphas) {
    for (double gamma : config.study.gammas) {
      std::vector<double> ns, es;
      for (const auto& row : result.rows) {
        if (row.alpha == alpha && row.gamma == gamma && row.ok) {
          ns.push_back(static_cast<double>(row.N));
          es.push_back(row.normalized_max_error);
        }
      }
      StudyFit fit{alpha, gamma, fit_power_law(ns, es), ""};
      if (!fit.fit) fit.note = "fit needs at least 3 successful rows";
      result.fits.push_back(fit);
    }
  }
  return result;
}

RunManifest run_sweep(const RunConfig& config) {
  OutputDir out(config, "sweep");
  const auto t0 = Clock::now();
  const StudyResult study = run_convergence_study(config);
  out.manifest().timings.emplace_back("study", seconds_since(t0));
  std::size_t failed = 0;
  for (const auto& row : study.rows) failed += row.ok ? 0 : 1;
  out.manifest().stats.emplace_back("study.rows", std::to_string(study.rows.size()));
  out.manifest().stats.emplace_back("study.failed_rows", std::to_string(failed));
  for (const auto& f : study.fits) {
    const std::string key = "fit.alpha_" + format_double(f.alpha) + "_gamma_" + format_double(f.gamma);
    out.manifest().stats.emplace_back(key + ".p", f.fit ? format_double(f.fit->p) : "none");
  }
  in_stage("write", [&] {
    out.write("study.csv", study.rows_csv());
    out.write("fit.csv", study.fits_csv());
    return 0;
  });
  return in_stage("write", [&] { return out.finish(); });
}

}  // namespace qpot
