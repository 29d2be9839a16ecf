#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qpot/config.hpp"
#include "qpot/model.hpp"
#include "qpot/rates.hpp"
#include "qpot/solver.hpp"

namespace qpot {

inline constexpr const char* kVersion = "1.0.0";

/// Which model to build and its parameters.
struct ModelSpec {
  std::string name = "polar";
  double alpha = 0.0;  // rotation of σ (linear, maier-stein)
  double gamma = 1.0;  // eigenvalue ratio of σ (linear, maier-stein)
  std::string diffusion = "diagonal";  // lambda-phage: "diagonal" or "identity"
};

/// Names accepted by make_model.
std::vector<std::string> registered_models();
/// Throws ConfigError for unknown names (listing the registered ones) or bad parameters.
std::unique_ptr<Model> make_model(const ModelSpec& spec);

struct OutputRequest {
  bool u = true;
  bool labels = false;
  bool gradient = false;
  bool residual = false;
  bool decomposition = false;
  bool csv = false;
  /// Error report against the exact U; defaults to on when the model has one.
  std::optional<bool> error_report;
};

struct RateSettings {
  bool enabled = false;
  double epsilon = 1.0;
  int hessian_stencil_mult = 4;
  HessianSource hessian_source = HessianSource::Mesh;
  std::optional<Vec2> saddle_seed;  // default: the model's known saddle
};

struct StudySettings {
  std::vector<std::size_t> N_list{128, 256, 512, 1024};
  std::optional<int> fixed_K;  // empty: rule-of-thumb K per N
  std::vector<double> alphas{0.0};
  std::vector<double> gammas{1.0};
  int workers = 1;
};

struct RunConfig {
  ModelSpec model;
  std::size_t N = 256;
  int K = 0;  // 0: rule-of-thumb
  std::optional<Domain> domain;
  std::optional<BoundaryPolicy> boundary_policy;
  MidpointCache midpoint_cache = MidpointCache::Auto;
  OutputRequest outputs;
  std::vector<Vec2> map_seeds;
  RateSettings rate;
  StudySettings study;
  std::string output_dir = "qpot_out";

  /// Throws ConfigError on unknown keys or unparsable values.
  static RunConfig from_config(const ConfigMap& config);
  /// Every setting as config keys; from_config(to_config()) reproduces the config.
  ConfigMap to_config() const;

  /// Checks cross-field constraints; throws ConfigError.
  void validate() const;
  int effective_K() const;
  SolverConfig solver_config(const Model& model) const;
};

bool operator==(const RunConfig& a, const RunConfig& b);

struct ManifestFile {
  std::string name;  // relative to the output directory
  std::uintmax_t bytes = 0;
  std::uint32_t crc32 = 0;
  bool produced = true;  // false for files that were already in the directory
};

struct RunManifest {
  std::string command;
  std::string version = kVersion;
  ConfigMap config_echo;
  std::vector<std::pair<std::string, double>> timings;
  std::vector<std::pair<std::string, std::string>> stats;
  std::vector<ManifestFile> files;

  /// key=value text; the config echo appears under "config.", files under "file.".
  std::string to_text() const;
  /// Recovers the config echo and file list from to_text() output.
  static RunManifest parse(std::string_view text);
};

inline constexpr const char* kManifestName = "manifest.txt";

/// Solves, post-processes, and writes the requested outputs to config.output_dir; the
/// manifest is written last. Errors are rethrown as StageError naming the stage, except
/// ConfigError which propagates unchanged.
RunManifest run_single(const RunConfig& config);

/// Solves and traces a MAP from each seed in config.map_seeds.
RunManifest run_map(const RunConfig& config);

/// Solves, locates the saddle, traces the MAP and evaluates the exit-time estimate.
/// Throws ConfigError for models where the estimate does not apply.
RunManifest run_rate(const RunConfig& config);

/// Writes the Lambda Phage binding table as CSV.
RunManifest run_export_tables(const RunConfig& config);

struct StudyRow {
  std::size_t N = 0;
  int K = 0;
  double alpha = 0.0;
  double gamma = 1.0;
  double normalized_max_error = 0.0;
  double rms_error = 0.0;
  double max_abs_error = 0.0;
  double wall_seconds = 0.0;
  bool ok = false;
  std::string failure;
};

struct PowerLawFit {
  double C = 0.0;
  double p = 0.0;
  std::size_t points = 0;
};

/// Least-squares fit of E = C N^-p in log-log space. nullopt with fewer than 3 usable
/// points (positive finite errors).
std::optional<PowerLawFit> fit_power_law(const std::vector<double>& N, const std::vector<double>& E);

struct StudyFit {
  double alpha = 0.0;
  double gamma = 1.0;
  std::optional<PowerLawFit> fit;
  std::string note;  // why the fit is missing
};

struct StudyResult {
  std::vector<StudyRow> rows;
  std::vector<StudyFit> fits;

  std::string rows_csv() const;
  std::string fits_csv() const;
};

/// One solve per (N, α, γ) on a pool of study.workers threads. Failed rows are marked
/// and the study continues. Throws ConfigError if the model has no exact solution.
StudyResult run_convergence_study(const RunConfig& config);

/// run_convergence_study plus study.csv, fit.csv and the manifest.
RunManifest run_sweep(const RunConfig& config);

}  // namespace qpot
