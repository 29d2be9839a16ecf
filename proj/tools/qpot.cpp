// Command-line front end: solve, sweep, map, rate, export-tables.
#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "qpot/app.hpp"
#include "qpot/errors.hpp"

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

/// Registers a flag whose value is stored under a config key.
void key_option(CLI::App* app, Overrides& out, const std::string& flag, const std::string& key,
                const std::string& help) {
  app->add_option_function<std::string>(
      flag, [&out, key](const std::string& v) { out.emplace_back(key, v); }, help);
}

void key_flag(CLI::App* app, Overrides& out, const std::string& flag, const std::string& key,
              const std::string& help) {
  app->add_flag_function(
      flag, [&out, key](std::int64_t count) { out.emplace_back(key, count > 0 ? "true" : "false"); },
      help);
}

struct Invocation {
  std::string config_path;
  Overrides overrides;
  std::vector<std::string> assignments;  // --set key=value
};

void add_common(CLI::App* app, Invocation& inv) {
  app->add_option("-c,--config", inv.config_path, "Config file (key = value, [section] prefixes)");
  app->add_option("--set", inv.assignments, "Override any config key: key=value (repeatable)");
  key_option(app, inv.overrides, "-m,--model", "model.name", "Model name");
  key_option(app, inv.overrides, "--alpha", "model.alpha", "Rotation angle of the noise matrix");
  key_option(app, inv.overrides, "--gamma", "model.gamma", "Eigenvalue ratio of the noise matrix");
  key_option(app, inv.overrides, "--diffusion", "model.diffusion", "lambda-phage noise: diagonal|identity");
  key_option(app, inv.overrides, "-N,--N", "solver.N", "Mesh intervals per side");
  key_option(app, inv.overrides, "-K,--K", "solver.K", "Update factor (0: rule of thumb)");
  key_option(app, inv.overrides, "--domain", "solver.domain", "xmin,xmax,ymin,ymax");
  key_option(app, inv.overrides, "--boundary", "solver.boundary", "stop|whole");
  key_option(app, inv.overrides, "--cache", "solver.cache", "Midpoint cache: auto|on|off");
  key_option(app, inv.overrides, "-o,--out", "output.dir", "Output directory");
}

void add_field_outputs(CLI::App* app, Invocation& inv) {
  key_flag(app, inv.overrides, "--labels", "output.labels", "Write node labels");
  key_flag(app, inv.overrides, "--gradient", "output.gradient", "Write the gradient of U");
  key_flag(app, inv.overrides, "--residual", "output.residual", "Write the Hamilton-Jacobi residual");
  key_flag(app, inv.overrides, "--decomposition", "output.decomposition", "Write the rotational component");
  key_flag(app, inv.overrides, "--csv", "output.csv", "Write U as CSV");
  key_flag(app, inv.overrides, "--error-report,!--no-error-report", "output.error_report",
           "Error report against the exact U");
}

qpot::RunConfig build_config(const Invocation& inv, bool cli_sets_output_dir) {
  qpot::ConfigMap config;
  if (!inv.config_path.empty()) config = qpot::ConfigMap::load(inv.config_path);
  if (const char* env = std::getenv("QPOT_OUTPUT_DIR"); env && *env && !cli_sets_output_dir) {
    config.set("output.dir", env);
  }
  for (const auto& text : inv.assignments) {
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw qpot::ConfigError("--set expects key=value, got '" + text + "'");
    auto key = text.substr(0, eq);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    config.set(key, text.substr(eq + 1));
  }
  for (const auto& [key, value] : inv.overrides) config.set(key, value);
  return qpot::RunConfig::from_config(config);
}

void print_summary(const qpot::RunManifest& m, const std::string& dir) {
  std::cout << m.command << " finished; outputs in " << dir << "\n";
  for (const auto& [stage, seconds] : m.timings) std::cout << "  " << stage << ": " << seconds << " s\n";
  for (const auto& [key, value] : m.stats) {
    if (key.rfind("error.", 0) == 0 || key.rfind("rate.", 0) == 0 || key.rfind("map.", 0) == 0 ||
        key.rfind("fit.", 0) == 0 || key == "stats.accepted_nodes") {
      std::cout << "  " << key << " = " << value << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quasi-potential solver for 2-D stochastic systems"};
  app.set_version_flag("--version", std::string(qpot::kVersion));
  app.require_subcommand(1);

  Invocation inv;
  auto* solve = app.add_subcommand("solve", "Solve for the quasi-potential and write fields");
  auto* sweep = app.add_subcommand("sweep", "Convergence study over N and (alpha, gamma)");
  auto* map = app.add_subcommand("map", "Solve, then trace minimum action paths");
  auto* rate = app.add_subcommand("rate", "Solve, then estimate the expected exit time");
  auto* tables = app.add_subcommand("export-tables", "Write the Lambda Phage binding table as CSV");

  for (auto* sub : {solve, sweep, map, rate}) add_common(sub, inv);
  for (auto* sub : {solve, map, rate}) add_field_outputs(sub, inv);
  tables->add_option("-c,--config", inv.config_path, "Config file");
  key_option(tables, inv.overrides, "-o,--out", "output.dir", "Output directory");

  key_option(map, inv.overrides, "--seeds", "map.seeds", "x1,y1,x2,y2,... path end points");

  key_option(rate, inv.overrides, "--epsilon", "rate.epsilon", "Noise strength");
  key_option(rate, inv.overrides, "--hessian-source", "rate.hessian_source", "mesh|linearization");
  key_option(rate, inv.overrides, "--hessian-m", "rate.hessian_m", "Hessian stencil width in mesh steps");
  key_option(rate, inv.overrides, "--saddle-seed", "rate.saddle_seed", "x,y start of the saddle search");

  key_option(sweep, inv.overrides, "--Ns", "study.N", "Comma-separated mesh sizes");
  key_option(sweep, inv.overrides, "--study-K", "study.K", "Fixed K, or rule-of-thumb");
  key_option(sweep, inv.overrides, "--alphas", "study.alpha", "Comma-separated alpha values");
  key_option(sweep, inv.overrides, "--gammas", "study.gamma", "Comma-separated gamma values");
  key_option(sweep, inv.overrides, "--workers", "study.workers", "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    bool cli_dir = false;
    for (const auto& [key, value] : inv.overrides) cli_dir = cli_dir || key == "output.dir";
    const qpot::RunConfig config = build_config(inv, cli_dir);
    qpot::RunManifest manifest;
    if (solve->parsed()) manifest = qpot::run_single(config);
    else if (sweep->parsed()) manifest = qpot::run_sweep(config);
    else if (map->parsed()) manifest = qpot::run_map(config);
    else if (rate->parsed()) manifest = qpot::run_rate(config);
    else manifest = qpot::run_export_tables(config);
    print_summary(manifest, config.output_dir);
    return 0;
  } catch (const qpot::ConfigError& e) {
    std::cerr << "error in stage config: " << e.what() << "\n";
    return kExitUsage;
  } catch (const qpot::StageError& e) {
    std::cerr << "error in stage " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
