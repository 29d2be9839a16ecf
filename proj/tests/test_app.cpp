#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <unistd.h>

#include "qpot/app.hpp"
#include "qpot/errors.hpp"
#include "qpot/io.hpp"

using namespace qpot;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qpot_app_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

std::string config_error(const RunConfig& c) {
  try {
    c.validate();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

/// Every file in the directory is listed with matching size and checksum.
void check_manifest_complete(const fs::path& dir, const RunManifest& m) {
  const RunManifest parsed = RunManifest::parse(read_file(dir / kManifestName));
  CHECK(parsed.command == m.command);
  CHECK(parsed.version == kVersion);
  CHECK(parsed.files.size() == m.files.size());
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name == kManifestName) continue;
    const auto it = std::find_if(parsed.files.begin(), parsed.files.end(),
                                 [&](const ManifestFile& f) { return f.name == name; });
    REQUIRE_MESSAGE(it != parsed.files.end(), name);
    CHECK(it->bytes == fs::file_size(entry.path()));
    CHECK(it->crc32 == crc32_of_file(entry.path()));
  }
  CHECK(RunConfig::from_config(parsed.config_echo) == RunConfig::from_config(m.config_echo));
}

}  // namespace

TEST_CASE("model registry") {
  CHECK(registered_models() == std::vector<std::string>{"linear", "polar", "maier-stein", "lambda-phage"});
  for (const auto& name : registered_models()) {
    ModelSpec spec;
    spec.name = name;
    CHECK(make_model(spec)->name() == name);
  }
  ModelSpec bad;
  bad.name = "lorenz";
  try {
    make_model(bad);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    for (const auto& name : registered_models()) CHECK(what.find(name) != std::string::npos);
  }
  ModelSpec lp;
  lp.name = "lambda-phage";
  lp.diffusion = "isotropic";
  CHECK_THROWS_AS(make_model(lp), ConfigError);
  ModelSpec ms;
  ms.name = "maier-stein";
  ms.gamma = -1.0;
  CHECK_THROWS_AS(make_model(ms), ConfigError);
}

TEST_CASE("run config round trip") {
  RunConfig c;
  c.model.name = "maier-stein";
  c.model.alpha = std::numbers::pi / 5;
  c.model.gamma = 2.0;
  c.N = 300;
  c.K = 17;
  c.domain = Domain{-2, 2, -1.5, 1.5};
  c.boundary_policy = BoundaryPolicy::StopOnBoundary;
  c.midpoint_cache = MidpointCache::Off;
  c.outputs.labels = true;
  c.outputs.error_report = false;
  c.map_seeds = {{1.0, 0.5}, {-0.25, 0.125}};
  c.rate.epsilon = 0.1;
  c.rate.saddle_seed = Vec2{0.1, 0.2};
  c.rate.hessian_source = HessianSource::Linearization;
  c.study.N_list = {64, 128};
  c.study.fixed_K = 9;
  c.study.alphas = {0, 0.3};
  c.study.workers = 3;
  c.output_dir = "/tmp/somewhere";
  const RunConfig back = RunConfig::from_config(ConfigMap::parse(c.to_config().to_text()));
  CHECK(back == c);
  CHECK(back.model.alpha == c.model.alpha);
  CHECK(back.map_seeds.size() == 2);
  CHECK(back.map_seeds[1].y == 0.125);
  CHECK(back.study.fixed_K == 9);
  CHECK(RunConfig::from_config(RunConfig{}.to_config()) == RunConfig{});
}

TEST_CASE("run config rejects bad input") {
  ConfigMap unknown;
  unknown.set("solver.NN", "5");
  CHECK_THROWS_AS(RunConfig::from_config(unknown), ConfigError);
  ConfigMap bad_policy;
  bad_policy.set("solver.boundary", "sometimes");
  CHECK_THROWS_AS(RunConfig::from_config(bad_policy), ConfigError);
  ConfigMap bad_seeds;
  bad_seeds.set("map.seeds", "1,2,3");
  CHECK_THROWS_AS(RunConfig::from_config(bad_seeds), ConfigError);

  RunConfig c;
  CHECK(config_error(c).empty());
  c.N = 8;
  CHECK(config_error(c).find("solver.N") != std::string::npos);
  c = RunConfig{};
  c.rate.epsilon = 0;
  CHECK_FALSE(config_error(c).empty());
  c = RunConfig{};
  c.model.name = "lambda-phage";
  c.outputs.error_report = true;
  CHECK(config_error(c).find("exact") != std::string::npos);
  c = RunConfig{};
  c.domain = Domain{1, -1, 0, 1};
  CHECK_FALSE(config_error(c).empty());
  c = RunConfig{};
  c.model.name = "nope";
  CHECK(config_error(c).find("polar") != std::string::npos);
}

TEST_CASE("effective K and solver config") {
  RunConfig c;
  c.N = 512;
  CHECK(c.effective_K() == rule_of_thumb_K(512));
  c.K = 7;
  CHECK(c.effective_K() == 7);
  c.boundary_policy = BoundaryPolicy::ComputeWholeDomain;
  const auto model = make_model(c.model);
  const SolverConfig s = c.solver_config(*model);
  CHECK(s.K == 7);
  CHECK(s.boundary_policy == BoundaryPolicy::ComputeWholeDomain);
  CHECK(s.domain == model->default_domain());
}

TEST_CASE("manifest text round trip") {
  RunManifest m;
  m.command = "solve";
  m.timings = {{"solve", 1.25}, {"write", 0.5}};
  m.stats = {{"stats.K", "14"}, {"error.rms", "0.001"}};
  m.files = {{"u.bin", 1234, 0xdeadbeef, true}, {"notes.txt", 7, 0x00000001, false}};
  m.config_echo = RunConfig{}.to_config();
  const RunManifest back = RunManifest::parse(m.to_text());
  CHECK(back.command == "solve");
  CHECK(back.version == kVersion);
  CHECK(back.timings == m.timings);
  CHECK(back.config_echo == m.config_echo);
  REQUIRE(back.files.size() == 2);
  CHECK(back.files[0].name == "u.bin");
  CHECK(back.files[0].bytes == 1234);
  CHECK(back.files[0].crc32 == 0xdeadbeef);
  CHECK(back.files[1].crc32 == 1);
  CHECK_FALSE(back.files[1].produced);
  CHECK(m.to_text().find("file.1.crc32 = 00000001") != std::string::npos);
}

TEST_CASE("single polar run writes the field, error report and a complete manifest") {
  const fs::path dir = fresh_dir("single");
  fs::create_directories(dir);
  atomic_write(dir / "preexisting.txt", "left over");
  RunConfig c;
  c.model.name = "polar";
  c.N = 256;
  c.K = 14;
  c.outputs.labels = true;
  c.outputs.gradient = true;
  c.outputs.residual = true;
  c.outputs.decomposition = true;
  c.outputs.csv = true;
  c.output_dir = dir.string();
  const RunManifest m = run_single(c);
  for (const char* name : {"u.bin", "error_report.txt", "labels.bin", "gradient.bin", "residual.bin",
                           "rotational.bin", "u.csv", kManifestName}) {
    CHECK_MESSAGE(fs::exists(dir / name), name);
  }
  const ScalarField u = read_scalar_field(dir / "u.bin");
  CHECK(u.grid.nx() == 256);
  check_manifest_complete(dir, m);
  const auto pre = std::find_if(m.files.begin(), m.files.end(),
                                [](const ManifestFile& f) { return f.name == "preexisting.txt"; });
  REQUIRE(pre != m.files.end());
  CHECK_FALSE(pre->produced);
  const std::string report = read_file(dir / "error_report.txt");
  CHECK(report.find("normalized_max_abs") != std::string::npos);
  // No temporaries remain.
  for (const auto& e : fs::directory_iterator(dir)) {
    CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("map run writes one path per seed") {
  const fs::path dir = fresh_dir("map");
  RunConfig c;
  c.model.name = "linear";
  c.N = 128;
  c.map_seeds = {{0.5, 0.2}, {-0.3, 0.4}};
  c.output_dir = dir.string();
  const RunManifest m = run_map(c);
  CHECK(fs::exists(dir / "map_0.csv"));
  CHECK(fs::exists(dir / "map_1.csv"));
  const auto status = std::find_if(m.stats.begin(), m.stats.end(),
                                   [](const auto& kv) { return kv.first == "map.0.status"; });
  REQUIRE(status != m.stats.end());
  CHECK(status->second == "reached_attractor");
  check_manifest_complete(dir, m);
  fs::remove_all(dir);

  RunConfig none = c;
  none.map_seeds.clear();
  CHECK_THROWS_AS(run_map(none), ConfigError);
  RunConfig outside = c;
  outside.map_seeds = {{5.0, 5.0}};
  CHECK_THROWS_AS(run_map(outside), StageError);
  fs::remove_all(dir);
}

TEST_CASE("rate run refuses the Maier-Stein model") {
  RunConfig c;
  c.model.name = "maier-stein";
  c.output_dir = fresh_dir("ms").string();
  try {
    run_rate(c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("non-differentiable") != std::string::npos);
  }
  CHECK_FALSE(fs::exists(c.output_dir));
  c.model.name = "linear";
  CHECK_THROWS_AS(run_rate(c), ConfigError);  // no saddle
}

TEST_CASE("rate run on the polar test") {
  const fs::path dir = fresh_dir("rate");
  RunConfig c;
  c.model.name = "polar";
  c.N = 256;
  c.boundary_policy = BoundaryPolicy::ComputeWholeDomain;
  c.output_dir = dir.string();
  const RunManifest m = run_rate(c);
  CHECK(fs::exists(dir / "rate.txt"));
  CHECK(fs::exists(dir / "map.csv"));
  const ConfigMap record = ConfigMap::parse(read_file(dir / "rate.txt"));
  const double T = record.get_double("expected_time", 0);
  const double rate = record.get_double("rate", 0);
  CHECK(T > 0);
  CHECK(rate * T == doctest::Approx(1.0));
  CHECK(record.get_double("saddle_x", 0) == doctest::Approx(-3.0));
  check_manifest_complete(dir, m);
  fs::remove_all(dir);
}

TEST_CASE("export tables") {
  const fs::path dir = fresh_dir("tables");
  RunConfig c;
  c.output_dir = dir.string();
  run_export_tables(c);
  const std::string csv = read_file(dir / "lambda_phage_table.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 28);
  fs::remove_all(dir);
}

TEST_CASE("power-law fit") {
  const std::vector<double> N{100, 200, 400, 800};
  std::vector<double> E;
  for (double n : N) E.push_back(0.743 * std::pow(n, -0.928));
  const auto fit = fit_power_law(N, E);
  REQUIRE(fit);
  CHECK(fit->C == doctest::Approx(0.743));
  CHECK(fit->p == doctest::Approx(0.928));
  CHECK(fit->points == 4);
  CHECK_FALSE(fit_power_law({100, 200}, {0.1, 0.05}));
  CHECK_FALSE(fit_power_law({100, 200, 400}, {0.1, 0.0, 0.02}));
}

TEST_CASE("convergence study on the linear test") {
  const fs::path dir = fresh_dir("sweep");
  RunConfig c;
  c.model.name = "linear";
  c.study.N_list = {64, 128, 256};
  c.study.gammas = {1.0, 3.0};
  c.study.workers = 2;
  c.output_dir = dir.string();
  const StudyResult s = run_convergence_study(c);
  REQUIRE(s.rows.size() == 6);
  for (const auto& row : s.rows) {
    CHECK(row.ok);
    CHECK(row.K == rule_of_thumb_K(row.N));
    CHECK(row.normalized_max_error > 0);
  }
  REQUIRE(s.fits.size() == 2);
  for (const auto& f : s.fits) {
    REQUIRE(f.fit);
    CHECK(f.fit->p > 0.8);
  }
  // Rows do not depend on the worker count.
  RunConfig serial = c;
  serial.study.workers = 1;
  const StudyResult t = run_convergence_study(serial);
  for (std::size_t k = 0; k < s.rows.size(); ++k) {
    CHECK(t.rows[k].normalized_max_error == s.rows[k].normalized_max_error);
  }

  const RunManifest m = run_sweep(c);
  CHECK(read_file(dir / "study.csv").rfind("N,K,alpha,gamma,normalized_max_error", 0) == 0);
  CHECK(read_file(dir / "fit.csv").rfind("alpha,gamma,C,p,points,note", 0) == 0);
  check_manifest_complete(dir, m);
  fs::remove_all(dir);
}

TEST_CASE("single-N study emits rows but no fit") {
  RunConfig c;
  c.model.name = "linear";
  c.study.N_list = {64};
  const StudyResult s = run_convergence_study(c);
  REQUIRE(s.rows.size() == 1);
  CHECK(s.rows[0].ok);
  REQUIRE(s.fits.size() == 1);
  CHECK_FALSE(s.fits[0].fit);
  CHECK(s.fits[0].note.find("at least 3") != std::string::npos);
  CHECK(s.fits_csv().find("at least 3") != std::string::npos);
}

TEST_CASE("failed study rows are marked and the study continues") {
  RunConfig c;
  c.model.name = "linear";
  c.study.N_list = {32, 64, 128};
  c.domain = Domain{2, 3, 2, 3};  // excludes the equilibrium
  const StudyResult s = run_convergence_study(c);
  REQUIRE(s.rows.size() == 3);
  for (const auto& row : s.rows) {
    CHECK_FALSE(row.ok);
    CHECK_FALSE(row.failure.empty());
  }
  CHECK(s.rows_csv().find("failed: ") != std::string::npos);
  CHECK_FALSE(s.fits[0].fit);

  RunConfig lp;
  lp.model.name = "lambda-phage";
  CHECK_THROWS_AS(run_convergence_study(lp), ConfigError);
}
