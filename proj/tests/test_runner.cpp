#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "mfsc/config.hpp"
#include "mfsc/io.hpp"
#include "mfsc/runner.hpp"

using namespace mfsc;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(MFSC_SOURCE_DIR) / "configs";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "mfsc_test_runner" / name;
  fs::remove_all(p);
  return p;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

// Demo configs shrunk to unit-test size.
std::string small(const std::string& mode) {
  std::string t = read_text_file(kConfigs / ("demo_" + mode + ".toml"));
  t = replace(t, "n_steps = 40", "n_steps = 16");
  if (mode == "meanfield" || mode == "gamma") {
    t = replace(t, "N_list = [32, 128, 512]", "N_list = [8, 16]");
    t = replace(t, "N_ref = 2048", "N_ref = 64");
  }
  if (mode == "sweep") t = replace(t, "N_list = [16, 32, 64]", "N_list = [8, 16]");
  if (mode == "stability") {
    t = replace(t, "stability_N = 64", "stability_N = 16");
    t = replace(t, "pairs = 20", "pairs = 3\nlipschitz_samples = 500");
  }
  return t;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  fs::create_directories(dir);
  const fs::path p = dir / name;
  write_text_file(p, text);
  return p;
}

nlohmann::json manifest(const RunResult& r) { return nlohmann::json::parse(read_text_file(r.manifest)); }

}  // namespace

TEST_CASE("simulate demo writes trajectory and manifest") {
  const fs::path out = scratch("simulate");
  RunOptions o;
  o.out_dir = out;
  const auto r = run_config_file(kConfigs / "demo_simulate.toml", o);
  REQUIRE(r.exit_code == 0);
  CHECK(r.failure_code.empty());
  const auto cfg = validate_config(kConfigs / "demo_simulate.toml").config.value();
  const std::string stem = artifact_stem(cfg);
  CHECK(stem.rfind("simulate_", 0) == 0);
  CHECK(fs::exists(out / (stem + "_trajectory.csv")));
  CHECK(fs::exists(out / "manifest.json"));
  const auto m = manifest(r);
  CHECK(m["status"] == "ok");
  CHECK(m["seed"] == 7);
  CHECK(m["mode"] == "simulate");
  CHECK(m["spec_hash"] == spec_hash_hex8(cfg));
  CHECK(m["artifacts"].size() == r.artifacts.size());
  const auto summary = nlohmann::json::parse(read_text_file(out / (stem + ".json")));
  CHECK(summary["within_growth_bound"] == true);
  const std::string head = read_text_file(out / (stem + "_trajectory.csv")).substr(0, 40);
  CHECK(head.rfind("step,t,particle,role", 0) == 0);
}

TEST_CASE("same seed reproduces identical bytes") {
  const fs::path dir = scratch("repeat");
  const fs::path cfg = write_config(dir, "opt.toml", small("optimize"));
  RunOptions a, b;
  a.out_dir = dir / "a";
  b.out_dir = dir / "b";
  const auto ra = run_config_file(cfg, a);
  const auto rb = run_config_file(cfg, b);
  REQUIRE(ra.exit_code == 0);
  REQUIRE(rb.exit_code == 0);
  REQUIRE(ra.artifacts.size() == rb.artifacts.size());
  for (std::size_t i = 0; i < ra.artifacts.size(); ++i) {
    CHECK(read_text_file(ra.artifacts[i]) == read_text_file(rb.artifacts[i]));
  }
}

TEST_CASE("seed override renames and changes the artifacts") {
  const fs::path dir = scratch("seed");
  const fs::path cfg = write_config(dir, "sim.toml", small("simulate"));
  RunOptions o;
  o.out_dir = dir / "out";
  o.seed = 11;
  const auto r = run_config_file(cfg, o);
  REQUIRE(r.exit_code == 0);
  CHECK(r.artifacts.front().filename().string().find("_s11_") != std::string::npos);
  CHECK(manifest(r)["seed"] == 11);
}

TEST_CASE("reports do not depend on the thread count") {
  for (const char* mode : {"meanfield", "gamma", "stability", "sweep"}) {
    INFO(mode);
    const fs::path dir = scratch(std::string("threads_") + mode);
    const fs::path cfg = write_config(dir, "c.toml", small(mode));
    RunOptions one, two;
    one.out_dir = dir / "t1";
    one.threads = 1;
    two.out_dir = dir / "t2";
    two.threads = 2;
    const auto r1 = run_config_file(cfg, one);
    const auto r2 = run_config_file(cfg, two);
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    REQUIRE(r1.artifacts.size() == 2);
    for (std::size_t i = 0; i < r1.artifacts.size(); ++i) {
      CHECK(read_text_file(r1.artifacts[i]) == read_text_file(r2.artifacts[i]));
    }
    CHECK(manifest(r2)["threads"] == 2);
  }
}

TEST_CASE("gamma mode with zero weight reports all-zero controls") {
  const fs::path dir = scratch("gamma_zero");
  const fs::path cfg = write_config(dir, "g.toml", replace(small("gamma"), "gamma = 20.0", "gamma = 0.0"));
  RunOptions o;
  o.out_dir = dir / "out";
  const auto r = run_config_file(cfg, o);
  REQUIRE(r.exit_code == 0);
  fs::path json;
  for (const auto& a : r.artifacts) {
    if (a.extension() == ".json") json = a;
  }
  const auto rep = nlohmann::json::parse(read_text_file(json));
  for (const auto& row : rep["rows"]) {
    CHECK(row["optimal_cost"] == 0.0);
    CHECK(row["sparsity"] == 1.0);
    for (const auto& cell : row["control"]["values"]) {
      for (const auto& leader : cell) {
        for (const auto& x : leader) CHECK(x.get<double>() == 0.0);
      }
    }
  }
}

TEST_CASE("failures leave a manifest") {
  SUBCASE("invalid config") {
    const fs::path dir = scratch("invalid");
    const fs::path cfg = write_config(dir, "bad.toml", replace(small("simulate"), "U = 1.0", "U = -1"));
    RunOptions o;
    o.out_dir = dir / "out";
    const auto r = run_config_file(cfg, o);
    CHECK(r.exit_code == 2);
    CHECK(r.failure_code == "config.E_CONSTRAINT");
    const auto m = manifest(r);
    CHECK(m["status"] == "failed");
    CHECK(m["failure"]["code"] == "config.E_CONSTRAINT");
    CHECK(m["failure"]["diagnostics"][0]["path"] == "control.U");
  }
  SUBCASE("integration blow-up") {
    const fs::path dir = scratch("blowup");
    std::string t = small("simulate");
    t = replace(t, "strength = 1.0", "strength = 1.0e6");
    t = replace(t, "exponent = 1.0", "exponent = 0.0\nsign = 1.0");
    t = replace(t, "T = 2.0", "T = 400.0");
    const fs::path cfg = write_config(dir, "blow.toml", t);
    RunOptions o;
    o.out_dir = dir / "out";
    const auto r = run_config_file(cfg, o);
    CHECK(r.exit_code == 3);
    CHECK(r.failure_code == "dynamics.E_INTEGRATION");
    CHECK(manifest(r)["failure"]["code"] == "dynamics.E_INTEGRATION");
  }
  SUBCASE("validate only writes nothing") {
    const fs::path dir = scratch("validate");
    const fs::path cfg = write_config(dir, "ok.toml", small("simulate"));
    RunOptions o;
    o.out_dir = dir / "out";
    const auto r = run_config_file(cfg, o, true);
    CHECK(r.exit_code == 0);
    CHECK(r.artifacts.empty());
    CHECK_FALSE(fs::exists(dir / "out" / "manifest.json"));
  }
}

TEST_CASE("output directory precedence") {
  const fs::path dir = scratch("precedence");
  std::string t = replace(small("simulate"), "directory = \"mfsc_out\"", "directory = \"" + (dir / "cfg").string() + "\"");
  const fs::path cfg = write_config(dir, "p.toml", t);
  ::unsetenv("MFSC_OUT_DIR");
  CHECK(run_config_file(cfg, {}).out_dir == dir / "cfg");
  ::setenv("MFSC_OUT_DIR", (dir / "env").c_str(), 1);
  CHECK(run_config_file(cfg, {}).out_dir == dir / "env");
  RunOptions o;
  o.out_dir = dir / "flag";
  CHECK(run_config_file(cfg, o).out_dir == dir / "flag");
  ::unsetenv("MFSC_OUT_DIR");
}
