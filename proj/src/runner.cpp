#include "mfsc/runner.hpp"

#include <chrono>
#include <cstdlib>

#include <json.hpp>

#include "mfsc/error.hpp"
#include "mfsc/forces.hpp"
#include "mfsc/io.hpp"

#ifndef MFSC_VERSION
#define MFSC_VERSION "dev"
#endif

namespace mfsc {

using ojson = nlohmann::ordered_json;

namespace {

std::filesystem::path resolve_out_dir(const RunOptions& options, const std::string& configured) {
  if (!options.out_dir.empty()) return options.out_dir;
  if (const char* env = std::getenv("MFSC_OUT_DIR"); env && *env) return env;
  if (!configured.empty()) return configured;
  return "mfsc_out";
}

bool wants(const ExperimentConfig& c, const char* fmt) {
  return std::find(c.formats.begin(), c.formats.end(), fmt) != c.formats.end();
}

struct Writer {
  std::filesystem::path dir;
  std::string stem;
  std::vector<std::filesystem::path>* out;

  void put(const std::string& suffix, const std::string& text) {
    const auto p = dir / (stem + suffix);
    write_text_file(p, text);
    out->push_back(p);
  }
};

void write_manifest(const std::filesystem::path& path, const ojson& body) { write_text_file(path, body.dump(2) + "\n"); }

ojson manifest_base(int threads) {
  ojson m;
  m["tool"] = "mfsc";
  m["version"] = MFSC_VERSION;
  m["threads"] = threads > 0 ? threads : thread_count();
  return m;
}

void run_mode(const ExperimentConfig& c, Writer& w) {
  const bool csv = wants(c, "csv"), json = wants(c, "json");
  switch (c.mode) {
    case RunMode::simulate: {
      const ControlSignal u = c.control();
      const Configuration c0 = c.initial_configuration();
      const TimeGrid grid = make_time_grid(u, c.n_steps != 0 ? c.n_steps : default_step_count(u.cells()));
      const Trajectory traj = integrate(c0, u, c.kernel, grid);
      const Envelopes env = envelopes(c0, c.kernel, u.radius(), u.horizon());
      double max_norm = 0.0;
      for (const auto& s : traj.states) max_norm = std::max(max_norm, config_norm(s));
      if (csv) {
        w.put("_trajectory.csv", trajectory_csv(traj, c.snapshot_every));
        w.put("_control.csv", control_csv(u));
      }
      if (json) w.put("_trajectory.json", trajectory_json(traj, c.snapshot_every));
      ojson s;
      s["mode"] = "simulate";
      s["leaders"] = c0.leaders();
      s["followers"] = c0.followers();
      s["steps"] = grid.steps();
      s["initial_norm"] = config_norm(c0);
      s["final_norm"] = config_norm(traj.states.back());
      s["max_norm"] = max_norm;
      s["cbar"] = env.cbar;
      s["growth_bound"] = env.growth_bound;
      s["lipschitz_bound"] = env.lipschitz_bound;
      s["within_growth_bound"] = max_norm <= env.growth_bound;
      s["total_cost"] = total_cost(traj, u, c.cost);
      w.put(".json", s.dump(2) + "\n");
      return;
    }
    case RunMode::optimize: {
      const OptimalControlProblem p = c.problem();
      const ControlSignal u0 = c.control_source == ControlSource::values ? c.control() : p.zero_control();
      const SolveReport r = solve(p, u0);
      if (csv) {
        w.put("_control.csv", control_csv(r.control));
        w.put("_history.csv", history_csv(r));
      }
      w.put(".json", solve_report_json(r));
      return;
    }
    case RunMode::meanfield: {
      const LimitExperimentSpec spec = c.experiment_spec();
      const ConvergenceReport r = meanfield_convergence_experiment(spec, spec.control());
      if (csv) w.put(".csv", convergence_csv(r));
      if (json) w.put(".json", convergence_json(r));
      return;
    }
    case RunMode::gamma: {
      const ConvergenceReport r = gamma_convergence_experiment(c.experiment_spec());
      if (csv) w.put(".csv", convergence_csv(r));
      if (json) w.put(".json", convergence_json(r));
      return;
    }
    case RunMode::stability: {
      const LimitExperimentSpec spec = c.experiment_spec();
      const StabilityReport r = stability_experiment(spec, spec.control(), c.delta0);
      if (csv) w.put(".csv", stability_csv(r));
      if (json) w.put(".json", stability_json(r));
      return;
    }
    case RunMode::sweep: {
      const LimitExperimentSpec spec = c.experiment_spec();
      const SweepReport r = optimal_control_sweep(spec, c.gamma_list);
      if (csv) w.put(".csv", sweep_csv(r));
      if (json) w.put(".json", sweep_json(r));
      return;
    }
  }
}

}  // namespace

std::string artifact_stem(const ExperimentConfig& config) {
  return to_string(config.mode) + "_" + spec_hash_hex8(config) + "_s" + std::to_string(config.seed);
}

RunResult run_experiment(ExperimentConfig config, const RunOptions& options) {
  if (options.seed) config.seed = *options.seed;
  if (options.threads > 0) set_thread_count(options.threads);
  RunResult res;
  res.out_dir = resolve_out_dir(options, config.output_directory);
  res.manifest = res.out_dir / "manifest.json";

  const auto t0 = std::chrono::steady_clock::now();
  Writer w{res.out_dir, artifact_stem(config), &res.artifacts};
  try {
    run_mode(config, w);
  } catch (const IntegrationError& e) {
    res.exit_code = 3;
    res.failure_code = "dynamics.E_INTEGRATION";
    res.message = e.what();
  } catch (const GrowthBoundViolation& e) {
    res.exit_code = 3;
    res.failure_code = "kernels.E_GROWTH";
    res.message = e.what();
  } catch (const InvalidInput& e) {
    res.exit_code = 3;
    res.failure_code = to_string(config.mode) + ".E_INPUT";
    res.message = e.what();
  } catch (const std::exception& e) {
    res.exit_code = 3;
    res.failure_code = "io.E_WRITE";
    res.message = e.what();
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ojson m = manifest_base(options.threads);
  m["mode"] = to_string(config.mode);
  m["seed"] = config.seed;
  m["spec_hash"] = spec_hash_hex8(config);
  m["status"] = res.exit_code == 0 ? "ok" : "failed";
  if (res.exit_code != 0) m["failure"] = {{"code", res.failure_code}, {"message", res.message}};
  ojson arts = ojson::array();
  for (const auto& p : res.artifacts) arts.push_back(p.filename().string());
  m["artifacts"] = std::move(arts);
  m["wall_seconds"] = wall;
  m["config"] = emit_config(config);
  try {
    write_manifest(res.manifest, m);
  } catch (const std::exception& e) {
    if (res.exit_code == 0) {
      res.exit_code = 3;
      res.failure_code = "io.E_WRITE";
      res.message = e.what();
    }
  }
  return res;
}

RunResult run_config_file(const std::filesystem::path& path, const RunOptions& options, bool validate_only) {
  const ValidationResult v = validate_config(path);
  if (!v.ok()) {
    RunResult res;
    res.exit_code = 2;
    res.failure_code = "config." + (v.diagnostics.empty() ? std::string("E_PARSE") : v.diagnostics.front().code);
    res.out_dir = resolve_out_dir(options, "");
    res.manifest = res.out_dir / "manifest.json";
    for (const auto& d : v.diagnostics) res.message += (res.message.empty() ? "" : "\n") + d.str();
    ojson m = manifest_base(options.threads);
    m["config_path"] = path.string();
    m["status"] = "failed";
    ojson diags = ojson::array();
    for (const auto& d : v.diagnostics) {
      diags.push_back({{"code", d.code}, {"path", d.path}, {"message", d.message}, {"line", d.line}});
    }
    m["failure"] = {{"code", res.failure_code}, {"message", res.message}, {"diagnostics", diags}};
    try {
      write_manifest(res.manifest, m);
    } catch (const std::exception&) {
    }
    return res;
  }
  if (validate_only) {
    RunResult res;
    res.out_dir = resolve_out_dir(options, v.config->output_directory);
    return res;
  }
  return run_experiment(*v.config, options);
}

}  // namespace mfsc
