#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mfsc/config.hpp"

namespace mfsc {

struct RunOptions {
  std::filesystem::path out_dir;       // empty: config output.directory, else "mfsc_out"
  std::optional<std::uint64_t> seed;   // overrides the config seed
  int threads = 0;                     // 0 keeps the OpenMP default
};

struct RunResult {
  int exit_code = 0;          // 0 ok, 2 invalid config, 3 run failure
  std::string failure_code;   // module-qualified, e.g. "dynamics.E_INTEGRATION"
  std::string message;
  std::filesystem::path out_dir;
  std::vector<std::filesystem::path> artifacts;
  std::filesystem::path manifest;
};

// "<mode>_<hash8>_s<seed>"; every artifact name starts with it.
std::string artifact_stem(const ExperimentConfig& config);

// Runs a validated config and writes the artifacts plus manifest.json.
RunResult run_experiment(ExperimentConfig config, const RunOptions& options);

// Validates, then runs. Invalid configs still leave a manifest recording the
// diagnostics under failure code "config.<code>".
RunResult run_config_file(const std::filesystem::path& path, const RunOptions& options, bool validate_only = false);

}  // namespace mfsc
