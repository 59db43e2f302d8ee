#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfsc/control.hpp"
#include "mfsc/cost.hpp"
#include "mfsc/kernels.hpp"
#include "mfsc/limits.hpp"
#include "mfsc/measures.hpp"
#include "mfsc/optimizer.hpp"

namespace mfsc {

// Value of the TOML subset used by experiment configs: tables ([a], [a.b]),
// `key = value` with strings, numbers, booleans and (nested, multi-line)
// arrays, and `#` comments. No inline tables, dates or multi-line strings.
struct TomlValue {
  enum class Kind { number, string, boolean, array };
  Kind kind = Kind::number;
  double number = 0.0;
  bool integer = false;  // written without '.', 'e' or 'E'
  std::string text;
  bool boolean = false;
  std::vector<TomlValue> items;
  int line = 0;
};

struct TomlDocument {
  std::map<std::string, TomlValue> values;  // dotted key path -> value
  std::vector<std::string> tables;
};

class TomlParseError : public std::runtime_error {
 public:
  TomlParseError(const std::string& what, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

TomlDocument parse_toml(const std::string& text);

enum class RunMode { simulate, optimize, meanfield, gamma, stability, sweep };
std::string to_string(RunMode m);

enum class ControlSource { zero, values, optimize };

struct ExperimentConfig {
  RunMode mode = RunMode::simulate;
  std::uint64_t seed = 0;
  int dim = 1;

  Kernel kernel;

  std::vector<double> leader_y;  // m*d
  std::vector<double> leader_w;

  std::size_t followers = 0;  // N for simulate / optimize
  std::optional<InitialDensitySpec> density;
  std::optional<EmpiricalMeasure> follower_atoms;  // explicit followers
  std::string follower_atoms_path;

  std::size_t cells = 1;
  double radius = 1.0;
  ControlSource control_source = ControlSource::zero;
  std::vector<double> control_values;  // cells*m*d

  RunningCost cost;
  std::string target_path;

  double horizon = 1.0;
  std::size_t n_steps = 0;

  std::vector<std::size_t> n_list;
  std::size_t n_ref = 0;
  std::vector<double> gamma_list;
  double delta0 = 1e-3;
  std::size_t pairs = 20;
  std::size_t eval_every = 1;
  std::size_t stability_n = 0;
  int lipschitz_samples = 4000;
  double monotone_slack = 0.05;

  OptimizerOptions optimizer;

  std::string output_directory;
  std::vector<std::string> formats = {"csv", "json"};
  std::size_t snapshot_every = 1;

  std::size_t leaders() const noexcept { return leader_y.size() / static_cast<std::size_t>(dim); }
  ControlSignal control() const;
  Configuration initial_configuration() const;  // simulate / optimize
  OptimalControlProblem problem() const;
  LimitExperimentSpec experiment_spec() const;
};

// Codes: E_PARSE, E_UNKNOWN_KEY, E_TYPE, E_MISSING, E_CONSTRAINT, E_FILE.
struct Diagnostic {
  std::string code;
  std::string path;  // dotted key path, e.g. "control.U"
  std::string message;
  int line = 0;

  std::string str() const;
};

struct ValidationResult {
  std::optional<ExperimentConfig> config;
  std::vector<Diagnostic> diagnostics;

  bool ok() const noexcept { return config.has_value() && diagnostics.empty(); }
  bool has(const std::string& code, const std::string& path) const;
};

// Relative file paths in the config resolve against base_dir.
ValidationResult validate_config_text(const std::string& text, const std::filesystem::path& base_dir = ".");
ValidationResult validate_config(const std::filesystem::path& path);

// Canonical text; validate_config_text(emit_config(c)) yields an equivalent
// config. Explicit follower or target atoms are written inline.
std::string emit_config(const ExperimentConfig& config);

// FNV-1a 64 of the canonical text with seed and output settings cleared.
std::uint64_t spec_hash(const ExperimentConfig& config);
std::string spec_hash_hex8(const ExperimentConfig& config);

}  // namespace mfsc
