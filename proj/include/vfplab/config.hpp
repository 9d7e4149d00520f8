#pragma once

// Experiment configuration: a flat `key = value` text format whose keys are the
// command-line flag names without the leading dashes. Values are merged as
// flags over file over defaults.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vfplab/core.hpp"
#include "vfplab/kinetic.hpp"

namespace vfp {

enum class Experiment { thermo, front, spectrum, evolve, hydro, pipeline };

std::string to_string(Experiment e);
Experiment experiment_from_string(std::string_view name);

struct ExperimentConfig {
  ModelParams params;
  Experiment experiment = Experiment::pipeline;

  // front
  double front_tol = 1e-12;
  double front_damping = 0.5;
  int front_max_iter = 100000;
  std::string front_file;  // load instead of solving when set

  // spectrum
  int spectrum_k = 4;
  int lgap_samples = 1000;
  int aprime_samples = 500;

  // kinetic evolution
  double tmax = 20.0;
  double gamma = 0.1;
  double cfl = 1.0;
  double k_const = 0.0;  // 0 selects 10 / nu0
  bool enforce_symmetry = false;
  PerturbationKind perturbation = PerturbationKind::gaussian_density;
  double amplitude = 1e-3;
  double noise = 0.0;  // relative level of seeded noise added to the perturbation
  std::string checkpoint_file;  // resume from this state when set
  int record_every = 50;

  // hydro
  double hydro_tmax = 2.0;
  double hydro_amplitude = 0.05;
  double hydro_dt = 0.0;  // 0 selects the stability bound
  int hydro_record_every = 100;
  bool with_hydro = false;  // pipeline: also run the hydro stage

  std::uint64_t seed = 12345;
  std::string out = "out";
};

/// Raw key -> value text, as read from a file or collected from flags.
using ConfigValues = std::map<std::string, std::string, std::less<>>;

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

/// Every accepted key with its default, in documentation order.
const std::vector<ConfigKey>& config_keys();

/// Parses `key = value` lines; `#` starts a comment. Unknown keys and
/// duplicates are rejected with the line number.
ConfigValues parse_config_text(std::string_view text, std::string_view origin = "config");
ConfigValues read_config_file(const std::filesystem::path& path);

/// Defaults, then `file`, then `flags`. Throws ValidationError naming the key
/// for unknown keys and unparsable values.
ExperimentConfig merge_config(const ConfigValues& file, const ConfigValues& flags);

/// All preconditions that can be checked before any stage runs: model
/// parameters (nz parity, domain / radius), the kinetic CFL bound, sample
/// counts and output cadence.
void validate_config(const ExperimentConfig& config);

/// Parses and validates in one go.
ExperimentConfig parse_config(const std::filesystem::path& path, const ConfigValues& flags = {});

/// Canonical key -> value rendering of a config (every key, 17-digit floats).
ConfigValues config_values(const ExperimentConfig& config);
std::string config_to_text(const ExperimentConfig& config);

KineticOptions kinetic_options(const ExperimentConfig& config);

}  // namespace vfp
