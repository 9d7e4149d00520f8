#pragma once

// Experiment runner: executes the configured stages in order
// (thermo -> front -> spectrum -> evolve / hydro), writes every artifact into
// the output directory and keeps manifest.json current while doing so.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vfplab/config.hpp"
#include "vfplab/io.hpp"

namespace vfp {

enum class FailureKind { none, validation, numerical, internal };

struct StageRecord {
  std::string name;
  std::string status;  // ok | failed | skipped
  double seconds = 0.0;
  std::string message;
  Json summary = Json::object();
};

struct FileRecord {
  std::string name;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string status = "running";  // running | ok | failed
  std::string experiment;
  std::string version;
  std::string started_at;
  std::string finished_at;
  Json config = Json::object();
  std::vector<StageRecord> stages;
  std::vector<FileRecord> files;
  std::optional<std::string> failed_stage;
  std::optional<std::string> error;
  FailureKind failure = FailureKind::none;
};

Json manifest_to_json(const RunManifest& m);

/// Stage names run for an experiment, in order.
std::vector<std::string> stage_plan(const ExperimentConfig& config);

using LogSink = std::function<void(std::string_view)>;

/// Runs the stages of config.experiment. Stage failures do not throw: they are
/// recorded in the manifest (failed_stage, error, failure) and the remaining
/// stages are marked skipped. Throws ValidationError only if the configuration
/// itself is invalid or the output directory cannot be created.
RunManifest run_experiment(const ExperimentConfig& config, const LogSink& log = {});

/// run_experiment with experiment = pipeline.
RunManifest run_pipeline(ExperimentConfig config, const LogSink& log = {});

/// 0 ok, 2 validation failure, 3 numerical failure, 1 anything else.
int exit_code(const RunManifest& m);

/// Independent stream seed derived from the run seed (splitmix64 mixing).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

std::string version_string();

}  // namespace vfp
