// Command-line runner. Every configuration key is also a flag of the same
// name; values given as flags override the --config file, which overrides the
// defaults.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <iostream>
#include <map>

#include "vfplab/config.hpp"
#include "vfplab/errors.hpp"
#include "vfplab/experiment.hpp"

namespace {

struct SubcommandFlags {
  std::string config_path;
  std::map<std::string, std::string> raw;  // key -> flag value, only keys given on the command line
  bool print_config = false;
  bool quiet = false;
};

const char* describe(vfp::Experiment e) {
  switch (e) {
    case vfp::Experiment::thermo: return "coexistence densities of the double well";
    case vfp::Experiment::front: return "solve (or load) and save the front profile";
    case vfp::Experiment::spectrum: return "spectrum of the linearized operator around the front";
    case vfp::Experiment::evolve: return "kinetic evolution of a perturbation of the front";
    case vfp::Experiment::hydro: return "macroscopic gradient flow started near the front";
    case vfp::Experiment::pipeline: return "thermo, front, spectrum and evolve in one run";
  }
  return "";
}

void add_key_flags(CLI::App* sub, SubcommandFlags& flags) {
  sub->add_option("--config", flags.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  sub->add_flag("--print-config", flags.print_config, "print the merged configuration and exit");
  sub->add_flag("-q,--quiet", flags.quiet, "no progress messages on stderr");
  for (const auto& key : vfp::config_keys()) {
    if (key.name == "experiment") continue;
    sub->add_option_function<std::string>(
           "--" + key.name, [&flags, name = key.name](const std::string& v) { flags.raw[name] = v; },
           fmt::format("{} (default {})", key.help, key.default_value.empty() ? "\"\"" : key.default_value))
        ->type_name("VALUE");
  }
}

void print_summary(const vfp::RunManifest& m, const std::string& out) {
  for (const auto& st : m.stages) {
    std::cout << fmt::format("{:<9} {:<8}", st.name, st.status);
    if (st.status == "ok") std::cout << fmt::format(" {:7.2f} s  {}", st.seconds, st.summary.dump());
    std::cout << '\n';
  }
  if (m.failed_stage) std::cout << fmt::format("error in stage '{}': {}\n", *m.failed_stage, m.error.value_or(""));
  std::cout << fmt::format("manifest: {}/manifest.json ({})\n", out, m.status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vfplab: two-species Vlasov-Fokker-Planck front stability lab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", vfp::version_string());

  std::map<vfp::Experiment, SubcommandFlags> flags;
  std::map<CLI::App*, vfp::Experiment> subs;
  for (auto e : {vfp::Experiment::thermo, vfp::Experiment::front, vfp::Experiment::spectrum,
                 vfp::Experiment::evolve, vfp::Experiment::hydro, vfp::Experiment::pipeline}) {
    CLI::App* sub = app.add_subcommand(vfp::to_string(e), describe(e));
    add_key_flags(sub, flags[e]);
    subs[sub] = e;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  vfp::Experiment experiment = vfp::Experiment::pipeline;
  for (const auto& [sub, e] : subs)
    if (sub->parsed()) experiment = e;
  const SubcommandFlags& f = flags[experiment];

  try {
    vfp::ConfigValues values(f.raw.begin(), f.raw.end());
    values["experiment"] = vfp::to_string(experiment);
    const vfp::ExperimentConfig config = vfp::parse_config(f.config_path, values);
    if (f.print_config) {
      std::cout << vfp::config_to_text(config);
      return 0;
    }
    vfp::LogSink log;
    if (!f.quiet) log = [](std::string_view msg) { std::cerr << msg << '\n'; };
    const auto manifest = vfp::run_experiment(config, log);
    print_summary(manifest, config.out);
    return vfp::exit_code(manifest);
  } catch (const vfp::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const vfp::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
