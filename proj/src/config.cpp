#include "vfplab/config.hpp"

#include <charconv>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "vfplab/errors.hpp"
#include "vfplab/hermite.hpp"

namespace vfp {

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::thermo: return "thermo";
    case Experiment::front: return "front";
    case Experiment::spectrum: return "spectrum";
    case Experiment::evolve: return "evolve";
    case Experiment::hydro: return "hydro";
    case Experiment::pipeline: return "pipeline";
  }
  return "unknown";
}

Experiment experiment_from_string(std::string_view name) {
  for (auto e : {Experiment::thermo, Experiment::front, Experiment::spectrum, Experiment::evolve,
                 Experiment::hydro, Experiment::pipeline})
    if (name == to_string(e)) return e;
  throw ValidationError(fmt::format(
      "experiment: unknown value '{}' (expected thermo|front|spectrum|evolve|hydro|pipeline)", name));
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected) {
  throw ValidationError(fmt::format("{}: expected {}, got '{}'", key, expected, value));
}

double to_double(std::string_view key, std::string_view v) {
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x)) bad_value(key, v, "a finite number");
  return x;
}

long long to_integer(std::string_view key, std::string_view v) {
  long long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "an integer");
  return x;
}

int to_int(std::string_view key, std::string_view v) {
  const long long x = to_integer(key, v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    bad_value(key, v, "an integer in int range");
  return static_cast<int>(x);
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return x;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "true or false");
}

// Shortest text that reads back to the same double.
std::string fmt_double(double x) { return fmt::format("{}", x); }
std::string fmt_bool(bool b) { return b ? "true" : "false"; }

struct KeySpec {
  ConfigKey doc;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define VFP_DOUBLE(name, member, help)                                                          \
  KeySpec {                                                                                     \
    {name, fmt_double(ExperimentConfig{}.member), help},                                        \
        [](ExperimentConfig& c, std::string_view v) { c.member = to_double(name, v); },         \
        [](const ExperimentConfig& c) { return fmt_double(c.member); }                          \
  }
#define VFP_INT(name, member, help)                                                             \
  KeySpec {                                                                                     \
    {name, std::to_string(ExperimentConfig{}.member), help},                                    \
        [](ExperimentConfig& c, std::string_view v) { c.member = to_int(name, v); },            \
        [](const ExperimentConfig& c) { return std::to_string(c.member); }                      \
  }
#define VFP_BOOL(name, member, help)                                                            \
  KeySpec {                                                                                     \
    {name, fmt_bool(ExperimentConfig{}.member), help},                                          \
        [](ExperimentConfig& c, std::string_view v) { c.member = to_bool(name, v); },           \
        [](const ExperimentConfig& c) { return fmt_bool(c.member); }                            \
  }
#define VFP_STRING(name, member, help)                                                          \
  KeySpec {                                                                                     \
    {name, ExperimentConfig{}.member, help},                                                    \
        [](ExperimentConfig& c, std::string_view v) { c.member = std::string(v); },             \
        [](const ExperimentConfig& c) { return c.member; }                                      \
  }

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
      KeySpec{{"experiment", to_string(ExperimentConfig{}.experiment),
               "thermo|front|spectrum|evolve|hydro|pipeline (set by the subcommand)"},
              [](ExperimentConfig& c, std::string_view v) { c.experiment = experiment_from_string(v); },
              [](const ExperimentConfig& c) { return to_string(c.experiment); }},
      VFP_DOUBLE("beta", params.beta, "inverse temperature"),
      VFP_DOUBLE("n", params.n, "mean total density"),
      VFP_DOUBLE("domain", params.half_width, "half width Z of the domain [-Z, Z]"),
      VFP_INT("nz", params.nz, "grid nodes (odd)"),
      VFP_INT("hermite-order", params.hermite_order, "highest Hermite mode K"),
      KeySpec{{"kernel", to_string(ExperimentConfig{}.params.kernel_kind), "biweight|bump"},
              [](ExperimentConfig& c, std::string_view v) {
                try {
                  c.params.kernel_kind = kernel_kind_from_string(v);
                } catch (const ValidationError&) {
                  bad_value("kernel", v, "biweight or bump");
                }
              },
              [](const ExperimentConfig& c) { return to_string(c.params.kernel_kind); }},
      VFP_DOUBLE("kernel-radius", params.kernel_radius, "kernel support radius R"),
      VFP_DOUBLE("dt", params.dt, "kinetic time step"),
      VFP_DOUBLE("tmax", tmax, "kinetic end time"),
      VFP_DOUBLE("gamma", gamma, "exponent of the (1+z^2)^gamma weight"),
      KeySpec{{"seed", std::to_string(ExperimentConfig{}.seed), "seed for every random draw"},
              [](ExperimentConfig& c, std::string_view v) { c.seed = to_u64("seed", v); },
              [](const ExperimentConfig& c) { return std::to_string(c.seed); }},
      VFP_INT("record-every", record_every, "kinetic steps between diagnostics rows"),
      VFP_DOUBLE("cfl", cfl, "kinetic CFL number (dt <= cfl dz / v_max)"),
      VFP_DOUBLE("k-const", k_const, "energy_combined constant K (0: 10 / nu0)"),
      VFP_BOOL("enforce-symmetry", enforce_symmetry, "average with the mirror state after each step"),
      KeySpec{{"perturbation", to_string(ExperimentConfig{}.perturbation), "gaussian_density|mode1_current"},
              [](ExperimentConfig& c, std::string_view v) {
                try {
                  c.perturbation = perturbation_kind_from_string(v);
                } catch (const ValidationError&) {
                  bad_value("perturbation", v, "gaussian_density or mode1_current");
                }
              },
              [](const ExperimentConfig& c) { return to_string(c.perturbation); }},
      VFP_DOUBLE("amplitude", amplitude, "initial perturbation amplitude"),
      VFP_DOUBLE("noise", noise, "seeded noise level relative to the amplitude"),
      VFP_STRING("checkpoint-file", checkpoint_file, "resume the kinetic run from this checkpoint"),
      VFP_DOUBLE("front-tol", front_tol, "front solver update tolerance"),
      VFP_DOUBLE("front-damping", front_damping, "front solver damping in (0, 1]"),
      VFP_INT("front-max-iter", front_max_iter, "front solver sweep limit"),
      VFP_STRING("front-file", front_file, "load this front instead of solving"),
      VFP_INT("spectrum-k", spectrum_k, "number of eigenpairs of Atilde"),
      VFP_INT("lgap-samples", lgap_samples, "random samples for the L gap probe"),
      VFP_INT("aprime-samples", aprime_samples, "random samples for the A' bound probe"),
      VFP_DOUBLE("hydro-tmax", hydro_tmax, "hydro end time"),
      VFP_DOUBLE("hydro-amplitude", hydro_amplitude, "hydro initial bump amplitude"),
      VFP_DOUBLE("hydro-dt", hydro_dt, "hydro time step (0: stability bound)"),
      VFP_INT("hydro-record-every", hydro_record_every, "hydro steps between diagnostics rows"),
      VFP_BOOL("with-hydro", with_hydro, "pipeline also runs the hydro stage"),
      VFP_STRING("out", out, "output directory"),
  };
  return specs;
}

#undef VFP_DOUBLE
#undef VFP_INT
#undef VFP_BOOL
#undef VFP_STRING

const KeySpec* find_key(std::string_view name) {
  for (const auto& s : key_specs())
    if (s.doc.name == name) return &s;
  return nullptr;
}

void apply(ExperimentConfig& c, const ConfigValues& values, std::string_view origin) {
  for (const auto& [key, value] : values) {
    const KeySpec* spec = find_key(key);
    if (!spec) throw ValidationError(fmt::format("{}: unknown key '{}'", origin, key));
    spec->set(c, value);
  }
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> out;
    for (const auto& s : key_specs()) out.push_back(s.doc);
    return out;
  }();
  return keys;
}

ConfigValues parse_config_text(std::string_view text, std::string_view origin) {
  ConfigValues values;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ValidationError(fmt::format("{}:{}: expected 'key = value'", origin, line_no));
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!find_key(key)) throw ValidationError(fmt::format("{}:{}: unknown key '{}'", origin, line_no, key));
    if (!values.emplace(std::string(key), std::string(value)).second)
      throw ValidationError(fmt::format("{}:{}: duplicate key '{}'", origin, line_no, key));
  }
  return values;
}

ConfigValues read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(fmt::format("config: cannot read '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

ExperimentConfig merge_config(const ConfigValues& file, const ConfigValues& flags) {
  ExperimentConfig c;
  apply(c, file, "config");
  apply(c, flags, "flags");
  return c;
}

void validate_config(const ExperimentConfig& c) {
  c.params.validate();
  auto positive = [](const char* key, double v) {
    if (!(v > 0.0)) throw ValidationError(fmt::format("{}: must be > 0 (got {})", key, v));
  };
  auto at_least = [](const char* key, long long v, long long lo) {
    if (v < lo) throw ValidationError(fmt::format("{}: must be >= {} (got {})", key, lo, v));
  };
  positive("tmax", c.tmax);
  positive("cfl", c.cfl);
  positive("front-tol", c.front_tol);
  positive("hydro-tmax", c.hydro_tmax);
  if (!(c.gamma >= 0.0)) throw ValidationError(fmt::format("gamma: must be >= 0 (got {})", c.gamma));
  if (!(c.k_const >= 0.0)) throw ValidationError(fmt::format("k-const: must be >= 0 (got {})", c.k_const));
  if (!(c.amplitude >= 0.0)) throw ValidationError(fmt::format("amplitude: must be >= 0 (got {})", c.amplitude));
  if (!(c.noise >= 0.0)) throw ValidationError(fmt::format("noise: must be >= 0 (got {})", c.noise));
  if (!(c.hydro_amplitude >= 0.0))
    throw ValidationError(fmt::format("hydro-amplitude: must be >= 0 (got {})", c.hydro_amplitude));
  if (!(c.hydro_dt >= 0.0)) throw ValidationError(fmt::format("hydro-dt: must be >= 0 (got {})", c.hydro_dt));
  if (!(c.front_damping > 0.0 && c.front_damping <= 1.0))
    throw ValidationError(fmt::format("front-damping: must lie in (0, 1] (got {})", c.front_damping));
  at_least("front-max-iter", c.front_max_iter, 1);
  at_least("record-every", c.record_every, 1);
  at_least("hydro-record-every", c.hydro_record_every, 1);
  at_least("spectrum-k", c.spectrum_k, 1);
  at_least("lgap-samples", c.lgap_samples, 1);
  at_least("aprime-samples", c.aprime_samples, 1);
  if (c.spectrum_k > 2 * c.params.nz)
    throw ValidationError(fmt::format("spectrum-k: {} exceeds the matrix size {}", c.spectrum_k, 2 * c.params.nz));
  if (c.perturbation == PerturbationKind::custom)
    throw ValidationError("perturbation: 'custom' needs coefficient data and is only available from the library");
  if (c.out.empty()) throw ValidationError("out: must not be empty");

  const HermiteBasis basis{c.params.hermite_order, c.params.beta};
  const double dt_max = c.cfl * c.params.dz() / max_characteristic_speed(basis);
  if (c.params.dt > dt_max)
    throw ValidationError(fmt::format("dt: {} violates the CFL bound {:.6g} (cfl {} * dz / v_max, dz = {:.6g})",
                                      c.params.dt, dt_max, c.cfl, c.params.dz()));
}

ExperimentConfig parse_config(const std::filesystem::path& path, const ConfigValues& flags) {
  const ConfigValues file = path.empty() ? ConfigValues{} : read_config_file(path);
  ExperimentConfig c = merge_config(file, flags);
  validate_config(c);
  return c;
}

ConfigValues config_values(const ExperimentConfig& config) {
  ConfigValues v;
  for (const auto& s : key_specs()) v.emplace(s.doc.name, s.get(config));
  return v;
}

std::string config_to_text(const ExperimentConfig& config) {
  std::string text;
  for (const auto& s : key_specs()) text += fmt::format("{} = {}\n", s.doc.name, s.get(config));
  return text;
}

KineticOptions kinetic_options(const ExperimentConfig& config) {
  KineticOptions o;
  o.order = config.params.hermite_order;
  o.cfl = config.cfl;
  o.enforce_symmetry = config.enforce_symmetry;
  o.gamma = config.gamma;
  if (config.k_const > 0.0) o.k_const = config.k_const;
  return o;
}

}  // namespace vfp
