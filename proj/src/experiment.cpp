#include "vfplab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fmt/chrono.h>
#include <fmt/format.h>

#include "vfplab/errors.hpp"
#include "vfplab/front.hpp"
#include "vfplab/hydro.hpp"
#include "vfplab/kinetic.hpp"
#include "vfplab/spectral.hpp"
#include "vfplab/thermo.hpp"

#ifndef VFPLAB_VERSION
#define VFPLAB_VERSION "0.0.0"
#endif

namespace vfp {

std::string version_string() { return VFPLAB_VERSION; }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

std::string utc_now() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(std::chrono::system_clock::now())));
}

std::string failure_name(FailureKind k) {
  switch (k) {
    case FailureKind::none: return "none";
    case FailureKind::validation: return "validation";
    case FailureKind::numerical: return "numerical";
    case FailureKind::internal: return "internal";
  }
  return "internal";
}

enum : std::uint64_t { kStreamLgap = 1, kStreamAprime = 2, kStreamNoise = 3 };

class Runner {
 public:
  Runner(const ExperimentConfig& config, const LogSink& log)
      : config_(config), out_(config.out), log_(log) {}

  RunManifest run();

 private:
  void stage_thermo(StageRecord& st);
  void stage_front(StageRecord& st);
  void stage_spectrum(StageRecord& st);
  void stage_evolve(StageRecord& st);
  void stage_hydro(StageRecord& st);

  std::filesystem::path file(const std::string& name) {
    if (std::find(produced_.begin(), produced_.end(), name) == produced_.end()) produced_.push_back(name);
    return out_ / name;
  }
  void note(std::string_view msg) {
    if (log_) log_(msg);
  }
  void write_manifest() {
    write_json(manifest_to_json(manifest_), out_ / "manifest.json");
  }
  void hash_files() {
    manifest_.files.clear();
    for (const auto& name : produced_) {
      const auto p = out_ / name;
      if (!std::filesystem::exists(p)) continue;
      manifest_.files.push_back({name, sha256_file(p), std::filesystem::file_size(p)});
    }
  }

  const ExperimentConfig& config_;
  std::filesystem::path out_;
  LogSink log_;
  RunManifest manifest_;
  std::vector<std::string> produced_;
  std::optional<FrontProfile> front_;
};

RunManifest Runner::run() {
  std::error_code ec;
  std::filesystem::create_directories(out_, ec);
  if (ec) throw ValidationError(fmt::format("out: cannot create '{}': {}", out_.string(), ec.message()));

  manifest_.experiment = to_string(config_.experiment);
  manifest_.version = version_string();
  manifest_.started_at = utc_now();
  for (const auto& [k, v] : config_values(config_)) manifest_.config[k] = v;
  const auto plan = stage_plan(config_);
  for (const auto& name : plan) manifest_.stages.push_back({name, "pending", 0.0, {}, Json::object()});
  write_manifest();

  for (auto& st : manifest_.stages) {
    if (manifest_.failed_stage) {
      st.status = "skipped";
      continue;
    }
    note(fmt::format("[{}] start", st.name));
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (st.name == "thermo") stage_thermo(st);
      else if (st.name == "front") stage_front(st);
      else if (st.name == "spectrum") stage_spectrum(st);
      else if (st.name == "evolve") stage_evolve(st);
      else if (st.name == "hydro") stage_hydro(st);
      st.status = "ok";
    } catch (const ValidationError& e) {
      st.status = "failed";
      st.message = e.what();
      manifest_.failure = FailureKind::validation;
    } catch (const NumericalError& e) {
      st.status = "failed";
      st.message = e.what();
      manifest_.failure = FailureKind::numerical;
    } catch (const std::exception& e) {
      st.status = "failed";
      st.message = e.what();
      manifest_.failure = FailureKind::internal;
    }
    st.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (st.status == "failed") {
      manifest_.failed_stage = st.name;
      manifest_.error = st.message;
      note(fmt::format("[{}] failed: {}", st.name, st.message));
    } else {
      note(fmt::format("[{}] done in {:.2f} s", st.name, st.seconds));
    }
    hash_files();
    write_manifest();
  }
  manifest_.status = manifest_.failed_stage ? "failed" : "ok";
  manifest_.finished_at = utc_now();
  hash_files();
  write_manifest();
  return manifest_;
}

void Runner::stage_thermo(StageRecord& st) {
  const double beta = config_.params.beta;
  const double n = config_.params.n;
  const auto coex = coexistence_densities(beta, n);
  Json j;
  j["beta"] = beta;
  j["n"] = n;
  j["beta_n"] = beta * n;
  j["critical_beta"] = 2.0 / n;
  j["supercritical"] = is_supercritical(beta, n);
  j["m"] = coex.m;
  j["rho_plus"] = coex.rho_plus;
  j["rho_minus"] = coex.rho_minus;
  if (is_supercritical(beta, n)) {
    j["el_constant"] = std::log(coex.rho_plus) + beta * coex.rho_minus;
    j["f_coexistence"] = eval_double_well(coex.rho_plus, coex.rho_minus, beta);
    j["chemical_potential"] = double_well_potential(coex.rho_plus, coex.rho_minus, beta);
  }
  write_json(j, file("thermo.json"));
  st.summary = {{"supercritical", is_supercritical(beta, n)}, {"rho_plus", coex.rho_plus},
                {"rho_minus", coex.rho_minus}};
}

void Runner::stage_front(StageRecord& st) {
  const double beta = config_.params.beta;
  const double n = config_.params.n;
  if (!is_supercritical(beta, n))
    throw ValidationError(fmt::format(
        "front: no front exists for beta * n = {} <= 2 (single homogeneous phase); later stages skipped", beta * n));
  if (!config_.front_file.empty()) {
    front_ = load_front(config_.front_file);
    const auto& p = front_->params;
    if (p.nz != config_.params.nz || p.beta != beta || p.n != n || p.half_width != config_.params.half_width ||
        p.kernel_radius != config_.params.kernel_radius || p.kernel_kind != config_.params.kernel_kind)
      throw ValidationError(fmt::format("front-file: '{}' was computed for different model parameters",
                                        config_.front_file));
    front_->params.hermite_order = config_.params.hermite_order;
    front_->params.dt = config_.params.dt;
  } else {
    FrontSolverOptions opt;
    opt.tol = config_.front_tol;
    opt.damping = config_.front_damping;
    opt.max_iter = config_.front_max_iter;
    front_ = solve_front(config_.params, opt);
  }
  save_front(*front_, file("front.json"));

  {
    CsvWriter csv(file("front.csv"), "z,w1,w2,w1_prime,w2_prime");
    for (std::size_t k = 0; k < front_->size(); ++k)
      csv.write(fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", front_->grid.z[k], front_->w1.values[k],
                            front_->w2.values[k], front_->w1p.values[k], front_->w2p.values[k]));
  }

  const auto inv = check_front_invariants(*front_);
  const auto& r = front_->report;
  st.summary = {{"iterations", r.iterations},
                {"el_residual", r.el_residual},
                {"elp_residual", r.elp_residual},
                {"excess_energy", r.excess_energy},
                {"sharp_step_excess_energy", excess_free_energy(sharp_step_profile(front_->params))},
                {"tail_rate", r.tail_rate},
                {"symmetry_error", inv.symmetry_error},
                {"monotone", inv.monotone},
                {"strictly_bounded", inv.strictly_bounded}};
}

void Runner::stage_spectrum(StageRecord& st) {
  const FrontProfile& front = *front_;
  const auto matrix = build_Atilde(front);
  const auto spectrum = spectrum_Atilde(matrix, config_.spectrum_k, predicted_null_vector(front));
  const auto symbol = symbol_spectrum_A0(front.params.beta, front.rho_plus, front.rho_minus, front.kernel);
  const HermiteBasis basis{config_.params.hermite_order, config_.params.beta};
  const auto lgap = check_lgap(basis, config_.lgap_samples, derive_seed(config_.seed, kStreamLgap));
  std::vector<double> mode1(static_cast<std::size_t>(basis.size()), 0.0);
  mode1[1] = 1.0;
  const double nu0 = *lgap_ratio(basis, mode1);
  const OperatorA op(front);
  const auto aprime = probe_Aprime_bound(op, config_.aprime_samples, derive_seed(config_.seed, kStreamAprime));
  const auto null_w = op.null_vector();
  const double a_null = op.norm(op.apply(null_w)) / op.norm(null_w);

  Json j;
  j["eigenvalues"] = spectrum.eigenvalues;
  j["gap"] = spectrum.gap ? Json(*spectrum.gap) : Json(nullptr);
  j["null_residual"] = spectrum.null_residual;
  j["null_alignment"] = spectrum.null_alignment;
  j["max_pair_residual"] = spectrum.max_pair_residual;
  j["A_null_ratio"] = a_null;
  j["symbol"] = {{"lower", symbol.lower},       {"upper", symbol.upper},
                 {"gap_edge", symbol.gap_edge}, {"uhat_zero", symbol.uhat_zero},
                 {"uhat_max_abs", symbol.uhat_max_abs}, {"xi_at_max", symbol.xi_at_max},
                 {"coupling", symbol.coupling}};
  j["lgap"] = {{"samples", config_.lgap_samples}, {"nu0_sampled", lgap.nu0}, {"used", lgap.used},
               {"skipped", lgap.skipped}, {"nu0_mode1", nu0}};
  j["aprime"] = {{"samples", config_.aprime_samples}, {"min_ratio", aprime.min_ratio}, {"used", aprime.used},
                 {"skipped", aprime.skipped}};
  write_json(j, file("spectrum.json"));

  {
    const std::size_t nz = front.size();
    const int cols = std::min<int>(2, static_cast<int>(spectrum.eigenvectors.cols()));
    std::string header = "z";
    for (int c = 0; c < cols; ++c) header += fmt::format(",u1_mode{0},u2_mode{0}", c);
    CsvWriter csv(file("spectrum_modes.csv"), header.c_str());
    for (std::size_t k = 0; k < nz; ++k) {
      std::string row = format_double(front.grid.z[k]);
      for (int c = 0; c < cols; ++c) {
        Eigen::Index imax = 0;
        spectrum.eigenvectors.col(c).cwiseAbs().maxCoeff(&imax);
        const double sign = spectrum.eigenvectors(imax, c) < 0.0 ? -1.0 : 1.0;  // largest entry positive
        row += fmt::format(",{:.17g},{:.17g}", sign * spectrum.eigenvectors(static_cast<Eigen::Index>(k), c),
                           sign * spectrum.eigenvectors(static_cast<Eigen::Index>(nz + k), c));
      }
      csv.write(row);
    }
  }

  st.summary = {{"lambda0", spectrum.eigenvalues.empty() ? 0.0 : spectrum.eigenvalues[0]},
                {"gap", spectrum.gap ? Json(*spectrum.gap) : Json(nullptr)},
                {"null_alignment", spectrum.null_alignment},
                {"symbol_edge", symbol.gap_edge},
                {"nu0_mode1", nu0},
                {"aprime_min", aprime.min_ratio}};
}

void Runner::stage_evolve(StageRecord& st) {
  const KineticSystem sys(*front_, kinetic_options(config_));
  KineticState state;
  if (!config_.checkpoint_file.empty()) {
    const Checkpoint cp = load_checkpoint(config_.checkpoint_file);
    if (cp.state.nz != sys.nz() || cp.state.order != sys.basis().order)
      throw ValidationError(fmt::format("checkpoint-file: state has nz = {}, K = {}; the run has nz = {}, K = {}",
                                        cp.state.nz, cp.state.order, sys.nz(), sys.basis().order));
    state = cp.state;
  } else {
    state = init_perturbation(sys, config_.perturbation, config_.amplitude);
    add_seeded_noise(sys, state, config_.noise * config_.amplitude, derive_seed(config_.seed, kStreamNoise));
  }

  EvolveOptions eo;
  eo.dt = config_.params.dt;
  eo.t_end = config_.tmax;
  eo.record_every = config_.record_every;
  Trajectory traj;
  {
    CsvWriter csv(file("kinetic.csv"), kKineticCsvHeader);
    traj = evolve(sys, state, eo, [&](const DiagnosticsRecord& r) { csv.write(csv_row(r)); });
  }
  save_checkpoint({front_->params, sys.options(), traj.final_state}, file("checkpoint.json"));

  const auto& recs = traj.records;
  const auto energy = energy_monitor(recs, sys.k_const(), sys.options().gamma);
  double mass_drift = 0.0, sym = 0.0, null_max = 0.0, g_increase = 0.0;
  for (const auto& r : recs) {
    for (int i = 0; i < 2; ++i) mass_drift = std::max(mass_drift, std::abs(r.mass[i] - recs.front().mass[i]));
    sym = std::max(sym, r.symmetry_error);
    null_max = std::max(null_max, std::abs(r.null_component));
  }
  for (std::size_t k = 1; k < recs.size(); ++k)
    g_increase = std::max(g_increase, recs[k].free_energy - recs[k - 1].free_energy);
  const double duration = recs.empty() ? 0.0 : recs.back().time - recs.front().time;

  Json j;
  j["steps"] = traj.steps;
  j["records"] = recs.size();
  j["aborted"] = traj.aborted;
  j["abort_reason"] = traj.abort_reason;
  j["k_const"] = sys.k_const();
  j["max_dt"] = sys.max_dt();
  j["t_start"] = recs.empty() ? 0.0 : recs.front().time;
  j["t_end"] = recs.empty() ? 0.0 : recs.back().time;
  j["norm_M_start"] = recs.empty() ? 0.0 : recs.front().norm_M;
  j["norm_M_end"] = recs.empty() ? 0.0 : recs.back().norm_M;
  j["mass_drift_per_time"] = duration > 0.0 ? mass_drift / duration : 0.0;
  j["max_symmetry_error"] = sym;
  j["max_null_component"] = null_max;
  j["max_free_energy_increase"] = g_increase;
  j["energy"] = {{"violations", energy.violations},
                 {"max_increase", energy.max_increase},
                 {"tolerance", energy.tolerance},
                 {"envelope_exponent", energy.envelope_exponent},
                 {"envelope_constant", energy.envelope_constant},
                 {"reference_exponent", energy.reference_exponent}};
  write_json(j, file("evolve.json"));

  st.summary = {{"steps", traj.steps},
                {"norm_M_start", j["norm_M_start"]},
                {"norm_M_end", j["norm_M_end"]},
                {"max_symmetry_error", sym},
                {"energy_violations", energy.violations}};
  if (traj.aborted) throw NumericalError(fmt::format("evolve: {}", traj.abort_reason));
}

void Runner::stage_hydro(StageRecord& st) {
  HydroOptions ho;
  ho.dt = config_.hydro_dt;
  ho.t_end = config_.hydro_tmax;
  ho.record_every = config_.hydro_record_every;
  HydroTrajectory traj;
  {
    CsvWriter csv(file("hydro.csv"), kHydroCsvHeader);
    traj = hydro_evolve(*front_, perturbed_front_state(*front_, config_.hydro_amplitude), ho,
                        [&](const HydroRecord& r) { csv.write(csv_row(r)); });
  }
  const auto& recs = traj.records;
  double mass_drift = 0.0, f_increase = 0.0;
  for (std::size_t k = 1; k < recs.size(); ++k) {
    for (int i = 0; i < 2; ++i) mass_drift = std::max(mass_drift, std::abs(recs[k].mass[i] - recs[0].mass[i]));
    f_increase = std::max(f_increase, recs[k].free_energy - recs[k - 1].free_energy);
  }
  Json j;
  j["steps"] = traj.steps;
  j["dt"] = ho.dt > 0.0 ? ho.dt : hydro_max_dt(perturbed_front_state(*front_, config_.hydro_amplitude));
  j["front_excess_energy"] = front_->report.excess_energy;
  j["front_hydro_energy"] = hydro_free_energy(hydro_state_from_front(*front_));
  j["front_flux_sup_norm"] = flux_sup_norm(hydro_state_from_front(*front_));
  j["free_energy_start"] = recs.front().free_energy;
  j["free_energy_end"] = recs.back().free_energy;
  j["max_free_energy_increase"] = f_increase;
  j["max_mass_drift"] = mass_drift;
  j["dist_to_front_end"] = recs.back().dist_to_front_sup;
  write_json(j, file("hydro.json"));
  st.summary = {{"steps", traj.steps},
                {"free_energy_end", recs.back().free_energy},
                {"dist_to_front_end", recs.back().dist_to_front_sup}};
}

}  // namespace

Json manifest_to_json(const RunManifest& m) {
  Json j;
  j["format"] = "vfplab-manifest";
  j["status"] = m.status;
  j["experiment"] = m.experiment;
  j["version"] = m.version;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at.empty() ? Json(nullptr) : Json(m.finished_at);
  j["config"] = m.config;
  Json stages = Json::array();
  for (const auto& s : m.stages)
    stages.push_back({{"name", s.name}, {"status", s.status}, {"seconds", s.seconds}, {"message", s.message},
                      {"summary", s.summary}});
  j["stages"] = stages;
  Json files = Json::array();
  for (const auto& f : m.files) files.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  j["files"] = files;
  j["failed_stage"] = m.failed_stage ? Json(*m.failed_stage) : Json(nullptr);
  j["error"] = m.error ? Json(*m.error) : Json(nullptr);
  j["failure"] = failure_name(m.failure);
  return j;
}

std::vector<std::string> stage_plan(const ExperimentConfig& config) {
  switch (config.experiment) {
    case Experiment::thermo: return {"thermo"};
    case Experiment::front: return {"thermo", "front"};
    case Experiment::spectrum: return {"thermo", "front", "spectrum"};
    case Experiment::evolve: return {"thermo", "front", "evolve"};
    case Experiment::hydro: return {"thermo", "front", "hydro"};
    case Experiment::pipeline: {
      std::vector<std::string> plan{"thermo", "front", "spectrum", "evolve"};
      if (config.with_hydro) plan.emplace_back("hydro");
      return plan;
    }
  }
  return {};
}

RunManifest run_experiment(const ExperimentConfig& config, const LogSink& log) {
  validate_config(config);
  return Runner(config, log).run();
}

RunManifest run_pipeline(ExperimentConfig config, const LogSink& log) {
  config.experiment = Experiment::pipeline;
  return run_experiment(config, log);
}

int exit_code(const RunManifest& m) {
  switch (m.failure) {
    case FailureKind::none: return 0;
    case FailureKind::validation: return 2;
    case FailureKind::numerical: return 3;
    case FailureKind::internal: return 1;
  }
  return 1;
}

}  // namespace vfp
