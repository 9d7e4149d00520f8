#include <fmt/format.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "vfplab/config.hpp"
#include "vfplab/errors.hpp"
#include "vfplab/experiment.hpp"
#include "vfplab/front.hpp"
#include "vfplab/hydro.hpp"
#include "vfplab/io.hpp"
#include "vfplab/kinetic.hpp"
#include "vfplab/spectral.hpp"
#include "vfplab/thermo.hpp"

namespace py = pybind11;
using namespace vfp;

namespace {

py::array_t<double> to_array(std::span<const double> v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

std::vector<double> from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  return {a.data(), a.data() + a.size()};
}

py::dict kinetic_records(const std::vector<DiagnosticsRecord>& recs) {
  const std::size_t n = recs.size();
  auto column = [&](auto get) {
    py::array_t<double> a(static_cast<py::ssize_t>(n));
    auto* p = a.mutable_data();
    for (std::size_t k = 0; k < n; ++k) p[k] = get(recs[k]);
    return a;
  };
  py::dict d;
  d["t"] = column([](const auto& r) { return r.time; });
  d["norm_M"] = column([](const auto& r) { return r.norm_M; });
  d["norm_D"] = column([](const auto& r) { return r.norm_D; });
  d["norm_M_gamma"] = column([](const auto& r) { return r.norm_M_gamma; });
  d["dnorm_t_M"] = column([](const auto& r) { return r.dnorm_t; });
  d["dnorm_z_M"] = column([](const auto& r) { return r.dnorm_z; });
  d["energy_combined"] = column([](const auto& r) { return r.energy_combined; });
  d["free_energy"] = column([](const auto& r) { return r.free_energy; });
  d["mass_1"] = column([](const auto& r) { return r.mass[0]; });
  d["mass_2"] = column([](const auto& r) { return r.mass[1]; });
  d["null_component"] = column([](const auto& r) { return r.null_component; });
  d["symmetry_error"] = column([](const auto& r) { return r.symmetry_error; });
  return d;
}

py::dict hydro_records(const std::vector<HydroRecord>& recs) {
  const std::size_t n = recs.size();
  auto column = [&](auto get) {
    py::array_t<double> a(static_cast<py::ssize_t>(n));
    auto* p = a.mutable_data();
    for (std::size_t k = 0; k < n; ++k) p[k] = get(recs[k]);
    return a;
  };
  py::dict d;
  d["t"] = column([](const auto& r) { return r.time; });
  d["free_energy"] = column([](const auto& r) { return r.free_energy; });
  d["mass_1"] = column([](const auto& r) { return r.mass[0]; });
  d["mass_2"] = column([](const auto& r) { return r.mass[1]; });
  d["flux_sup_norm"] = column([](const auto& r) { return r.flux_sup_norm; });
  d["dist_to_front_sup"] = column([](const auto& r) { return r.dist_to_front_sup; });
  return d;
}

ConfigValues to_values(const py::dict& d) {
  ConfigValues v;
  for (const auto& [k, val] : d) {
    std::string key = py::str(k);
    std::replace(key.begin(), key.end(), '_', '-');
    std::string text;
    if (py::isinstance<py::bool_>(val)) text = val.cast<bool>() ? "true" : "false";
    else if (py::isinstance<py::float_>(val)) text = fmt::format("{:.17g}", val.cast<double>());
    else text = py::str(val);
    v[key] = text;
  }
  return v;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-species Vlasov-Fokker-Planck front stability toolkit";
  m.attr("__version__") = version_string();

  static py::exception<ValidationError> validation_error(m, "ValidationError", PyExc_ValueError);
  static py::exception<NumericalError> numerical_error(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      py::set_error(validation_error, e.what());
    } catch (const NumericalError& e) {
      py::set_error(numerical_error, e.what());
    }
  });

  py::enum_<KernelKind>(m, "KernelKind").value("biweight", KernelKind::biweight).value("bump", KernelKind::bump);

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init([](double beta, double n, double domain, int nz, int hermite_order, double dt,
                       double kernel_radius, KernelKind kernel) {
             ModelParams p;
             p.beta = beta;
             p.n = n;
             p.half_width = domain;
             p.nz = nz;
             p.hermite_order = hermite_order;
             p.dt = dt;
             p.kernel_radius = kernel_radius;
             p.kernel_kind = kernel;
             p.validate();
             return p;
           }),
           py::arg("beta") = 1.25, py::arg("n") = 2.0, py::arg("domain") = 12.0, py::arg("nz") = 1025,
           py::arg("hermite_order") = 16, py::arg("dt") = 0.003, py::arg("kernel_radius") = 1.0,
           py::arg("kernel") = KernelKind::biweight)
      .def_readwrite("beta", &ModelParams::beta)
      .def_readwrite("n", &ModelParams::n)
      .def_readwrite("domain", &ModelParams::half_width)
      .def_readwrite("nz", &ModelParams::nz)
      .def_readwrite("hermite_order", &ModelParams::hermite_order)
      .def_readwrite("dt", &ModelParams::dt)
      .def_readwrite("kernel_radius", &ModelParams::kernel_radius)
      .def_readwrite("kernel", &ModelParams::kernel_kind)
      .def_property_readonly("dz", &ModelParams::dz)
      .def("validate", &ModelParams::validate)
      .def("__repr__", [](const ModelParams& p) {
        return fmt::format("ModelParams(beta={}, n={}, domain={}, nz={}, hermite_order={}, dt={}, kernel_radius={})",
                           p.beta, p.n, p.half_width, p.nz, p.hermite_order, p.dt, p.kernel_radius);
      });

  // thermo
  py::class_<Coexistence>(m, "Coexistence")
      .def_readonly("rho_plus", &Coexistence::rho_plus)
      .def_readonly("rho_minus", &Coexistence::rho_minus)
      .def_readonly("m", &Coexistence::m);
  m.def("coexistence_densities", &coexistence_densities, py::arg("beta"), py::arg("n"), py::arg("tol") = 1e-12);
  m.def("eval_double_well", &eval_double_well, py::arg("rho1"), py::arg("rho2"), py::arg("beta"));
  m.def("is_supercritical", &is_supercritical, py::arg("beta"), py::arg("n"));

  // front
  py::class_<FrontProfile>(m, "FrontProfile")
      .def_readonly("params", &FrontProfile::params)
      .def_readonly("rho_plus", &FrontProfile::rho_plus)
      .def_readonly("rho_minus", &FrontProfile::rho_minus)
      .def_readonly("el_constant", &FrontProfile::el_constant)
      .def_property_readonly("z", [](const FrontProfile& f) { return to_array(f.grid.z); })
      .def_property_readonly("dz", [](const FrontProfile& f) { return f.grid.dz; })
      .def_property_readonly("w1", [](const FrontProfile& f) { return to_array(f.w1.values); })
      .def_property_readonly("w2", [](const FrontProfile& f) { return to_array(f.w2.values); })
      .def_property_readonly("w1_prime", [](const FrontProfile& f) { return to_array(f.w1p.values); })
      .def_property_readonly("w2_prime", [](const FrontProfile& f) { return to_array(f.w2p.values); })
      .def_property_readonly("iterations", [](const FrontProfile& f) { return f.report.iterations; })
      .def_property_readonly("el_residual", [](const FrontProfile& f) { return f.report.el_residual; })
      .def_property_readonly("excess_energy", [](const FrontProfile& f) { return f.report.excess_energy; })
      .def_property_readonly("tail_rate", [](const FrontProfile& f) { return f.report.tail_rate; })
      .def("__len__", &FrontProfile::size);

  m.def(
      "solve_front",
      [](const ModelParams& params, double tol, double damping, int max_iter) {
        FrontSolverOptions o;
        o.tol = tol;
        o.damping = damping;
        o.max_iter = max_iter;
        py::gil_scoped_release release;
        return solve_front(params, o);
      },
      py::arg("params"), py::arg("tol") = 1e-12, py::arg("damping") = 0.5, py::arg("max_iter") = 100000);
  m.def("sharp_step_profile", &sharp_step_profile, py::arg("params"));
  m.def("el_residual", &el_residual);
  m.def("elp_residual", &elp_residual);
  m.def("excess_free_energy", &excess_free_energy);
  m.def("tail_decay_rate", &tail_decay_rate);
  m.def("check_front_invariants", [](const FrontProfile& f) {
    const auto inv = check_front_invariants(f);
    py::dict d;
    d["symmetry_error"] = inv.symmetry_error;
    d["centering_error"] = inv.centering_error;
    d["monotone"] = inv.monotone;
    d["strictly_bounded"] = inv.strictly_bounded;
    d["tail_error"] = inv.tail_error;
    return d;
  });
  m.def("save_front", &save_front, py::arg("front"), py::arg("path"));
  m.def("load_front", &load_front, py::arg("path"));

  // spectral
  m.def(
      "fp_matrix_hermite",
      [](int order, double beta) {
        const Eigen::VectorXd d = fp_matrix_hermite({order, beta});
        return to_array({d.data(), static_cast<std::size_t>(d.size())});
      },
      py::arg("order"), py::arg("beta"));
  m.def(
      "lgap_ratio",
      [](int order, double beta, const py::array_t<double, py::array::c_style | py::array::forcecast>& c) {
        return lgap_ratio({order, beta}, from_array(c));
      },
      py::arg("order"), py::arg("beta"), py::arg("coeffs"));
  m.def(
      "check_lgap",
      [](int order, double beta, int samples, std::uint64_t seed) {
        const auto r = check_lgap({order, beta}, samples, seed);
        return py::make_tuple(r.nu0, r.used, r.skipped);
      },
      py::arg("order"), py::arg("beta"), py::arg("samples") = 1000, py::arg("seed") = 12345);
  m.def(
      "spectrum_atilde",
      [](const FrontProfile& front, int k) {
        SpectrumReport r;
        {
          py::gil_scoped_release release;
          r = spectrum_Atilde(build_Atilde(front), k, predicted_null_vector(front));
        }
        py::dict d;
        d["eigenvalues"] = to_array(r.eigenvalues);
        d["gap"] = r.gap ? py::cast(*r.gap) : py::none();
        d["null_residual"] = r.null_residual;
        d["null_alignment"] = r.null_alignment;
        d["max_pair_residual"] = r.max_pair_residual;
        return d;
      },
      py::arg("front"), py::arg("k") = 4);
  m.def(
      "symbol_spectrum",
      [](const FrontProfile& front) {
        const auto s = symbol_spectrum_A0(front.params.beta, front.rho_plus, front.rho_minus, front.kernel);
        py::dict d;
        d["lower"] = s.lower;
        d["upper"] = s.upper;
        d["uhat_zero"] = s.uhat_zero;
        d["uhat_max_abs"] = s.uhat_max_abs;
        d["coupling"] = s.coupling;
        return d;
      },
      py::arg("front"));
  m.def(
      "null_vector_residual",
      [](const FrontProfile& front) {
        const OperatorA op(front);
        const auto w = op.null_vector();
        return op.norm(op.apply(w)) / op.norm(w);
      },
      py::arg("front"));

  // kinetic
  py::class_<KineticSystem>(m, "KineticSystem")
      .def(py::init([](const FrontProfile& front, int order, double cfl, double gamma, bool enforce_symmetry,
                       std::optional<double> k_const) {
             KineticOptions o;
             o.order = order;
             o.cfl = cfl;
             o.gamma = gamma;
             o.enforce_symmetry = enforce_symmetry;
             o.k_const = k_const;
             return KineticSystem(front, o);
           }),
           py::arg("front"), py::arg("order") = 16, py::arg("cfl") = 1.0, py::arg("gamma") = 0.1,
           py::arg("enforce_symmetry") = false, py::arg("k_const") = py::none())
      .def_property_readonly("max_dt", &KineticSystem::max_dt)
      .def_property_readonly("k_const", &KineticSystem::k_const)
      .def_property_readonly("nz", &KineticSystem::nz);

  py::class_<KineticState>(m, "KineticState")
      .def_readonly("order", &KineticState::order)
      .def_readonly("nz", &KineticState::nz)
      .def_readonly("time", &KineticState::time)
      .def_property_readonly("coeffs",
                             [](const KineticState& s) {
                               py::array_t<double> a({2, s.modes(), static_cast<int>(s.nz)});
                               std::copy(s.coeffs.begin(), s.coeffs.end(), a.mutable_data());
                               return a;
                             })
      .def("density", [](const KineticState& s, int i) { return to_array(s.density(i)); });

  m.def(
      "init_perturbation",
      [](const KineticSystem& sys, const std::string& kind, double amplitude) {
        return init_perturbation(sys, perturbation_kind_from_string(kind), amplitude);
      },
      py::arg("system"), py::arg("kind") = "gaussian_density", py::arg("amplitude") = 1e-3);
  m.def("free_energy_g", &free_energy_G, py::arg("system"), py::arg("state"));
  m.def("quadratic_free_energy", &quadratic_free_energy, py::arg("system"), py::arg("state"));
  m.def("symmetry_error", &symmetry_error, py::arg("state"));
  m.def(
      "evolve",
      [](const KineticSystem& sys, const KineticState& state, double dt, double t_end, int record_every) {
        EvolveOptions o;
        o.dt = dt;
        o.t_end = t_end;
        o.record_every = record_every;
        Trajectory t;
        {
          py::gil_scoped_release release;
          t = evolve(sys, state, o);
        }
        return py::make_tuple(kinetic_records(t.records), t.final_state);
      },
      py::arg("system"), py::arg("state"), py::arg("dt") = 0.003, py::arg("t_end") = 20.0,
      py::arg("record_every") = 50);

  // hydro
  py::class_<HydroState>(m, "HydroState")
      .def_readonly("time", &HydroState::time)
      .def_property_readonly("rho1", [](const HydroState& s) { return to_array(s.rho1.values); })
      .def_property_readonly("rho2", [](const HydroState& s) { return to_array(s.rho2.values); });
  m.def("hydro_state_from_front", &hydro_state_from_front, py::arg("front"));
  m.def("perturbed_front_state", &perturbed_front_state, py::arg("front"), py::arg("amplitude"));
  m.def("hydro_free_energy", &hydro_free_energy, py::arg("state"));
  m.def("hydro_mass", &hydro_mass, py::arg("state"));
  m.def("flux_sup_norm", &flux_sup_norm, py::arg("state"));
  m.def("hydro_max_dt", &hydro_max_dt, py::arg("state"), py::arg("safety") = 0.9);
  m.def("hydro_step", &hydro_step, py::arg("state"), py::arg("dt"));
  m.def(
      "hydro_evolve",
      [](const FrontProfile& front, const HydroState& state, double dt, double t_end, int record_every) {
        HydroOptions o;
        o.dt = dt;
        o.t_end = t_end;
        o.record_every = record_every;
        HydroTrajectory t;
        {
          py::gil_scoped_release release;
          t = hydro_evolve(front, state, o);
        }
        return py::make_tuple(hydro_records(t.records), t.final_state);
      },
      py::arg("front"), py::arg("state"), py::arg("dt") = 0.0, py::arg("t_end") = 1.0,
      py::arg("record_every") = 100);

  // runner
  m.def("config_keys", [] {
    py::list out;
    for (const auto& k : config_keys()) out.append(py::make_tuple(k.name, k.default_value, k.help));
    return out;
  });
  m.def(
      "resolve_config",
      [](const std::filesystem::path& path, const py::dict& overrides) {
        return config_values(parse_config(path, to_values(overrides)));
      },
      py::arg("path") = std::filesystem::path{}, py::arg("overrides") = py::dict());
  m.def(
      "_run_experiment",
      [](const std::filesystem::path& path, const py::dict& overrides) {
        const ExperimentConfig c = parse_config(path, to_values(overrides));
        RunManifest man;
        {
          py::gil_scoped_release release;
          man = run_experiment(c);
        }
        return py::make_tuple(manifest_to_json(man).dump(), exit_code(man));
      },
      py::arg("path"), py::arg("overrides"));
}
