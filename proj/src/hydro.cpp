#include "vfplab/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "vfplab/errors.hpp"
#include "vfplab/thermo.hpp"

namespace vfp {

HydroState make_hydro_state(const ModelParams& params, std::vector<double> rho1, std::vector<double> rho2) {
  params.validate();
  HydroState s;
  s.params = params;
  s.grid = build_grid(params);
  s.kernel = build_kernel(params.kernel_kind, params.kernel_radius, s.grid);
  if (rho1.size() != s.grid.size() || rho2.size() != s.grid.size())
    throw ValidationError("hydro: density arrays do not match the grid size");
  const Extension e1 = Extension::constant(rho1.front(), rho1.back());
  const Extension e2 = Extension::constant(rho2.front(), rho2.back());
  s.rho1 = {std::move(rho1), e1};
  s.rho2 = {std::move(rho2), e2};
  return s;
}

HydroState hydro_state_from_front(const FrontProfile& front) {
  HydroState s;
  s.params = front.params;
  s.grid = front.grid;
  s.kernel = front.kernel;
  s.rho1 = front.w1;
  s.rho2 = front.w2;
  return s;
}

std::array<std::vector<double>, 2> chemical_potential(const HydroState& s) {
  const double beta = s.params.beta;
  std::array<std::vector<double>, 2> mu;
  for (int i = 0; i < 2; ++i) {
    const auto& rho = s.rho(i).values;
    const auto field = convolve(s.kernel, s.rho(1 - i));
    auto& m = mu[static_cast<std::size_t>(i)];
    m.resize(rho.size());
    for (std::size_t k = 0; k < rho.size(); ++k) {
      if (!(rho[k] > 0.0))
        throw ValidationError(fmt::format("hydro: rho_{} = {} <= 0 at z = {:.6g}", i + 1, rho[k], s.grid.z[k]));
      m[k] = std::log(rho[k]) + beta * field.values[k];
    }
  }
  return mu;
}

std::array<std::vector<double>, 2> face_fluxes(const HydroState& s) {
  const auto mu = chemical_potential(s);
  const double scale = 1.0 / (s.params.beta * s.grid.dz);
  std::array<std::vector<double>, 2> flux;
  for (int i = 0; i < 2; ++i) {
    const auto& rho = s.rho(i).values;
    const auto& m = mu[static_cast<std::size_t>(i)];
    auto& f = flux[static_cast<std::size_t>(i)];
    f.resize(rho.size() - 1);
    for (std::size_t k = 0; k + 1 < rho.size(); ++k)
      f[k] = 0.5 * (rho[k] + rho[k + 1]) * (m[k + 1] - m[k]) * scale;
  }
  return flux;
}

double flux_sup_norm(const HydroState& s) {
  const auto f = face_fluxes(s);
  return std::max(sup_norm(f[0]), sup_norm(f[1]));
}

double hydro_max_dt(const HydroState& s, double safety) {
  const double rmax = std::max({sup_norm(s.rho1.values), sup_norm(s.rho2.values), 1.0});
  return safety * s.grid.dz * s.grid.dz * s.params.beta / (2.0 * rmax);
}

HydroState hydro_step(const HydroState& s, double dt) {
  const double bound = hydro_max_dt(s, 1.0);
  if (!(dt > 0.0 && dt <= bound))
    throw ValidationError(fmt::format("hydro dt: {} outside the stability bound (0, {:.6g}]", dt, bound));
  const auto flux = face_fluxes(s);
  HydroState next = s;
  const double r = dt / s.grid.dz;
  for (int i = 0; i < 2; ++i) {
    const auto& f = flux[static_cast<std::size_t>(i)];
    auto& rho = i == 0 ? next.rho1.values : next.rho2.values;
    const std::size_t n = rho.size();
    for (std::size_t k = 0; k < n; ++k) {
      const double right = k + 1 < n ? f[k] : 0.0;
      const double left = k > 0 ? f[k - 1] : 0.0;
      rho[k] += r * (right - left);
      if (!(rho[k] > 0.0))
        throw NumericalError(fmt::format("hydro: positivity lost for rho_{} at z = {:.6g}, t = {:.6g} (value {})",
                                         i + 1, s.grid.z[k], s.time + dt, rho[k]));
    }
  }
  next.time = s.time + dt;
  return next;
}

double hydro_free_energy(const HydroState& s) {
  const double beta = s.params.beta;
  const double n = s.params.n;
  const auto coex = coexistence_densities(beta, n);
  const double f_ref = eval_double_well(coex.rho_plus, coex.rho_minus, beta);
  const double mu = double_well_potential(coex.rho_plus, coex.rho_minus, beta);
  const auto& a = s.rho1.values;
  const auto& b = s.rho2.values;
  const auto ub = convolve(s.kernel, s.rho2);
  // Species 2 also feels the frozen extension of species 1; counting that
  // coupling makes mu_i exactly the gradient of the discrete energy.
  const auto bath = convolve(s.kernel, std::vector<double>(a.size(), 0.0), s.rho1.extension);
  const std::size_t c = s.grid.center();
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double b_far = k < c ? s.rho2.extension.left : s.rho2.extension.right;
    acc += eval_double_well(a[k], b[k], beta) - f_ref - mu * (a[k] + b[k] - n) +
           beta * a[k] * (ub.values[k] - b[k]) + beta * (b[k] - b_far) * bath[k];
  }
  return acc * s.grid.dz;
}

std::array<double, 2> hydro_mass(const HydroState& s) {
  std::array<double, 2> m{};
  for (int i = 0; i < 2; ++i) {
    m[static_cast<std::size_t>(i)] = compensated_sum(s.rho(i).values) * s.grid.dz;
  }
  return m;
}

HydroState perturbed_front_state(const FrontProfile& front, double amplitude) {
  if (!(amplitude >= 0.0)) throw ValidationError(fmt::format("amplitude: must be >= 0 (got {})", amplitude));
  HydroState s = hydro_state_from_front(front);
  const auto& z = front.grid.z;
  const std::size_t n = z.size();
  std::vector<double> g1(n), g2(n);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    g1[k] = std::exp(-0.5 * z[k] * z[k]);
    g2[k] = std::exp(-0.125 * z[k] * z[k]);
    s1 += g1[k];
    s2 += g2[k];
  }
  const double ratio = s1 / s2;
  for (std::size_t k = 0; k < n; ++k) {
    const double d = amplitude * (g1[k] - ratio * g2[k]);
    s.rho1.values[k] += d;
    s.rho2.values[n - 1 - k] += d;
  }
  return s;
}

HydroTrajectory hydro_evolve(const FrontProfile& front, HydroState state, const HydroOptions& options,
                             const std::function<void(const HydroRecord&)>& on_record) {
  if (!(options.t_end > 0.0)) throw ValidationError(fmt::format("tmax: must be > 0 (got {})", options.t_end));
  if (options.record_every < 1)
    throw ValidationError(fmt::format("record_every: must be >= 1 (got {})", options.record_every));
  const double dt = options.dt > 0.0 ? options.dt : hydro_max_dt(state);
  if (dt > hydro_max_dt(state, 1.0))
    throw ValidationError(fmt::format("hydro dt: {} exceeds the stability bound {:.6g}", dt, hydro_max_dt(state, 1.0)));

  HydroTrajectory traj;
  auto record = [&](const HydroState& s) {
    HydroRecord r;
    r.time = s.time;
    r.free_energy = hydro_free_energy(s);
    r.mass = hydro_mass(s);
    r.flux_sup_norm = flux_sup_norm(s);
    r.dist_to_front_sup = std::max(sup_distance(s.rho1.values, front.w1.values),
                                   sup_distance(s.rho2.values, front.w2.values));
    traj.records.push_back(r);
    if (on_record) on_record(r);
  };
  const double t0 = state.time;
  const long total = static_cast<long>(std::ceil(options.t_end / dt - 1e-9));
  record(state);
  for (long step = 1; step <= total; ++step) {
    const double target = step == total ? t0 + options.t_end : t0 + static_cast<double>(step) * dt;
    state = hydro_step(state, target - state.time);
    state.time = target;
    traj.steps = step;
    if (step % options.record_every == 0 || step == total) record(state);
  }
  traj.final_state = std::move(state);
  return traj;
}

}  // namespace vfp
