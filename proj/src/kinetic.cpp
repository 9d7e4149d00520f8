#include "vfplab/kinetic.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <random>

#include "vfplab/errors.hpp"

namespace vfp {

GammaWeight make_gamma_weight(const Grid1D& grid, double gamma) {
  if (!(gamma >= 0.0)) throw ValidationError(fmt::format("gamma: must be >= 0 (got {})", gamma));
  GammaWeight w;
  w.gamma = gamma;
  w.values.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) w.values[k] = std::pow(1.0 + grid.z[k] * grid.z[k], gamma);
  return w;
}

KineticState reflect_state(const KineticState& s) {
  KineticState r(s.order, s.nz);
  r.time = s.time;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k <= s.order; ++k) {
      const auto src = s.mode(1 - i, k);
      auto dst = r.mode(i, k);
      const double sign = k % 2 == 0 ? 1.0 : -1.0;
      for (std::size_t z = 0; z < s.nz; ++z) dst[z] = sign * src[s.nz - 1 - z];
    }
  return r;
}

double symmetry_error(const KineticState& s) {
  double e = 0.0;
  for (int k = 0; k <= s.order; ++k) {
    const auto a = s.mode(0, k);
    const auto b = s.mode(1, k);
    const double sign = k % 2 == 0 ? 1.0 : -1.0;
    for (std::size_t z = 0; z < s.nz; ++z) e = std::max(e, std::abs(a[z] - sign * b[s.nz - 1 - z]));
  }
  return e;
}

// --- system -------------------------------------------------------------------------------

KineticSystem::KineticSystem(FrontProfile front, KineticOptions options)
    : front_(std::move(front)), options_(options) {
  if (options_.order < 1)
    throw ValidationError(fmt::format("hermite_order: must be >= 1 (got {})", options_.order));
  if (!(options_.cfl > 0.0)) throw ValidationError(fmt::format("cfl: must be > 0 (got {})", options_.cfl));
  basis_ = {options_.order, front_.params.beta};
  weight_ = make_gamma_weight(front_.grid, options_.gamma);
  const double nu0 = basis_.beta / (1.0 + 2.0 * basis_.beta);
  k_const_ = options_.k_const.value_or(10.0 / nu0);
  if (!(k_const_ > 0.0)) throw ValidationError(fmt::format("k_const: must be > 0 (got {})", k_const_));
  for (int i = 0; i < 2; ++i) {
    const ScalarField& partner = i == 0 ? front_.w2 : front_.w1;
    front_force_[i] = convolve_derivative(front_.kernel, partner.values, partner.extension);
    inv_w_[i].resize(nz());
    for (std::size_t z = 0; z < nz(); ++z) inv_w_[i][z] = 1.0 / front_.w(i)[z];
  }
}

double KineticSystem::max_dt() const { return options_.cfl * dz() / max_characteristic_speed(basis_); }

// Face flux F_{k+1/2} = (7 (f_k + f_{k+1}) - (f_{k-1} + f_{k+2})) / 12 with zero
// extension and no flux through the two end faces.
void KineticSystem::divergence(std::span<const double> f, std::span<double> out) const {
  const long n = static_cast<long>(f.size());
  const double s = 1.0 / (12.0 * dz());
  auto at = [&](long i) { return i < 0 || i >= n ? 0.0 : f[static_cast<std::size_t>(i)]; };
  auto flux = [&](long k) {  // face k+1/2
    if (k < 0 || k >= n - 1) return 0.0;
    return 7.0 * (at(k) + at(k + 1)) - (at(k - 1) + at(k + 2));
  };
  double left = 0.0;
  for (long k = 0; k < n; ++k) {
    const double right = flux(k);
    out[static_cast<std::size_t>(k)] = (right - left) * s;
    left = right;
  }
}

// Negative adjoint of divergence(): face differences averaged with the same
// weights, so constants are annihilated.
void KineticSystem::gradient(std::span<const double> f, std::span<double> out) const {
  const long n = static_cast<long>(f.size());
  const double s = 1.0 / (12.0 * dz());
  auto jump = [&](long k) {  // f_{k+1} - f_k across face k+1/2
    if (k < 0 || k >= n - 1) return 0.0;
    return f[static_cast<std::size_t>(k + 1)] - f[static_cast<std::size_t>(k)];
  };
  for (long k = 0; k < n; ++k)
    out[static_cast<std::size_t>(k)] = (7.0 * (jump(k) + jump(k - 1)) - (jump(k + 1) + jump(k - 2))) * s;
}

void KineticSystem::rhs(const KineticState& s, std::vector<double>& out) const {
  const int K = basis_.order;
  const std::size_t n = nz();
  if (s.order != K || s.nz != n) throw ValidationError("kinetic state does not match the system");
  const double beta = basis_.beta;
  const double rb = std::sqrt(beta);
  out.assign(s.coeffs.size(), 0.0);

  // Even modes feed odd rows through the gradient, odd modes feed even rows
  // through the divergence.
  std::vector<double> dc(s.coeffs.size());
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k <= K; ++k) {
      std::span<double> d{dc.data() + s.offset(i, k), n};
      if (k % 2 == 0)
        gradient(s.mode(i, k), d);
      else
        divergence(s.mode(i, k), d);
    }

  std::array<std::vector<double>, 2> self_force;
  for (int i = 0; i < 2; ++i)
    self_force[static_cast<std::size_t>(i)] =
        convolve(front_.kernel, std::span<const double>(dc.data() + s.offset(1 - i, 0), n), Extension::zero());

  std::vector<double> force(n);
  for (int i = 0; i < 2; ++i) {
    const auto& S = self_force[static_cast<std::size_t>(i)];
    const auto& E = front_force_[i];
    const auto& w = front_.w(i);
    for (std::size_t z = 0; z < n; ++z) force[z] = E[z] + S[z];

    for (int m = 0; m <= K; ++m) {
      double* r = out.data() + s.offset(i, m);
      const double* c = s.coeffs.data() + s.offset(i, m);
      const double lo = std::sqrt(static_cast<double>(m));
      const double hi = std::sqrt(static_cast<double>(m + 1));
      const double* d_lo = m > 0 ? dc.data() + s.offset(i, m - 1) : nullptr;
      const double* d_hi = m < K ? dc.data() + s.offset(i, m + 1) : nullptr;
      const double* c_lo = m > 0 ? s.coeffs.data() + s.offset(i, m - 1) : nullptr;
      const double damp = beta * m;
      const double raise = rb * lo;
      for (std::size_t z = 0; z < n; ++z) {
        double transport = 0.0;
        if (d_lo) transport += lo * d_lo[z];
        if (d_hi) transport += hi * d_hi[z];
        double v = -transport / rb - damp * c[z];
        if (c_lo) v -= raise * force[z] * c_lo[z];
        r[z] = v;
      }
      if (m == 1)
        for (std::size_t z = 0; z < n; ++z) r[z] -= rb * w[z] * S[z];
    }
  }
}

// --- initial data -----------------------------------------------------------------------

std::string to_string(PerturbationKind kind) {
  switch (kind) {
    case PerturbationKind::gaussian_density:
      return "gaussian_density";
    case PerturbationKind::mode1_current:
      return "mode1_current";
    case PerturbationKind::custom:
      return "custom";
  }
  return "unknown";
}

PerturbationKind perturbation_kind_from_string(std::string_view name) {
  if (name == "gaussian_density") return PerturbationKind::gaussian_density;
  if (name == "mode1_current") return PerturbationKind::mode1_current;
  if (name == "custom") return PerturbationKind::custom;
  throw ValidationError(fmt::format(
      "perturbation: unknown kind '{}' (expected gaussian_density|mode1_current|custom)", name));
}

KineticState init_perturbation(const KineticSystem& sys, PerturbationKind kind, double amplitude,
                               std::span<const double> custom) {
  if (!(amplitude >= 0.0)) throw ValidationError(fmt::format("amplitude: must be >= 0 (got {})", amplitude));
  KineticState s = sys.zero_state();
  const auto& z = sys.front().grid.z;
  const std::size_t n = sys.nz();
  auto gaussian = [&](double width) {
    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k) g[k] = std::exp(-0.5 * z[k] * z[k] / (width * width));
    return g;
  };

  switch (kind) {
    case PerturbationKind::gaussian_density: {
      const auto g1 = gaussian(1.0);
      const auto g2 = gaussian(2.0);
      double s1 = 0.0, s2 = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        s1 += g1[k];
        s2 += g2[k];
      }
      const double ratio = s1 / s2;
      auto a = s.mode(0, 0);
      for (std::size_t k = 0; k < n; ++k) a[k] = amplitude * (g1[k] - ratio * g2[k]);
      break;
    }
    case PerturbationKind::mode1_current: {
      const auto g1 = gaussian(1.0);
      auto c = s.mode(0, 1);
      for (std::size_t k = 0; k < n; ++k) c[k] = amplitude * g1[k];
      break;
    }
    case PerturbationKind::custom: {
      if (custom.size() != s.coeffs.size())
        throw ValidationError(fmt::format("perturbation: custom array has {} values, expected {}",
                                          custom.size(), s.coeffs.size()));
      for (std::size_t k = 0; k < custom.size(); ++k) s.coeffs[k] = amplitude * custom[k];
      if (sys.options().enforce_symmetry) {
        const double e = symmetry_error(s);
        if (e > 1e-13)
          throw ValidationError(fmt::format("perturbation: custom data breaks the mirror symmetry by {:.3e}", e));
      }
      return s;
    }
  }
  // Species 2 is the mirror image of species 1.
  for (int k = 0; k <= s.order; ++k) {
    const auto src = s.mode(0, k);
    auto dst = s.mode(1, k);
    const double sign = k % 2 == 0 ? 1.0 : -1.0;
    for (std::size_t j = 0; j < n; ++j) dst[j] = sign * src[n - 1 - j];
  }
  return s;
}

void add_seeded_noise(const KineticSystem& sys, KineticState& s, double level, std::uint64_t seed) {
  if (!(level >= 0.0)) throw ValidationError(fmt::format("noise: must be >= 0 (got {})", level));
  if (level == 0.0) return;
  const auto& z = sys.front().grid.z;
  const std::size_t n = sys.nz();
  std::vector<double> g1(n), g2(n);
  double s2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    g1[k] = std::exp(-0.5 * z[k] * z[k]);
    g2[k] = std::exp(-0.125 * z[k] * z[k]);
    s2 += g2[k];
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int mode = 0; mode < std::min(2, s.modes()); ++mode) {
    auto c = s.mode(0, mode);
    double added = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = level * normal(rng) * g1[k];
      c[k] += d;
      added += d;
    }
    if (mode == 0)
      for (std::size_t k = 0; k < n; ++k) c[k] -= added / s2 * g2[k];
  }
  for (int k = 0; k <= s.order; ++k) {
    const auto src = s.mode(0, k);
    auto dst = s.mode(1, k);
    const double sign = k % 2 == 0 ? 1.0 : -1.0;
    for (std::size_t j = 0; j < n; ++j) dst[j] = sign * src[n - 1 - j];
  }
}

// --- time stepping -------------------------------------------------------------------------

std::vector<double> rhs(const KineticSystem& sys, const KineticState& s) {
  std::vector<double> out;
  sys.rhs(s, out);
  return out;
}

namespace {

void symmetrize(KineticState& s) {
  const KineticState r = reflect_state(s);
  for (std::size_t k = 0; k < s.coeffs.size(); ++k) s.coeffs[k] = 0.5 * (s.coeffs[k] + r.coeffs[k]);
}

}  // namespace

KineticState step_rk4(const KineticSystem& sys, const KineticState& s, double dt) {
  if (!(std::abs(dt) <= sys.max_dt() * (1.0 + 1e-12)))
    throw ValidationError(fmt::format("dt: {} violates the CFL bound {:.6g} (cfl {} * dz / v_max)", dt,
                                      sys.max_dt(), sys.options().cfl));
  const std::size_t N = s.coeffs.size();
  std::vector<double> k1, k2, k3, k4;
  KineticState tmp = s;
  sys.rhs(s, k1);
  for (std::size_t i = 0; i < N; ++i) tmp.coeffs[i] = s.coeffs[i] + 0.5 * dt * k1[i];
  sys.rhs(tmp, k2);
  for (std::size_t i = 0; i < N; ++i) tmp.coeffs[i] = s.coeffs[i] + 0.5 * dt * k2[i];
  sys.rhs(tmp, k3);
  for (std::size_t i = 0; i < N; ++i) tmp.coeffs[i] = s.coeffs[i] + dt * k3[i];
  sys.rhs(tmp, k4);
  KineticState next = s;
  const double h6 = dt / 6.0;
  for (std::size_t i = 0; i < N; ++i)
    next.coeffs[i] = s.coeffs[i] + h6 * ((k1[i] + k4[i]) + 2.0 * (k2[i] + k3[i]));
  next.time = s.time + dt;
  if (sys.options().enforce_symmetry) symmetrize(next);
  return next;
}

// --- norms and functionals -----------------------------------------------------------------

namespace {

double weighted_sum(const KineticSystem& sys, const KineticState& s, const GammaWeight* weight,
                    int first_mode, bool dissipation) {
  const auto& f = sys.front();
  const double beta = sys.basis().beta;
  double total = 0.0;
  for (int i = 0; i < 2; ++i) {
    const auto& w = f.w(i);
    for (int k = first_mode; k <= s.order; ++k) {
      const double factor = dissipation ? 1.0 + beta * (k + 1) : 1.0;
      const auto c = s.mode(i, k);
      double acc = 0.0;
      for (std::size_t z = 0; z < s.nz; ++z) {
        const double zw = weight ? weight->values[z] * weight->values[z] : 1.0;
        acc += zw * c[z] * c[z] / w[z];
      }
      total += factor * acc;
    }
  }
  return total * sys.dz();
}

// (1 + e) log(1 + e) - e, with a series near 0 to avoid cancellation.
double entropy_excess(double e) {
  if (std::abs(e) < 1e-3) {
    double term = e * e;
    double sum = 0.0;
    for (int n = 2; n <= 9; ++n) {
      sum += (n % 2 == 0 ? term : -term) / (n * (n - 1.0));
      term *= e;
    }
    return sum;
  }
  return (1.0 + e) * std::log1p(e) - e;
}

}  // namespace

double norm_M(const KineticSystem& sys, const KineticState& s, const GammaWeight* weight) {
  return std::sqrt(weighted_sum(sys, s, weight, 0, false));
}

double norm_D(const KineticSystem& sys, const KineticState& s, const GammaWeight* weight) {
  return std::sqrt(weighted_sum(sys, s, weight, 1, true));
}

std::array<double, 2> species_mass(const KineticSystem& sys, const KineticState& s) {
  std::array<double, 2> m{};
  for (int i = 0; i < 2; ++i) {
    m[static_cast<std::size_t>(i)] = compensated_sum(s.density(i)) * sys.dz();
  }
  return m;
}

double null_component(const KineticSystem& sys, const KineticState& s) {
  double acc = 0.0;
  for (int i = 0; i < 2; ++i) {
    const auto a = s.density(i);
    const auto& wp = sys.front().wp(i);
    for (std::size_t z = 0; z < s.nz; ++z) acc += a[z] * wp[z];
  }
  return acc * sys.dz();
}

double free_energy_G(const KineticSystem& sys, const KineticState& s) {
  const auto& f = sys.front();
  const int K = s.order;
  const double beta = sys.basis().beta;
  const double dz = sys.dz();
  const std::size_t n = s.nz;
  const GaussHermiteRule rule = gauss_hermite(K + 1);
  const std::size_t nq = rule.nodes.size();
  std::vector<std::vector<double>> table(nq);
  for (std::size_t q = 0; q < nq; ++q) table[q] = hermite_he_normalized(K, rule.nodes[q]);
  const double c0 = 0.5 * std::log(beta / (2.0 * std::numbers::pi));

  double linear = 0.0, entropy = 0.0;
  std::vector<double> eps(nq);
  for (int i = 0; i < 2; ++i) {
    const auto& w = f.w(i);
    const auto field = convolve(f.kernel, i == 0 ? f.w2 : f.w1);
    const auto a = s.density(i);
    for (std::size_t z = 0; z < n; ++z) {
      linear += a[z] * (std::log(w[z]) + beta * field.values[z] + 1.0 + c0);
      std::fill(eps.begin(), eps.end(), 0.0);
      for (int k = 0; k <= K; ++k) {
        const double c = s.coeffs[s.offset(i, k) + z];
        if (c == 0.0) continue;
        for (std::size_t q = 0; q < nq; ++q) eps[q] += c * table[q][static_cast<std::size_t>(k)];
      }
      double acc = 0.0;
      for (std::size_t q = 0; q < nq; ++q) {
        const double e = eps[q] / w[z];
        if (!(1.0 + e > 0.0))
          throw NumericalError(fmt::format(
              "free energy: f_{} <= 0 at z = {:.6g}, velocity node xi = {:.6g} (perturbation too large)",
              i + 1, f.grid.z[z], rule.nodes[q]));
        acc += rule.weights[q] * entropy_excess(e);
      }
      entropy += w[z] * acc;
    }
  }
  const auto cross = convolve(f.kernel, s.density(1), Extension::zero());
  double inter = 0.0;
  const auto a1 = s.density(0);
  for (std::size_t z = 0; z < n; ++z) inter += a1[z] * cross[z];
  return (linear + entropy + beta * inter) * dz;
}

double quadratic_free_energy(const KineticSystem& sys, const KineticState& s) {
  const double beta = sys.basis().beta;
  const auto cross = convolve(sys.front().kernel, s.density(1), Extension::zero());
  double inter = 0.0;
  const auto a1 = s.density(0);
  for (std::size_t z = 0; z < s.nz; ++z) inter += a1[z] * cross[z];
  return 0.5 * weighted_sum(sys, s, nullptr, 0, false) + beta * inter * sys.dz();
}

DiagnosticsRecord diagnostics(const KineticSystem& sys, const KineticState& s) {
  DiagnosticsRecord r;
  r.time = s.time;
  r.norm_M = norm_M(sys, s);
  r.norm_D = norm_D(sys, s);
  r.norm_M_gamma = norm_M(sys, s, &sys.gamma_weight());

  KineticState ds = s;
  sys.rhs(s, ds.coeffs);
  r.dnorm_t = norm_M(sys, ds);
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k <= s.order; ++k) {
      const auto d = derivative(s.mode(i, k), sys.dz(), EdgeClosure::zero_extension, 4);
      std::copy(d.begin(), d.end(), ds.mode(i, k).begin());
    }
  r.dnorm_z = norm_M(sys, ds);
  r.energy_combined =
      sys.k_const() * (r.norm_M * r.norm_M + r.dnorm_t * r.dnorm_t) + r.dnorm_z * r.dnorm_z;
  r.free_energy = free_energy_G(sys, s);
  r.mass = species_mass(sys, s);
  r.null_component = null_component(sys, s);
  r.symmetry_error = symmetry_error(s);
  return r;
}

// --- evolution -----------------------------------------------------------------------------

Trajectory evolve(const KineticSystem& sys, KineticState state, const EvolveOptions& options,
                  const std::function<void(const DiagnosticsRecord&)>& on_record) {
  if (!(options.t_end > 0.0)) throw ValidationError(fmt::format("tmax: must be > 0 (got {})", options.t_end));
  if (!(options.dt > 0.0)) throw ValidationError(fmt::format("dt: must be > 0 (got {})", options.dt));
  if (options.record_every < 1)
    throw ValidationError(fmt::format("record_every: must be >= 1 (got {})", options.record_every));
  if (options.dt > sys.max_dt())
    throw ValidationError(fmt::format("dt: {} violates the CFL bound {:.6g} (cfl {} * dz / v_max)", options.dt,
                                      sys.max_dt(), sys.options().cfl));

  Trajectory traj;
  auto record = [&](const KineticState& s) {
    traj.records.push_back(diagnostics(sys, s));
    if (on_record) on_record(traj.records.back());
  };
  const double t0 = state.time;
  const long total = static_cast<long>(std::ceil(options.t_end / options.dt - 1e-9));
  const double start_norm = norm_M(sys, state);
  const double limit = options.blowup_factor * std::max(start_norm, std::numeric_limits<double>::min());
  record(state);
  for (long step = 1; step <= total; ++step) {
    const double target = step == total ? t0 + options.t_end : t0 + static_cast<double>(step) * options.dt;
    state = step_rk4(sys, state, target - state.time);
    state.time = target;
    traj.steps = step;
    const double nm = norm_M(sys, state);
    if (!std::isfinite(nm) || (start_norm > 0.0 && nm > limit)) {
      traj.aborted = true;
      traj.abort_reason = fmt::format("numerical blow-up at t = {:.6g}: norm_M = {:.3e} (start {:.3e})",
                                      state.time, nm, start_norm);
      break;
    }
    if (step % options.record_every == 0 || step == total) record(state);
  }
  traj.final_state = std::move(state);
  return traj;
}

EnergyReport energy_monitor(const std::vector<DiagnosticsRecord>& records, double k_const, double gamma,
                            double rel_tol) {
  if (records.empty()) throw ValidationError("energy monitor: empty trajectory");
  EnergyReport rep;
  rep.reference_exponent = 2.0 * gamma;
  auto energy = [&](const DiagnosticsRecord& r) {
    return k_const * (r.norm_M * r.norm_M + r.dnorm_t * r.dnorm_t) + r.dnorm_z * r.dnorm_z;
  };
  rep.tolerance = rel_tol * energy(records.front());
  for (std::size_t k = 1; k < records.size(); ++k) {
    const double inc = energy(records[k]) - energy(records[k - 1]);
    rep.max_increase = std::max(rep.max_increase, inc);
    if (inc > rep.tolerance) ++rep.violations;
  }

  if (gamma > 0.0) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
    for (const auto& r : records) {
      if (!(r.norm_M > 0.0)) continue;
      const double x = std::log1p(r.time / (2.0 * gamma));
      const double y = std::log(r.norm_M);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      cnt += 1;
    }
    const double den = cnt * sxx - sx * sx;
    if (cnt >= 2 && den > 0.0) {
      const double slope = (cnt * sxy - sx * sy) / den;
      rep.envelope_exponent = -slope;
      rep.envelope_constant = std::exp((sy - slope * sx) / cnt);
    }
  }
  return rep;
}

}  // namespace vfp
