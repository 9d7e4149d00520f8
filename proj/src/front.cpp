#include "vfplab/front.hpp"

#include <cmath>
#include <fmt/format.h>

#include "vfplab/errors.hpp"
#include "vfplab/thermo.hpp"

namespace vfp {

namespace {

constexpr int kFrontDerivativeOrder = 2;

FrontReport fill_report(const FrontProfile& front, int iterations, double last_update) {
  FrontReport r;
  r.iterations = iterations;
  r.last_update = last_update;
  r.el_residual = el_residual(front);
  r.elp_residual = elp_residual(front);
  r.excess_energy = excess_free_energy(front);
  try {
    r.tail_rate = tail_decay_rate(front);
  } catch (const NumericalError&) {
    r.tail_rate = 0.0;  // flat profile, no tail
  }
  return r;
}

void set_derivatives(FrontProfile& front) {
  front.w1p = {derivative(front.w1.values, front.grid.dz, EdgeClosure::one_sided, kFrontDerivativeOrder), Extension::zero()};
  front.w2p = {derivative(front.w2.values, front.grid.dz, EdgeClosure::one_sided, kFrontDerivativeOrder), Extension::zero()};
}

}  // namespace

FrontProfile make_profile(const ModelParams& params, ScalarField w1, ScalarField w2,
                          double rho_plus, double rho_minus) {
  FrontProfile front;
  front.params = params;
  front.grid = build_grid(params);
  front.kernel = build_kernel(params.kernel_kind, params.kernel_radius, front.grid);
  if (w1.values.size() != front.grid.size() || w2.values.size() != front.grid.size())
    throw ValidationError("front: density arrays do not match the grid size");
  front.w1 = std::move(w1);
  front.w2 = std::move(w2);
  front.rho_plus = rho_plus;
  front.rho_minus = rho_minus;
  front.el_constant = std::log(rho_plus) + params.beta * rho_minus;
  set_derivatives(front);
  front.report = fill_report(front, 0, 0.0);
  return front;
}

FrontProfile sharp_step_profile(const ModelParams& params) {
  const auto coex = coexistence_densities(params.beta, params.n);
  const Grid1D grid = build_grid(params);
  std::vector<double> step(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k)
    step[k] = grid.z[k] < 0.0 ? coex.rho_minus : coex.rho_plus;
  const Extension ext = Extension::constant(coex.rho_minus, coex.rho_plus);
  ScalarField w1{step, ext};
  ScalarField w2 = reflect(w1);
  return make_profile(params, std::move(w1), std::move(w2), coex.rho_plus, coex.rho_minus);
}

FrontProfile solve_front(const ModelParams& params, const FrontSolverOptions& options) {
  params.validate();
  if (!(options.damping > 0.0 && options.damping <= 1.0))
    throw ValidationError(fmt::format("damping: must lie in (0, 1] (got {})", options.damping));
  if (options.require_supercritical && !params.supercritical())
    throw ValidationError(fmt::format(
        "front does not exist for beta*n = {} <= 2 (no phase transition)", params.beta * params.n));

  const auto coex = coexistence_densities(params.beta, params.n);
  const Grid1D grid = build_grid(params);
  const Kernel1D kernel = build_kernel(params.kernel_kind, params.kernel_radius, grid);
  const double C = std::log(coex.rho_plus) + params.beta * coex.rho_minus;
  const Extension ext1 = Extension::constant(coex.rho_minus, coex.rho_plus);
  const Extension ext2 = ext1.mirrored();
  const double theta = options.damping;
  const std::size_t n = grid.size();

  std::vector<double> w1(n);
  if (options.initial_w1) {
    if (options.initial_w1->size() != n) throw ValidationError("front: initial guess has wrong size");
    w1 = *options.initial_w1;
  } else {
    for (std::size_t k = 0; k < n; ++k) w1[k] = grid.z[k] < 0.0 ? coex.rho_minus : coex.rho_plus;
  }

  FrontReport trace_holder;
  auto trace_energy = [&](const std::vector<double>& cur) {
    FrontProfile tmp;
    tmp.params = params;
    tmp.grid = grid;
    tmp.kernel = kernel;
    tmp.w1 = {cur, ext1};
    tmp.w2 = {reflect(std::span<const double>(cur)), ext2};
    tmp.rho_plus = coex.rho_plus;
    tmp.rho_minus = coex.rho_minus;
    tmp.el_constant = C;
    trace_holder.energy_trace.push_back(excess_free_energy(tmp));
  };

  int it = 0;
  double update = 0.0;
  bool converged = false;
  while (it < options.max_iter) {
    const auto w2 = reflect(std::span<const double>(w1));
    const auto field = convolve(kernel, w2, ext2);
    update = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double target = std::exp(C - params.beta * field[k]);
      const double next = (1.0 - theta) * w1[k] + theta * target;
      update = std::max(update, std::abs(next - w1[k]));
      w1[k] = next;
    }
    ++it;
    if (options.energy_trace_every > 0 && it % options.energy_trace_every == 0) trace_energy(w1);
    if (update < options.tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NumericalError(fmt::format("front solver did not converge in {} sweeps (last update {:.3e})",
                                     options.max_iter, update));

  FrontProfile front;
  front.params = params;
  front.grid = grid;
  front.kernel = kernel;
  front.w2 = {reflect(std::span<const double>(w1)), ext2};
  front.w1 = {std::move(w1), ext1};
  front.rho_plus = coex.rho_plus;
  front.rho_minus = coex.rho_minus;
  front.el_constant = C;
  set_derivatives(front);
  front.report = fill_report(front, it, update);
  front.report.energy_trace = std::move(trace_holder.energy_trace);
  return front;
}

double el_residual(const FrontProfile& front) {
  const double beta = front.params.beta;
  const auto u1 = convolve(front.kernel, front.w2);
  const auto u2 = convolve(front.kernel, front.w1);
  double r = 0.0;
  for (std::size_t k = 0; k < front.size(); ++k) {
    r = std::max(r, std::abs(std::log(front.w1.values[k]) + beta * u1.values[k] - front.el_constant));
    r = std::max(r, std::abs(std::log(front.w2.values[k]) + beta * u2.values[k] - front.el_constant));
  }
  return r;
}

double elp_residual(const FrontProfile& front) {
  const double beta = front.params.beta;
  const auto c1 = convolve(front.kernel, front.w2p);
  const auto c2 = convolve(front.kernel, front.w1p);
  double r = 0.0;
  for (std::size_t k = 0; k < front.size(); ++k) {
    r = std::max(r, std::abs(front.w1p.values[k] / front.w1.values[k] + beta * c1.values[k]));
    r = std::max(r, std::abs(front.w2p.values[k] / front.w2.values[k] + beta * c2.values[k]));
  }
  return r;
}

double excess_free_energy(const FrontProfile& front) {
  const double beta = front.params.beta;
  const double n = front.params.n;
  const double rp = front.rho_plus;
  const double rm = front.rho_minus;
  const double f_ref = eval_double_well(rp, rm, beta);
  // Common tangent slope of f at (rho+, rho-) and (rho-, rho+).
  const double mu = double_well_potential(rp, rm, beta);
  const double dz = front.grid.dz;
  const Kernel1D& U = front.kernel;
  const int M = U.span;
  const auto& a = front.w1.values;
  const auto& b = front.w2.values;
  const long nn = static_cast<long>(front.size());
  auto value = [nn](const ScalarField& f, long k) {
    if (k < 0) return f.extension.kind == Extension::Kind::constant ? f.extension.left : 0.0;
    if (k >= nn) return f.extension.kind == Extension::Kind::constant ? f.extension.right : 0.0;
    return f.values[static_cast<std::size_t>(k)];
  };

  double local = 0.0;
  double cross = 0.0;
  for (long k = 0; k < nn; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    local += eval_double_well(a[uk], b[uk], beta) - f_ref - mu * (a[uk] + b[uk] - n);
    double s = 0.0;
    for (int m = -M; m <= M; ++m) {
      if (m == 0) continue;
      const double a2 = value(front.w1, k - m);
      const double b2 = value(front.w2, k - m);
      s += U.weight(m) * (a[uk] - a2) * (b2 - b[uk]);
    }
    cross += s;
  }
  return local * dz + 0.5 * beta * cross * dz * dz;
}

TailFit tail_decay_fit(const FrontProfile& front) {
  const double Z = front.params.half_width;
  const double R = front.params.kernel_radius;
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(front.rho_plus);
  std::vector<double> xs, ys;
  bool shrunk = false;
  for (std::size_t k = 0; k < front.size(); ++k) {
    const double z = front.grid.z[k];
    if (z < 0.5 * Z || z > Z - R) continue;
    const double d = std::abs(front.w1.values[k] - front.rho_plus);
    if (d <= floor) {
      shrunk = true;
      continue;
    }
    xs.push_back(z);
    ys.push_back(std::log(d));
  }
  if (xs.size() < 3)
    throw NumericalError("tail decay: no resolvable tail variation in the window [Z/2, Z-R]");
  const double N = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (N * sxy - sx * sy) / (N * sxx - sx * sx);
  return {-slope, static_cast<int>(xs.size()), shrunk};
}

double tail_decay_rate(const FrontProfile& front) { return tail_decay_fit(front).alpha; }

FrontInvariants check_front_invariants(const FrontProfile& front) {
  FrontInvariants inv;
  const auto& a = front.w1.values;
  const auto& b = front.w2.values;
  const std::size_t n = front.size();
  const std::size_t c = front.grid.center();
  for (std::size_t k = 0; k < n; ++k) inv.symmetry_error = std::max(inv.symmetry_error, std::abs(a[k] - b[n - 1 - k]));
  inv.centering_error = std::abs(a[c] - b[c]);
  inv.monotone = true;
  for (std::size_t k = 1; k < n; ++k)
    if (a[k] < a[k - 1] || b[k] > b[k - 1]) inv.monotone = false;
  inv.strictly_bounded = true;
  for (std::size_t k = 0; k < n; ++k)
    for (double x : {a[k], b[k]})
      if (!(x > front.rho_minus && x < front.rho_plus)) inv.strictly_bounded = false;
  inv.tail_error = std::max(std::abs(a.front() - front.rho_minus), std::abs(a.back() - front.rho_plus));
  return inv;
}

}  // namespace vfp
