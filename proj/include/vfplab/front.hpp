#pragma once

// Front profile w = (w1, w2) joining the two coexisting phases: the damped
// fixed-point solver for the Euler-Lagrange equations and the checks of the
// front's structural properties.

#include <optional>
#include <vector>

#include "vfplab/core.hpp"

namespace vfp {

struct FrontReport {
  double el_residual = 0.0;
  double elp_residual = 0.0;
  double excess_energy = 0.0;
  double tail_rate = 0.0;
  int iterations = 0;
  double last_update = 0.0;
  std::vector<double> energy_trace;  // excess energy every `energy_trace_every` sweeps
};

struct FrontProfile {
  ModelParams params;
  Grid1D grid;
  Kernel1D kernel;
  ScalarField w1, w2;    // densities, extended by their asymptotic constants
  ScalarField w1p, w2p;  // z-derivatives, zero extension
  double rho_plus = 0.0;
  double rho_minus = 0.0;
  double el_constant = 0.0;  // C = ln rho+ + beta rho-
  FrontReport report;

  [[nodiscard]] std::size_t size() const { return grid.size(); }
  [[nodiscard]] const std::vector<double>& w(int species) const {
    return species == 0 ? w1.values : w2.values;
  }
  [[nodiscard]] const std::vector<double>& wp(int species) const {
    return species == 0 ? w1p.values : w2p.values;
  }
};

struct FrontSolverOptions {
  double tol = 1e-12;  // sup-norm of the per-sweep update
  int max_iter = 100000;
  double damping = 0.5;
  bool require_supercritical = true;
  int energy_trace_every = 0;
  std::optional<std::vector<double>> initial_w1;  // default: sharp step
};

/// rho1 <- (1 - theta) rho1 + theta exp(C - beta U * rho2), rho2(z) := rho1(-z)
/// after every sweep. Throws ValidationError for subcritical parameters (unless
/// the guard is disabled) and NumericalError when max_iter is exhausted.
FrontProfile solve_front(const ModelParams& params, const FrontSolverOptions& options = {});

/// Assembles a profile from given densities (derivatives by finite differences,
/// report filled in). The extensions of `w1` and `w2` are kept as given.
FrontProfile make_profile(const ModelParams& params, ScalarField w1, ScalarField w2,
                          double rho_plus, double rho_minus);

/// Sharp step rho_minus for z < 0, rho_plus for z >= 0, with w2 its mirror.
FrontProfile sharp_step_profile(const ModelParams& params);

/// max_{i,z} |ln w_i + beta (U * w_j) - C|.
double el_residual(const FrontProfile& front);

/// max_{i,z} |w_i'/w_i + beta (U * w_j')|.
double elp_residual(const FrontProfile& front);

/// Excess free energy relative to the homogeneous minimizer, using the local
/// double-well term plus the nonlocal cross term so the integrand decays in
/// the tails. The local term is taken relative to the common tangent of the
/// double well at the two coexisting phases.
double excess_free_energy(const FrontProfile& front);

struct TailFit {
  double alpha = 0.0;
  int points = 0;
  bool window_shrunk = false;
};

/// Least-squares decay rate of |w1(z) - rho+| on z in [Z/2, Z - R].
/// Nodes at the noise floor are dropped (window_shrunk = true); throws
/// NumericalError if fewer than three usable nodes remain.
TailFit tail_decay_fit(const FrontProfile& front);
double tail_decay_rate(const FrontProfile& front);

struct FrontInvariants {
  double symmetry_error = 0.0;  // max |w1(z) - w2(-z)|
  double centering_error = 0.0; // |w1(0) - w2(0)|
  bool monotone = false;        // w1 nondecreasing, w2 nonincreasing
  bool strictly_bounded = false;
  double tail_error = 0.0;      // max(|w1(-Z) - rho-|, |w1(Z) - rho+|)
};

FrontInvariants check_front_invariants(const FrontProfile& front);

}  // namespace vfp
