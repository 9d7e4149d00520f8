#pragma once

namespace vfp {

/// Coexisting homogeneous phases rho_plus = (n/2)(1+m), rho_minus = (n/2)(1-m).
struct Coexistence {
  double rho_plus = 0.0;
  double rho_minus = 0.0;
  double m = 0.0;
};

/// f(r1, r2) = r1 ln r1 + r2 ln r2 + beta r1 r2. Throws ValidationError for r_i <= 0.
double eval_double_well(double rho1, double rho2, double beta);

/// Partial derivative of the double well in its first argument.
double double_well_potential(double rho1, double rho2, double beta);

bool is_supercritical(double beta, double n);

/// Largest root m in [0, 1) of artanh(m) = (beta n / 2) m, by bisection.
/// Returns m = 0 exactly when beta n <= 2.
Coexistence coexistence_densities(double beta, double n, double tol = 1e-12);

}  // namespace vfp
