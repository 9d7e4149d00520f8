#include "vfplab/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fmt/format.h>

#include "vfplab/errors.hpp"

namespace vfp {

double eval_double_well(double rho1, double rho2, double beta) {
  if (!(rho1 > 0.0) || !(rho2 > 0.0))
    throw ValidationError(fmt::format("double well: densities must be positive (got {}, {})", rho1, rho2));
  return rho1 * std::log(rho1) + rho2 * std::log(rho2) + beta * rho1 * rho2;
}

double double_well_potential(double rho1, double rho2, double beta) {
  return std::log(rho1) + 1.0 + beta * rho2;
}

bool is_supercritical(double beta, double n) { return beta * n > 2.0; }

Coexistence coexistence_densities(double beta, double n, double tol) {
  if (!(beta > 0.0) || !(n > 0.0) || !(tol > 0.0))
    throw ValidationError("coexistence: beta, n and tol must be positive");
  const double slope = 0.5 * beta * n;
  auto residual = [slope](double m) { return std::atanh(m) - slope * m; };

  Coexistence out{0.5 * n, 0.5 * n, 0.0};
  if (!is_supercritical(beta, n)) return out;

  double lo = std::max(tol, 1e-3);
  double hi = 1.0 - 1e-12;
  double r_lo = residual(lo);
  if (!(r_lo < 0.0 && residual(hi) > 0.0)) return out;  // no sign change: stay symmetric

  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double r = residual(mid);
    if ((r < 0.0) == (r_lo < 0.0)) {
      lo = mid;
      r_lo = r;
    } else {
      hi = mid;
    }
    if (hi - lo <= tol * 1e-3 || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon()) break;
  }
  out.m = 0.5 * (lo + hi);
  out.rho_plus = 0.5 * n * (1.0 + out.m);
  out.rho_minus = 0.5 * n * (1.0 - out.m);
  return out;
}

}  // namespace vfp
