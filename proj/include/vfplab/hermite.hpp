#pragma once

// Velocity representation: normalized probabilists' Hermite modes
//   phi_k(v) = M(v) He_k(sqrt(beta) v) / sqrt(k!),
// orthonormal under (f, g)_M = int f g / M dv. In these coordinates the
// Fokker-Planck operator is diag(-beta k), and
//   d/dv phi_k = -sqrt(beta (k+1)) phi_{k+1},
//   v phi_k    = (sqrt(k+1) phi_{k+1} + sqrt(k) phi_{k-1}) / sqrt(beta).

#include <vector>

namespace vfp {

struct HermiteBasis {
  int order = 16;  // highest retained mode K
  double beta = 1.25;

  [[nodiscard]] int size() const { return order + 1; }
  [[nodiscard]] double maxwellian(double v) const;
  [[nodiscard]] double mode_value(int k, double v) const;
};

/// He_0(x) .. He_kmax(x) by the three-term recurrence.
std::vector<double> hermite_he(int kmax, double x);

/// Same, divided by sqrt(k!).
std::vector<double> hermite_he_normalized(int kmax, double x);

/// n-point Gauss rule for the standard normal weight: sum_q weights[q] g(nodes[q])
/// approximates E[g(X)], exact for polynomials of degree <= 2n-1.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussHermiteRule gauss_hermite(int n);

/// Largest root of He_n.
double largest_hermite_root(int n);

/// Fastest characteristic speed of the truncated transport: the largest root
/// of He_{K+1} divided by sqrt(beta).
double max_characteristic_speed(const HermiteBasis& basis);

}  // namespace vfp
