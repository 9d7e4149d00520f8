#include "vfplab/hermite.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "vfplab/errors.hpp"

namespace vfp {

double HermiteBasis::maxwellian(double v) const {
  return std::sqrt(beta / (2.0 * std::numbers::pi)) * std::exp(-0.5 * beta * v * v);
}

double HermiteBasis::mode_value(int k, double v) const {
  return maxwellian(v) * hermite_he_normalized(k, std::sqrt(beta) * v)[static_cast<std::size_t>(k)];
}

std::vector<double> hermite_he(int kmax, double x) {
  std::vector<double> he(static_cast<std::size_t>(kmax) + 1);
  he[0] = 1.0;
  if (kmax >= 1) he[1] = x;
  for (int k = 1; k < kmax; ++k)
    he[static_cast<std::size_t>(k) + 1] = x * he[static_cast<std::size_t>(k)] - k * he[static_cast<std::size_t>(k) - 1];
  return he;
}

std::vector<double> hermite_he_normalized(int kmax, double x) {
  // psi_{k+1} = (x psi_k - sqrt(k) psi_{k-1}) / sqrt(k+1), stable for large k.
  std::vector<double> psi(static_cast<std::size_t>(kmax) + 1);
  psi[0] = 1.0;
  if (kmax >= 1) psi[1] = x;
  for (int k = 1; k < kmax; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    psi[uk + 1] = (x * psi[uk] - std::sqrt(static_cast<double>(k)) * psi[uk - 1]) / std::sqrt(k + 1.0);
  }
  return psi;
}

GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw ValidationError("gauss_hermite: need at least one node");
  // Golub-Welsch on the Jacobi matrix of the probabilists' polynomials.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericalError("gauss_hermite: eigen solve failed");
  GaussHermiteRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int q = 0; q < n; ++q) {
    rule.nodes[static_cast<std::size_t>(q)] = solver.eigenvalues()[q];
    const double v0 = solver.eigenvectors()(0, q);
    rule.weights[static_cast<std::size_t>(q)] = v0 * v0;
  }
  return rule;
}

double largest_hermite_root(int n) {
  if (n < 1) throw ValidationError("largest_hermite_root: n must be >= 1");
  return gauss_hermite(n).nodes.back();
}

double max_characteristic_speed(const HermiteBasis& basis) {
  return largest_hermite_root(basis.order + 1) / std::sqrt(basis.beta);
}

}  // namespace vfp
