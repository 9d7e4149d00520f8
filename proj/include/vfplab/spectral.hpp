#pragma once

// Linear operators around the front: the Fokker-Planck operator L in Hermite
// coordinates, the second variation A of the excess free energy, its
// symmetrization Atilde = sqrt(w) A sqrt(w), and the constant-coefficient
// Atilde0 analysed through the kernel's Fourier symbol.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vfplab/front.hpp"
#include "vfplab/hermite.hpp"

namespace vfp {

using FieldPair = std::array<std::vector<double>, 2>;

// --- Fokker-Planck operator -------------------------------------------------

/// Diagonal of L in the normalized Hermite basis: (0, -beta, ..., -beta K).
Eigen::VectorXd fp_matrix_hermite(const HermiteBasis& basis);

/// <g, L g>_M = -beta sum_k k c_k^2.
double fp_quadratic_form(const HermiteBasis& basis, std::span<const double> coeffs);

/// ||(I-P) g||_D^2 = sum_{k>=1} (1 + beta (k+1)) c_k^2.
double dissipation_norm_sq(const HermiteBasis& basis, std::span<const double> coeffs);

/// -<g, L g>_M / ||(I-P) g||_D^2, or nullopt when (I-P) g = 0.
std::optional<double> lgap_ratio(const HermiteBasis& basis, std::span<const double> coeffs);

struct LgapProbe {
  double nu0 = 0.0;  // empirical minimum ratio
  int used = 0;
  int skipped = 0;
};

/// Minimum of lgap_ratio over `samples` standard-normal coefficient vectors.
LgapProbe check_lgap(const HermiteBasis& basis, int samples, std::uint64_t seed);

// --- Second variation A -------------------------------------------------------

/// (A g)_i = g_i / w_i + beta U * g_j, applied matrix-free with zero extension.
class OperatorA {
 public:
  explicit OperatorA(const FrontProfile& front) : front_(&front) {}

  [[nodiscard]] const FrontProfile& front() const { return *front_; }
  [[nodiscard]] FieldPair apply(const FieldPair& g) const;
  /// sum_i sum_z dz f_i g_i
  [[nodiscard]] double inner(const FieldPair& f, const FieldPair& g) const;
  [[nodiscard]] double norm(const FieldPair& f) const;
  [[nodiscard]] FieldPair null_vector() const;  // w'

 private:
  const FrontProfile* front_;
};

FieldPair apply_A(const OperatorA& op, const FieldPair& g);

/// <g, A g>.
double quadratic_form(const OperatorA& op, const FieldPair& g);

struct QuadraticFormCheck {
  double direct = 0.0;        // <g, A g>
  double measure_form = 0.0;  // -beta sum sum [g1/w1' - g2/w2']^2 U w1' w2' dz^2
  double excluded_mass = 0.0; // sum over excluded nodes of g_i^2 / w_i dz
  double grid_residual_term = 0.0;  // sum g_i^2 (A w')_i / w_i' dz, O(dz^2)
  int excluded_nodes = 0;
  bool agree = false;
};

/// Evaluates <g, A g> directly and through the double-sum measure form, which
/// divides by w'. Nodes with |w_i'| < 1e-12 max|w'| are left out of the
/// measure form and their share of the direct form is reported. The two agree
/// when |direct - measure_form - grid_residual_term| <= tol * sum_i sum_z dz
/// g_i^2 / w_i + excluded_mass. Without the grid term they differ by O(dz^2).
QuadraticFormCheck quadratic_form_identity(const OperatorA& op, const FieldPair& g, double tol);

// --- Atilde and its spectrum --------------------------------------------------

/// Dense 2nz x 2nz matrix of Atilde, ordered [u1; u2], quadrature weight dz
/// folded into the off-diagonal blocks.
Eigen::MatrixXd build_Atilde(const FrontProfile& front);

/// Atilde for a constant state (w1, w2) = (rho_a, rho_b) on the front's grid.
Eigen::MatrixXd build_Atilde_constant(const FrontProfile& front, double rho_a, double rho_b);

/// (w1'/sqrt(w1), w2'/sqrt(w2)) stacked as [u1; u2].
Eigen::VectorXd predicted_null_vector(const FrontProfile& front);

struct SpectrumReport {
  std::vector<double> eigenvalues;  // ascending
  Eigen::MatrixXd eigenvectors;     // columns match eigenvalues, unit norm
  std::optional<double> gap;        // second-smallest eigenvalue, set when aligned
  double null_residual = 0.0;       // ||Atilde p|| for the unit predicted null vector p
  double null_alignment = 0.0;      // |cos| between first eigenvector and p
  double max_pair_residual = 0.0;   // max ||Atilde v - lambda v|| / ||Atilde||_F
};

/// k smallest eigenpairs. Banded matrices (compactly supported kernel) are
/// solved in interleaved banded storage; otherwise a dense solver is used.
/// Throws NumericalError if the eigensolver fails to converge.
SpectrumReport spectrum_Atilde(const Eigen::MatrixXd& matrix, int k,
                               const Eigen::VectorXd& predicted_null = {});

struct SymbolSpectrum {
  double lower = 0.0;          // 1 - beta sqrt(rho+ rho-) max|Uhat|
  double upper = 0.0;          // 1 + beta sqrt(rho+ rho-) max|Uhat|
  double gap_edge = 0.0;       // same as lower
  double uhat_zero = 0.0;      // Uhat(0)
  double uhat_max_abs = 0.0;   // max over sampled xi of |Uhat(xi)|
  double xi_at_max = 0.0;
  double coupling = 0.0;       // beta sqrt(rho+ rho-)
};

/// Uhat(xi) = dz sum_m w_m cos(xi m dz) for the discrete kernel.
double kernel_symbol(const Kernel1D& kernel, double xi);

/// Spectrum enclosure of Atilde0 from the kernel symbol on `samples` points of
/// [0, pi/dz].
SymbolSpectrum symbol_spectrum_A0(double beta, double rho_plus, double rho_minus,
                                  const Kernel1D& kernel, int samples = 4096);

// --- Derivative bound probe -----------------------------------------------------

struct AprimeProbe {
  double min_ratio = 0.0;
  int used = 0;
  int skipped = 0;
};

/// ||(A u)'||^2 / (alpha^2 + ||Q u~'||^2) for u orthogonal to w', where
/// u = alpha (w1', -w2') + u~ with u~_i orthogonal to w_i' and Q removes the
/// w'' direction. Throws ValidationError if u is not orthogonal to w';
/// returns nullopt for a degenerate denominator.
std::optional<double> aprime_ratio(const OperatorA& op, const FieldPair& u);

/// Minimum of aprime_ratio over random smooth localized u projected off w'.
AprimeProbe probe_Aprime_bound(const OperatorA& op, int samples, std::uint64_t seed);

}  // namespace vfp
