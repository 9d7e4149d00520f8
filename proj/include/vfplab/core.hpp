#pragma once

// Shared domain types: model parameters, the symmetric z-grid, the discrete
// interaction kernel and the convolution / differentiation primitives.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vfp {

enum class KernelKind { biweight, bump };

std::string to_string(KernelKind kind);
KernelKind kernel_kind_from_string(std::string_view name);

struct ModelParams {
  double beta = 1.25;       // inverse temperature
  double n = 2.0;           // mean total density
  KernelKind kernel_kind = KernelKind::biweight;
  double kernel_radius = 1.0;
  double half_width = 12.0;  // domain is [-half_width, half_width]
  int nz = 1025;
  int hermite_order = 16;
  double dt = 0.003;

  [[nodiscard]] bool supercritical() const { return beta * n > 2.0; }
  [[nodiscard]] double dz() const { return 2.0 * half_width / (nz - 1); }

  /// Throws ValidationError naming the first violated constraint.
  void validate() const;
};

/// Uniform grid on [-Z, Z] with an odd node count, so z = 0 is the middle node
/// and z[k] == -z[nz-1-k] bit for bit.
struct Grid1D {
  std::vector<double> z;
  double dz = 0.0;

  [[nodiscard]] std::size_t size() const { return z.size(); }
  [[nodiscard]] std::size_t center() const { return (z.size() - 1) / 2; }
};

Grid1D build_grid(double half_width, int nz);
Grid1D build_grid(const ModelParams& params);

/// Discrete even kernel sampled at offsets m*dz, m = -span..span.
/// `weights` are rescaled so that sum(weights)*dz == 1; `dweights` hold the
/// analytically differentiated kernel under the same scaling.
struct Kernel1D {
  KernelKind kind = KernelKind::biweight;
  double radius = 0.0;
  double dz = 0.0;
  int span = 0;
  double normalization = 0.0;  // c in U(s) = c * profile(s / R)
  std::vector<double> weights;
  std::vector<double> dweights;

  [[nodiscard]] double weight(int offset) const { return weights[offset + span]; }
  [[nodiscard]] double dweight(int offset) const { return dweights[offset + span]; }
  [[nodiscard]] double discrete_mass() const;
};

/// Unnormalized kernel shape on |x| <= 1 and its derivative in x.
double kernel_profile(KernelKind kind, double x);
double kernel_profile_derivative(KernelKind kind, double x);

Kernel1D build_kernel(KernelKind kind, double radius, const Grid1D& grid);

/// How a field is continued outside [-Z, Z] when a stencil reaches past the
/// boundary.
struct Extension {
  enum class Kind { zero, constant };
  Kind kind = Kind::zero;
  double left = 0.0;
  double right = 0.0;

  static Extension zero() { return {}; }
  static Extension constant(double left, double right) { return {Kind::constant, left, right}; }
  [[nodiscard]] Extension mirrored() const { return {kind, right, left}; }
};

struct ScalarField {
  std::vector<double> values;
  Extension extension;
};

/// (U * f)(z_k) = dz * sum_m w_m f(z_k - m dz). Even terms are summed in
/// mirrored pairs so the result commutes exactly with grid reflection.
ScalarField convolve(const Kernel1D& kernel, const ScalarField& field);
std::vector<double> convolve(const Kernel1D& kernel, std::span<const double> values,
                             Extension extension);

/// d/dz (U * f), computed as (U') * f from the analytic kernel derivative.
ScalarField convolve_derivative(const Kernel1D& kernel, const ScalarField& field);
std::vector<double> convolve_derivative(const Kernel1D& kernel, std::span<const double> values,
                                        Extension extension);

enum class EdgeClosure {
  one_sided,       // 2nd-order one-sided at the end nodes, centered 2nd order next to them
  zero_extension,  // values outside the grid are zero; the operator is skew-symmetric
};

/// Centered first derivative on the uniform grid, `order` 2 or 4.
std::vector<double> derivative(std::span<const double> f, double dz, EdgeClosure closure,
                               int order = 4);

/// f~(z) = f(-z) on the mirror grid.
std::vector<double> reflect(std::span<const double> f);
ScalarField reflect(const ScalarField& field);

double sup_norm(std::span<const double> f);
/// Neumaier-compensated sum; error stays at a few ulp of the result.
double compensated_sum(std::span<const double> f);
double sup_distance(std::span<const double> a, std::span<const double> b);

}  // namespace vfp
