#include "vfplab/core.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "vfplab/errors.hpp"

namespace vfp {

std::string to_string(KernelKind kind) {
  switch (kind) {
    case KernelKind::biweight:
      return "biweight";
    case KernelKind::bump:
      return "bump";
  }
  return "unknown";
}

KernelKind kernel_kind_from_string(std::string_view name) {
  if (name == "biweight") return KernelKind::biweight;
  if (name == "bump") return KernelKind::bump;
  throw ValidationError(fmt::format("kernel: unknown kind '{}' (expected biweight|bump)", name));
}

void ModelParams::validate() const {
  if (!(beta > 0.0)) throw ValidationError(fmt::format("beta: must be > 0 (got {})", beta));
  if (!(n > 0.0)) throw ValidationError(fmt::format("n: must be > 0 (got {})", n));
  if (!(kernel_radius > 0.0))
    throw ValidationError(fmt::format("kernel_radius: must be > 0 (got {})", kernel_radius));
  if (!(half_width >= 10.0 * kernel_radius))
    throw ValidationError(fmt::format("domain: half width {} must be >= 10 * kernel_radius ({})",
                                      half_width, 10.0 * kernel_radius));
  if (nz < 16) throw ValidationError(fmt::format("nz: must be >= 16 (got {})", nz));
  if (nz % 2 == 0)
    throw ValidationError(fmt::format("nz: must be odd so z = 0 is a node (got {})", nz));
  if (hermite_order < 2)
    throw ValidationError(fmt::format("hermite_order: must be >= 2 (got {})", hermite_order));
  if (!(dt > 0.0)) throw ValidationError(fmt::format("dt: must be > 0 (got {})", dt));
  if (kernel_radius < 2.0 * dz())
    throw ValidationError(fmt::format("kernel_radius: {} is under-resolved, need >= 2*dz = {}",
                                      kernel_radius, 2.0 * dz()));
}

Grid1D build_grid(double half_width, int nz) {
  if (nz < 3 || nz % 2 == 0)
    throw ValidationError(fmt::format("nz: grid needs an odd node count >= 3 (got {})", nz));
  if (!(half_width > 0.0)) throw ValidationError("domain: half width must be > 0");
  Grid1D grid;
  const long c = (nz - 1) / 2;
  grid.dz = half_width / static_cast<double>(c);
  grid.z.resize(static_cast<std::size_t>(nz));
  for (long k = 0; k < nz; ++k) grid.z[static_cast<std::size_t>(k)] = static_cast<double>(k - c) * grid.dz;
  return grid;
}

Grid1D build_grid(const ModelParams& params) { return build_grid(params.half_width, params.nz); }

double Kernel1D::discrete_mass() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s * dz;
}

double kernel_profile(KernelKind kind, double x) {
  const double ax = std::abs(x);
  if (ax >= 1.0) return 0.0;
  const double q = 1.0 - x * x;
  switch (kind) {
    case KernelKind::biweight:
      return q * q;
    case KernelKind::bump:
      return std::exp(-1.0 / q);
  }
  return 0.0;
}

double kernel_profile_derivative(KernelKind kind, double x) {
  if (std::abs(x) >= 1.0) return 0.0;
  const double q = 1.0 - x * x;
  switch (kind) {
    case KernelKind::biweight:
      return -4.0 * x * q;
    case KernelKind::bump:
      return std::exp(-1.0 / q) * (-2.0 * x / (q * q));
  }
  return 0.0;
}

Kernel1D build_kernel(KernelKind kind, double radius, const Grid1D& grid) {
  if (!(radius >= 2.0 * grid.dz))
    throw ValidationError(fmt::format(
        "kernel under-resolved: radius {} < 2*dz = {}", radius, 2.0 * grid.dz));
  Kernel1D k;
  k.kind = kind;
  k.radius = radius;
  k.dz = grid.dz;
  k.span = static_cast<int>(std::floor(radius / grid.dz * (1.0 + 1e-12)));
  const std::size_t width = 2 * static_cast<std::size_t>(k.span) + 1;
  k.weights.assign(width, 0.0);
  k.dweights.assign(width, 0.0);

  double raw_mass = 0.0;
  for (int m = -k.span; m <= k.span; ++m) {
    // Sample with |m| so the even weights are bitwise symmetric.
    const double x = static_cast<double>(std::abs(m)) * grid.dz / radius;
    const double p = kernel_profile(kind, x);
    k.weights[static_cast<std::size_t>(m + k.span)] = p;
    raw_mass += p;
  }
  k.normalization = 1.0 / (raw_mass * grid.dz);
  for (int m = -k.span; m <= k.span; ++m) {
    const auto idx = static_cast<std::size_t>(m + k.span);
    k.weights[idx] *= k.normalization;
    const double x = static_cast<double>(std::abs(m)) * grid.dz / radius;
    const double d = k.normalization * kernel_profile_derivative(kind, x) / radius;
    k.dweights[idx] = m < 0 ? -d : d;
  }
  return k;
}

namespace {

std::vector<double> padded(std::span<const double> values, Extension ext, int pad) {
  const double left = ext.kind == Extension::Kind::constant ? ext.left : 0.0;
  const double right = ext.kind == Extension::Kind::constant ? ext.right : 0.0;
  std::vector<double> p(values.size() + 2 * static_cast<std::size_t>(pad));
  std::fill_n(p.begin(), pad, left);
  std::copy(values.begin(), values.end(), p.begin() + pad);
  std::fill(p.end() - pad, p.end(), right);
  return p;
}

}  // namespace

std::vector<double> convolve(const Kernel1D& kernel, std::span<const double> values,
                             Extension extension) {
  const int M = kernel.span;
  const auto p = padded(values, extension, M);
  const double* w = kernel.weights.data() + M;
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double* c = p.data() + k + M;
    double s = w[0] * c[0];
    for (int m = 1; m <= M; ++m) s += w[m] * (c[-m] + c[m]);
    out[k] = s * kernel.dz;
  }
  return out;
}

ScalarField convolve(const Kernel1D& kernel, const ScalarField& field) {
  return {convolve(kernel, field.values, field.extension), field.extension};
}

std::vector<double> convolve_derivative(const Kernel1D& kernel, std::span<const double> values,
                                        Extension extension) {
  const int M = kernel.span;
  const auto p = padded(values, extension, M);
  const double* dw = kernel.dweights.data() + M;
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double* c = p.data() + k + M;
    double s = 0.0;
    // U' is odd: sum_m U'(m dz) f(z - m dz) = sum_{m>0} U'_m (f(z - m dz) - f(z + m dz)).
    for (int m = 1; m <= M; ++m) s += dw[m] * (c[-m] - c[m]);
    out[k] = s * kernel.dz;
  }
  return out;
}

ScalarField convolve_derivative(const Kernel1D& kernel, const ScalarField& field) {
  return {convolve_derivative(kernel, field.values, field.extension), Extension::zero()};
}

std::vector<double> derivative(std::span<const double> f, double dz, EdgeClosure closure,
                               int order) {
  const std::size_t n = f.size();
  if (n < 5) throw ValidationError("derivative: need at least 5 nodes");
  if (order != 2 && order != 4) throw ValidationError("derivative: order must be 2 or 4");
  std::vector<double> d(n, 0.0);
  const double inv2 = 1.0 / (2.0 * dz);
  const double inv12 = 1.0 / (12.0 * dz);
  auto at = [&](long i) -> double {
    if (i < 0 || i >= static_cast<long>(n)) return 0.0;
    return f[static_cast<std::size_t>(i)];
  };
  auto centered = [&](long k) {
    if (order == 2) return (at(k + 1) - at(k - 1)) * inv2;
    return (8.0 * (at(k + 1) - at(k - 1)) - (at(k + 2) - at(k - 2))) * inv12;
  };
  for (long k = 0; k < static_cast<long>(n); ++k) d[static_cast<std::size_t>(k)] = centered(k);

  if (closure == EdgeClosure::one_sided) {
    d[1] = (f[2] - f[0]) * inv2;
    d[n - 2] = (f[n - 1] - f[n - 3]) * inv2;
    // Written so the two ends are exact negated mirrors of each other.
    d[0] = -((3.0 * f[0] - 4.0 * f[1]) + f[2]) * inv2;
    d[n - 1] = ((3.0 * f[n - 1] - 4.0 * f[n - 2]) + f[n - 3]) * inv2;
  }
  return d;
}

std::vector<double> reflect(std::span<const double> f) { return {f.rbegin(), f.rend()}; }

ScalarField reflect(const ScalarField& field) {
  return {reflect(std::span<const double>(field.values)), field.extension.mirrored()};
}

double sup_norm(std::span<const double> f) {
  double m = 0.0;
  for (double x : f) m = std::max(m, std::abs(x));
  return m;
}

double compensated_sum(std::span<const double> f) {
  double sum = 0.0, carry = 0.0;
  for (double x : f) {
    const double t = sum + x;
    carry += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return sum + carry;
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace vfp
