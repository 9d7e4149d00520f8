#include "vfplab/spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>
#include <random>

#include "vfplab/errors.hpp"

namespace vfp {

// --- Fokker-Planck ----------------------------------------------------------------

Eigen::VectorXd fp_matrix_hermite(const HermiteBasis& basis) {
  if (basis.order < 1) throw ValidationError("fp_matrix_hermite: order must be >= 1");
  Eigen::VectorXd d(basis.size());
  for (int k = 0; k <= basis.order; ++k) d[k] = -basis.beta * k;
  return d;
}

double fp_quadratic_form(const HermiteBasis& basis, std::span<const double> c) {
  double s = 0.0;
  for (std::size_t k = 1; k < c.size(); ++k) s += static_cast<double>(k) * c[k] * c[k];
  return -basis.beta * s;
}

double dissipation_norm_sq(const HermiteBasis& basis, std::span<const double> c) {
  double s = 0.0;
  for (std::size_t k = 1; k < c.size(); ++k)
    s += (1.0 + basis.beta * static_cast<double>(k + 1)) * c[k] * c[k];
  return s;
}

std::optional<double> lgap_ratio(const HermiteBasis& basis, std::span<const double> coeffs) {
  const double d = dissipation_norm_sq(basis, coeffs);
  if (!(d > 0.0)) return std::nullopt;
  return -fp_quadratic_form(basis, coeffs) / d;
}

LgapProbe check_lgap(const HermiteBasis& basis, int samples, std::uint64_t seed) {
  if (samples < 1) throw ValidationError("check_lgap: samples must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  LgapProbe probe;
  probe.nu0 = std::numeric_limits<double>::infinity();
  std::vector<double> c(static_cast<std::size_t>(basis.size()));
  for (int s = 0; s < samples; ++s) {
    for (double& x : c) x = normal(rng);
    const auto r = lgap_ratio(basis, c);
    if (!r) {
      ++probe.skipped;
      continue;
    }
    ++probe.used;
    probe.nu0 = std::min(probe.nu0, *r);
  }
  if (probe.used == 0) probe.nu0 = 0.0;
  return probe;
}

// --- A ------------------------------------------------------------------------------

FieldPair OperatorA::apply(const FieldPair& g) const {
  const FrontProfile& f = *front_;
  const double beta = f.params.beta;
  FieldPair out;
  for (int i = 0; i < 2; ++i) {
    const auto conv = convolve(f.kernel, g[static_cast<std::size_t>(1 - i)], Extension::zero());
    const auto& w = f.w(i);
    auto& o = out[static_cast<std::size_t>(i)];
    o.resize(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) o[k] = g[static_cast<std::size_t>(i)][k] / w[k] + beta * conv[k];
  }
  return out;
}

double OperatorA::inner(const FieldPair& f, const FieldPair& g) const {
  double s = 0.0;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < f[i].size(); ++k) s += f[i][k] * g[i][k];
  return s * front_->grid.dz;
}

double OperatorA::norm(const FieldPair& f) const { return std::sqrt(inner(f, f)); }

FieldPair OperatorA::null_vector() const { return {front_->w1p.values, front_->w2p.values}; }

FieldPair apply_A(const OperatorA& op, const FieldPair& g) { return op.apply(g); }

double quadratic_form(const OperatorA& op, const FieldPair& g) { return op.inner(g, op.apply(g)); }

QuadraticFormCheck quadratic_form_identity(const OperatorA& op, const FieldPair& g, double tol) {
  const FrontProfile& f = op.front();
  const double beta = f.params.beta;
  const double dz = f.grid.dz;
  const std::size_t n = f.size();
  const auto& d1 = f.w1p.values;
  const auto& d2 = f.w2p.values;
  const double floor = 1e-12 * std::max(sup_norm(d1), sup_norm(d2));

  QuadraticFormCheck out;
  out.direct = quadratic_form(op, g);

  std::vector<char> keep1(n), keep2(n);
  double scale = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    keep1[k] = std::abs(d1[k]) >= floor;
    keep2[k] = std::abs(d2[k]) >= floor;
    const double m1 = g[0][k] * g[0][k] / f.w1.values[k] * dz;
    const double m2 = g[1][k] * g[1][k] / f.w2.values[k] * dz;
    scale += m1 + m2;
    if (!keep1[k]) {
      out.excluded_mass += m1;
      ++out.excluded_nodes;
    }
    if (!keep2[k]) {
      out.excluded_mass += m2;
      ++out.excluded_nodes;
    }
  }

  const int M = f.kernel.span;
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!keep1[k]) continue;
    const double r1 = g[0][k] / d1[k];
    const long lo = std::max<long>(0, static_cast<long>(k) - M);
    const long hi = std::min<long>(static_cast<long>(n) - 1, static_cast<long>(k) + M);
    for (long j = lo; j <= hi; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      if (!keep2[uj]) continue;
      const double diff = r1 - g[1][uj] / d2[uj];
      s += diff * diff * f.kernel.weight(static_cast<int>(static_cast<long>(k) - j)) * d1[k] * d2[uj];
    }
  }
  out.measure_form = -beta * s * dz * dz;

  // The identity is exact only where A w' = 0; on the grid A w' = O(dz^2),
  // which leaves sum_i sum_z g_i^2 (A w')_i / w_i' dz between the two forms.
  const FieldPair aw = op.apply(op.null_vector());
  const std::array<const std::vector<char>*, 2> keep{&keep1, &keep2};
  const std::array<const std::vector<double>*, 2> dp{&d1, &d2};
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < n; ++k)
      if ((*keep[i])[k]) out.grid_residual_term += g[i][k] * g[i][k] * aw[i][k] / (*dp[i])[k] * dz;
  out.agree = std::abs(out.direct - out.measure_form - out.grid_residual_term) <= tol * scale + out.excluded_mass;
  return out;
}

// --- Atilde ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd assemble_Atilde(const FrontProfile& f, std::span<const double> w1,
                                std::span<const double> w2) {
  const long n = static_cast<long>(f.size());
  const int M = f.kernel.span;
  const double beta = f.params.beta;
  const double dz = f.grid.dz;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(2 * n, 2 * n);
  for (long k = 0; k < n; ++k) {
    const double s1 = std::sqrt(w1[static_cast<std::size_t>(k)]);
    for (long j = std::max<long>(0, k - M); j <= std::min(n - 1, k + M); ++j) {
      const double v = beta * s1 * f.kernel.weight(static_cast<int>(k - j)) * dz *
                       std::sqrt(w2[static_cast<std::size_t>(j)]);
      A(k, n + j) = v;
      A(n + j, k) = v;
    }
  }
  return A;
}

}  // namespace

Eigen::MatrixXd build_Atilde(const FrontProfile& front) {
  return assemble_Atilde(front, front.w1.values, front.w2.values);
}

Eigen::MatrixXd build_Atilde_constant(const FrontProfile& front, double rho_a, double rho_b) {
  const std::vector<double> a(front.size(), rho_a), b(front.size(), rho_b);
  return assemble_Atilde(front, a, b);
}

Eigen::VectorXd predicted_null_vector(const FrontProfile& front) {
  const long n = static_cast<long>(front.size());
  Eigen::VectorXd p(2 * n);
  for (long k = 0; k < n; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    p[k] = front.w1p.values[uk] / std::sqrt(front.w1.values[uk]);
    p[n + k] = front.w2p.values[uk] / std::sqrt(front.w2.values[uk]);
  }
  return p;
}

namespace {

// Interleave [u1; u2] as (u1_0, u2_0, u1_1, ...) so that a convolution coupling
// of half-span M becomes a band of half-width 2M+1.
struct Ordering {
  long n = 0;
  bool interleave = false;
  [[nodiscard]] long operator()(long idx) const {
    if (!interleave) return idx;
    return idx < n ? 2 * idx : 2 * (idx - n) + 1;
  }
};

long bandwidth(const Eigen::MatrixXd& A, const Ordering& perm) {
  long kd = 0;
  for (long c = 0; c < A.cols(); ++c)
    for (long r = 0; r < A.rows(); ++r)
      if (A(r, c) != 0.0) kd = std::max(kd, std::abs(perm(r) - perm(c)));
  return kd;
}

// Upper band storage, column major: ab[(kd + i - j) + j*(kd+1)] = A(i, j).
std::vector<double> band_storage(const Eigen::MatrixXd& A, const Ordering& perm, long kd) {
  const long N = A.rows();
  const long ldab = kd + 1;
  std::vector<double> ab(static_cast<std::size_t>(ldab * N), 0.0);
  for (long c = 0; c < N; ++c)
    for (long r = 0; r < N; ++r) {
      const double v = A(r, c);
      if (v == 0.0) continue;
      const long pr = perm(r), pc = perm(c);
      if (pr <= pc) ab[static_cast<std::size_t>((kd + pr - pc) + pc * ldab)] = v;
    }
  return ab;
}

struct Eigenpairs {
  std::vector<double> values;
  Eigen::MatrixXd vectors;  // in permuted ordering
};

// Banded matrix-vector product from upper band storage.
void band_multiply(const std::vector<double>& ab, long N, long kd, const double* x, double* y) {
  const long ldab = kd + 1;
  std::fill(y, y + N, 0.0);
  for (long j = 0; j < N; ++j) {
    for (long i = std::max(0L, j - kd); i < j; ++i) {
      const double a = ab[static_cast<std::size_t>((kd + i - j) + j * ldab)];
      y[i] += a * x[j];
      y[j] += a * x[i];
    }
    y[j] += ab[static_cast<std::size_t>(kd + j * ldab)] * x[j];
  }
}

// Lanczos with full reorthogonalization on (A - shift)^{-1}, factorized by a
// banded Cholesky. Returns nullopt when the shifted matrix is not positive
// definite or the iteration fails to resolve k pairs, so the caller can fall
// back to a direct solver.
std::optional<Eigenpairs> shift_invert_lanczos(const std::vector<double>& ab, long N, long kd,
                                               int k, double tol) {
  constexpr double kShift = -1e-2;
  std::vector<double> fac = ab;
  const long ldab = kd + 1;
  for (long j = 0; j < N; ++j) fac[static_cast<std::size_t>(kd + j * ldab)] -= kShift;
  if (LAPACKE_dpbtrf(LAPACK_COL_MAJOR, 'U', static_cast<lapack_int>(N), static_cast<lapack_int>(kd),
                     fac.data(), static_cast<lapack_int>(ldab)) != 0)
    return std::nullopt;

  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd start(N);
  for (long i = 0; i < N; ++i) start[i] = normal(rng);

  std::vector<double> ax(static_cast<std::size_t>(N));
  for (long m = std::min<long>(N, std::max<long>(64, 8L * k)); ; m = std::min(N, 2 * m)) {
    Eigen::MatrixXd V(N, m);
    std::vector<double> alpha, beta;
    V.col(0) = start.normalized();
    long steps = 0;
    for (long j = 0; j < m; ++j) {
      Eigen::VectorXd w = V.col(j);
      LAPACKE_dpbtrs(LAPACK_COL_MAJOR, 'U', static_cast<lapack_int>(N), static_cast<lapack_int>(kd), 1,
                     fac.data(), static_cast<lapack_int>(ldab), w.data(), static_cast<lapack_int>(N));
      alpha.push_back(V.col(j).dot(w));
      for (int pass = 0; pass < 2; ++pass) w -= V.leftCols(j + 1) * (V.leftCols(j + 1).transpose() * w);
      ++steps;
      const double b = w.norm();
      if (j + 1 == m) break;
      if (b < 1e-13 * std::abs(alpha.back())) break;  // invariant subspace
      beta.push_back(b);
      V.col(j + 1) = w / b;
    }
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(steps, steps);
    for (long j = 0; j < steps; ++j) {
      T(j, j) = alpha[static_cast<std::size_t>(j)];
      if (j + 1 < steps) T(j, j + 1) = T(j + 1, j) = beta[static_cast<std::size_t>(j)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    if (es.info() != Eigen::Success || steps < k) return std::nullopt;

    // Largest theta of the inverse are the smallest eigenvalues of A.
    Eigenpairs out;
    bool ok = true;
    double anorm = 0.0;
    for (double a : ab) anorm = std::max(anorm, std::abs(a));
    for (int c = 0; c < k; ++c) {
      const double theta = es.eigenvalues()[steps - 1 - c];
      Eigen::VectorXd v = V.leftCols(steps) * es.eigenvectors().col(steps - 1 - c);
      v.normalize();
      band_multiply(ab, N, kd, v.data(), ax.data());
      const double lambda = v.dot(Eigen::Map<Eigen::VectorXd>(ax.data(), N));
      const double res = (Eigen::Map<Eigen::VectorXd>(ax.data(), N) - lambda * v).norm();
      if (!(theta > 0.0) || res > tol * anorm) ok = false;
      out.values.push_back(lambda);
      if (out.vectors.size() == 0) out.vectors.resize(N, k);
      out.vectors.col(c) = v;
    }
    if (ok) return out;
    if (m == N || steps < m) return std::nullopt;
  }
}

Eigenpairs band_direct(std::vector<double> ab, long N, long kd, int k) {
  std::vector<double> evals(static_cast<std::size_t>(N));
  std::vector<double> q(static_cast<std::size_t>(N * N));
  std::vector<double> z(static_cast<std::size_t>(N * k));
  std::vector<lapack_int> ifail(static_cast<std::size_t>(N));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsbevx(
      LAPACK_COL_MAJOR, 'V', 'I', 'U', static_cast<lapack_int>(N), static_cast<lapack_int>(kd), ab.data(),
      static_cast<lapack_int>(kd + 1), q.data(), static_cast<lapack_int>(N), 0.0, 0.0, 1, k,
      2.0 * LAPACKE_dlamch('S'), &found, evals.data(), z.data(), static_cast<lapack_int>(N), ifail.data());
  if (info != 0 || found != k)
    throw NumericalError(fmt::format(
        "spectrum: banded eigensolver did not converge (info = {}, {} of {} pairs found)", info, found, k));
  return {{evals.begin(), evals.begin() + k}, Eigen::Map<Eigen::MatrixXd>(z.data(), N, k)};
}

Eigenpairs dense_direct(Eigen::MatrixXd a, int k) {
  const long N = a.rows();
  std::vector<double> evals(static_cast<std::size_t>(N));
  std::vector<double> z(static_cast<std::size_t>(N * k));
  std::vector<lapack_int> isuppz(static_cast<std::size_t>(2 * k));
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dsyevr(
      LAPACK_COL_MAJOR, 'V', 'I', 'U', static_cast<lapack_int>(N), a.data(), static_cast<lapack_int>(N), 0.0,
      0.0, 1, k, 2.0 * LAPACKE_dlamch('S'), &found, evals.data(), z.data(), static_cast<lapack_int>(N),
      isuppz.data());
  if (info != 0 || found != k)
    throw NumericalError(fmt::format(
        "spectrum: dense eigensolver did not converge (info = {}, {} of {} pairs found)", info, found, k));
  return {{evals.begin(), evals.begin() + k}, Eigen::Map<Eigen::MatrixXd>(z.data(), N, k)};
}

}  // namespace

SpectrumReport spectrum_Atilde(const Eigen::MatrixXd& matrix, int k,
                               const Eigen::VectorXd& predicted_null) {
  const long N = matrix.rows();
  if (matrix.cols() != N) throw ValidationError("spectrum: matrix must be square");
  if (k < 1 || k > N) throw ValidationError(fmt::format("spectrum: k = {} out of range", k));
  const double amax = matrix.cwiseAbs().maxCoeff();
  if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, amax))
    throw ValidationError("spectrum: matrix is not symmetric");

  const Ordering perm{N / 2, N % 2 == 0};
  const long kd = bandwidth(matrix, perm);
  const double anorm = matrix.norm();
  constexpr double kPairTol = 1e-12;

  Eigenpairs pairs;
  if (kd < N / 3) {
    const auto ab = band_storage(matrix, perm, kd);
    std::optional<Eigenpairs> lanczos;
    if (k <= N / 8) lanczos = shift_invert_lanczos(ab, N, kd, k, kPairTol * anorm / std::max(amax, 1e-300));
    pairs = lanczos ? std::move(*lanczos) : band_direct(ab, N, kd, k);
  } else {
    pairs = dense_direct(matrix, k);
  }

  // Sort ascending and undo the interleaving.
  std::vector<int> order(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) order[static_cast<std::size_t>(c)] = c;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return pairs.values[static_cast<std::size_t>(a)] < pairs.values[static_cast<std::size_t>(b)]; });
  SpectrumReport rep;
  rep.eigenvectors.resize(N, k);
  for (int c = 0; c < k; ++c) {
    const int src = order[static_cast<std::size_t>(c)];
    rep.eigenvalues.push_back(pairs.values[static_cast<std::size_t>(src)]);
    for (long r = 0; r < N; ++r) rep.eigenvectors(r, c) = pairs.vectors(perm(r), src);
  }
  for (int c = 0; c < k; ++c) {
    const Eigen::VectorXd v = rep.eigenvectors.col(c);
    const double res = (matrix * v - rep.eigenvalues[static_cast<std::size_t>(c)] * v).norm() / anorm;
    rep.max_pair_residual = std::max(rep.max_pair_residual, res);
  }
  if (predicted_null.size() == N && predicted_null.norm() > 0.0) {
    const Eigen::VectorXd p = predicted_null.normalized();
    rep.null_residual = (matrix * p).norm();
    rep.null_alignment = std::abs(p.dot(rep.eigenvectors.col(0)));
    if (rep.null_alignment > 0.999 && k >= 2) rep.gap = rep.eigenvalues[1];
  }
  return rep;
}

double kernel_symbol(const Kernel1D& kernel, double xi) {
  double s = kernel.weight(0);
  for (int m = 1; m <= kernel.span; ++m) s += 2.0 * kernel.weight(m) * std::cos(xi * m * kernel.dz);
  return s * kernel.dz;
}

SymbolSpectrum symbol_spectrum_A0(double beta, double rho_plus, double rho_minus,
                                  const Kernel1D& kernel, int samples) {
  if (samples < 2) throw ValidationError("symbol spectrum: need at least two samples");
  SymbolSpectrum out;
  out.coupling = beta * std::sqrt(rho_plus * rho_minus);
  out.uhat_zero = kernel_symbol(kernel, 0.0);
  const double xi_max = std::numbers::pi / kernel.dz;
  for (int s = 0; s < samples; ++s) {
    const double xi = xi_max * s / (samples - 1);
    const double u = std::abs(kernel_symbol(kernel, xi));
    if (u > out.uhat_max_abs) {
      out.uhat_max_abs = u;
      out.xi_at_max = xi;
    }
  }
  out.lower = 1.0 - out.coupling * out.uhat_max_abs;
  out.upper = 1.0 + out.coupling * out.uhat_max_abs;
  out.gap_edge = out.lower;
  return out;
}

// --- (A u)' probe ---------------------------------------------------------------------------

namespace {

constexpr int kProbeDerivativeOrder = 2;

std::vector<double> ddz(const FrontProfile& f, const std::vector<double>& x) {
  return derivative(x, f.grid.dz, EdgeClosure::zero_extension, kProbeDerivativeOrder);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

std::optional<double> aprime_ratio(const OperatorA& op, const FieldPair& u) {
  const FrontProfile& f = op.front();
  const double dz = f.grid.dz;
  const FieldPair wp = op.null_vector();
  const double uw = op.inner(u, wp);
  const double nu = op.norm(u);
  const double nw = op.norm(wp);
  if (std::abs(uw) > 1e-10 * nu * nw)
    throw ValidationError(fmt::format("aprime probe: u is not orthogonal to w' (<u,w'> = {:.3e})", uw));

  // u = alpha (w1', -w2') + u~,  u~_i orthogonal to w_i'
  const FieldPair wt{wp[0], [&] {
                       auto v = wp[1];
                       for (double& x : v) x = -x;
                       return v;
                     }()};
  const double norm_sq = op.inner(wt, wt);
  const double alpha = op.inner(u, wt) / norm_sq;
  FieldPair ut = u;
  for (std::size_t i = 0; i < 2; ++i) {
    const double ci = dot(u[i], wp[i]) / dot(wp[i], wp[i]);
    for (std::size_t k = 0; k < ut[i].size(); ++k) ut[i][k] -= ci * wp[i][k];
  }

  const FieldPair au = op.apply(u);
  FieldPair au_p{ddz(f, au[0]), ddz(f, au[1])};
  FieldPair ut_p{ddz(f, ut[0]), ddz(f, ut[1])};
  FieldPair wpp{ddz(f, wp[0]), ddz(f, wp[1])};
  const double num = op.inner(au_p, au_p);
  const double wpp_sq = op.inner(wpp, wpp);
  const double proj = op.inner(ut_p, wpp);
  const double q_sq = op.inner(ut_p, ut_p) - (wpp_sq > 0.0 ? proj * proj / wpp_sq : 0.0);
  const double den = alpha * alpha + q_sq;
  if (!(den > 1e-300) || !(den > 1e-14 * (alpha * alpha + op.inner(ut_p, ut_p)) ))
    return std::nullopt;
  (void)dz;
  return num / den;
}

AprimeProbe probe_Aprime_bound(const OperatorA& op, int samples, std::uint64_t seed) {
  if (samples < 1) throw ValidationError("aprime probe: samples must be >= 1");
  const FrontProfile& f = op.front();
  const double Z = f.params.half_width;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> center(-0.5 * Z, 0.5 * Z);
  std::uniform_real_distribution<double> width(0.5, 2.0);
  std::normal_distribution<double> amp(0.0, 1.0);
  std::uniform_int_distribution<int> bumps(1, 4);
  const FieldPair wp = op.null_vector();
  const double wp_sq = op.inner(wp, wp);

  AprimeProbe probe;
  probe.min_ratio = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    FieldPair u{std::vector<double>(f.size(), 0.0), std::vector<double>(f.size(), 0.0)};
    for (auto& comp : u) {
      const int nb = bumps(rng);
      for (int b = 0; b < nb; ++b) {
        const double c = center(rng), w = width(rng), a = amp(rng);
        for (std::size_t k = 0; k < f.size(); ++k) {
          const double x = (f.grid.z[k] - c) / w;
          comp[k] += a * std::exp(-0.5 * x * x);
        }
      }
    }
    const double c = op.inner(u, wp) / wp_sq;
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t k = 0; k < f.size(); ++k) u[i][k] -= c * wp[i][k];
    const auto r = aprime_ratio(op, u);
    if (!r) {
      ++probe.skipped;
      continue;
    }
    ++probe.used;
    probe.min_ratio = std::min(probe.min_ratio, *r);
  }
  if (probe.used == 0) probe.min_ratio = 0.0;
  return probe;
}

}  // namespace vfp
