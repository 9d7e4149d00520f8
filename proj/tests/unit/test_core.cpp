#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "vfplab/core.hpp"
#include "vfplab/errors.hpp"

using namespace vfp;
using vfp::test::random_vector;

TEST_SUITE("core") {
  TEST_CASE("grid is mirror exact with z = 0 at the centre") {
    const Grid1D g = build_grid(12.0, 1025);
    REQUIRE(g.size() == 1025);
    CHECK(g.z[g.center()] == 0.0);
    CHECK(g.z.front() == -12.0);
    CHECK(g.z.back() == 12.0);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(g.z[k] == -g.z[g.size() - 1 - k]);
  }

  TEST_CASE("parameter validation names the violated key") {
    ModelParams p;
    CHECK_NOTHROW(p.validate());
    p.nz = 1024;
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("nz"), ValidationError);
    p = {};
    p.half_width = 5.0;
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("domain"), ValidationError);
    p = {};
    p.beta = -1.0;
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("beta"), ValidationError);
    p = {};
    p.nz = 21;  // dz = 1.2 > R / 2
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("kernel_radius"), ValidationError);
  }

  TEST_CASE("biweight kernel: unit discrete mass, even weights, odd derivative") {
    const Grid1D g = build_grid(12.0, 1025);
    const Kernel1D k = build_kernel(KernelKind::biweight, 1.0, g);
    CHECK(k.discrete_mass() == doctest::Approx(1.0).epsilon(1e-14));
    for (int m = 1; m <= k.span; ++m) {
      CHECK(k.weight(m) == k.weight(-m));
      CHECK(k.dweight(m) == -k.dweight(-m));
    }
    // Continuum normalization of (1 - s^2)^2 on [-1, 1] is 15/16; the
    // discrete renormalization differs from it at O(dz^2).
    CHECK(k.normalization == doctest::Approx(15.0 / 16.0).epsilon(1e-3));
    // dweights against a centred difference of the sampled profile
    const double h = 1e-6;
    for (int m : {1, 10, 30}) {
      const double x = m * g.dz;
      const double fd = k.normalization * (kernel_profile(KernelKind::biweight, x + h) -
                                           kernel_profile(KernelKind::biweight, x - h)) / (2 * h);
      CHECK(k.dweight(m) == doctest::Approx(fd).epsilon(1e-7));
    }
  }

  TEST_CASE("bump kernel is normalized too") {
    const Grid1D g = build_grid(12.0, 1025);
    const Kernel1D k = build_kernel(KernelKind::bump, 1.0, g);
    CHECK(k.discrete_mass() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(kernel_profile(KernelKind::bump, 1.0) == 0.0);
  }

  TEST_CASE("convolution of a constant with its own extension is the constant") {
    const Grid1D g = build_grid(12.0, 513);
    const Kernel1D k = build_kernel(KernelKind::biweight, 1.0, g);
    const std::vector<double> c(g.size(), 0.37);
    const auto out = convolve(k, c, Extension::constant(0.37, 0.37));
    for (double x : out) CHECK(x == doctest::Approx(0.37).epsilon(1e-14));
  }

  TEST_CASE("convolution matches a direct double sum") {
    const Grid1D g = build_grid(12.0, 257);
    const Kernel1D k = build_kernel(KernelKind::biweight, 1.0, g);
    const auto f = random_vector(g.size(), 3);
    const Extension ext = Extension::constant(-0.5, 2.0);
    const auto out = convolve(k, f, ext);
    const long n = static_cast<long>(g.size());
    for (long i = 0; i < n; ++i) {
      double s = 0.0;
      for (int m = -k.span; m <= k.span; ++m) {
        const long j = i - m;
        const double v = j < 0 ? ext.left : j >= n ? ext.right : f[static_cast<std::size_t>(j)];
        s += k.weight(m) * v;
      }
      CHECK(out[static_cast<std::size_t>(i)] == doctest::Approx(s * g.dz).epsilon(1e-13));
    }
  }

  TEST_CASE("convolution commutes with reflection bit for bit") {
    const Grid1D g = build_grid(12.0, 513);
    const Kernel1D k = build_kernel(KernelKind::biweight, 1.0, g);
    const auto f = random_vector(g.size(), 11);
    const Extension ext = Extension::constant(0.3, 1.7);
    const auto lhs = reflect(convolve(k, f, ext));
    const auto rhs = convolve(k, reflect(f), ext.mirrored());
    CHECK(lhs == rhs);
  }

  TEST_CASE("analytic-derivative convolution approximates d/dz of U * f at second order") {
    auto error_at = [](int nz) {
      const Grid1D g = build_grid(12.0, nz);
      const Kernel1D k = build_kernel(KernelKind::biweight, 1.0, g);
      std::vector<double> f(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::tanh(g.z[i]);
      const Extension ext = Extension::constant(-1.0, 1.0);
      const auto d = convolve_derivative(k, f, ext);
      const auto u = convolve(k, f, ext);
      const auto fd = derivative(u, g.dz, EdgeClosure::one_sided, 4);
      double e = 0.0;
      for (std::size_t i = g.size() / 4; i < 3 * g.size() / 4; ++i) e = std::max(e, std::abs(d[i] - fd[i]));
      return e;
    };
    const double e1 = error_at(257), e2 = error_at(513);
    CHECK(e2 < e1);
    CHECK(e2 < 1e-3);
  }

  TEST_CASE("fourth-order derivative converges at fourth order in the interior") {
    auto error_at = [](int nz) {
      const Grid1D g = build_grid(12.0, nz);
      std::vector<double> f(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) f[i] = std::sin(0.7 * g.z[i]);
      const auto d = derivative(f, g.dz, EdgeClosure::one_sided, 4);
      double e = 0.0;
      for (std::size_t i = 4; i + 4 < g.size(); ++i) e = std::max(e, std::abs(d[i] - 0.7 * std::cos(0.7 * g.z[i])));
      return e;
    };
    const double ratio = error_at(129) / error_at(257);
    CHECK(ratio > 14.0);
    CHECK(ratio < 18.0);
  }

  TEST_CASE("zero-extension derivative is skew-symmetric") {
    const std::size_t n = 101;
    const auto f = random_vector(n, 1), g = random_vector(n, 2);
    const auto df = derivative(f, 0.1, EdgeClosure::zero_extension, 4);
    const auto dg = derivative(g, 0.1, EdgeClosure::zero_extension, 4);
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      a += g[i] * df[i];
      b += f[i] * dg[i];
    }
    CHECK(std::abs(a + b) < 1e-12 * std::abs(a));
  }

  TEST_CASE("sup norm helpers") {
    const std::vector<double> a{1.0, -3.0, 2.0}, b{1.5, -3.0, 0.0};
    CHECK(sup_norm(a) == 3.0);
    CHECK(sup_distance(a, b) == 2.0);
    CHECK(kernel_kind_from_string(to_string(KernelKind::bump)) == KernelKind::bump);
    CHECK_THROWS_AS(kernel_kind_from_string("gauss"), ValidationError);
  }
}
