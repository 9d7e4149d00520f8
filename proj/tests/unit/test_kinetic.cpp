#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "vfplab/errors.hpp"
#include "vfplab/kinetic.hpp"

using namespace vfp;
using vfp::test::front_at;
using vfp::test::random_vector;

namespace {

KineticOptions small_options(int order = 8) {
  KineticOptions o;
  o.order = order;
  return o;
}

const KineticSystem& system_257() {
  static const KineticSystem sys(front_at(257), small_options());
  return sys;
}

KineticState random_symmetric_state(const KineticSystem& sys, std::uint64_t seed, double scale) {
  KineticState s = sys.zero_state();
  const auto r = random_vector(s.coeffs.size(), seed);
  const auto& z = sys.front().grid.z;
  for (int k = 0; k <= s.order; ++k) {
    auto c = s.mode(0, k);
    for (std::size_t j = 0; j < s.nz; ++j)
      c[j] = scale * r[s.offset(0, k) + j] * std::exp(-z[j] * z[j] / 2);
  }
  // remove the density mass with an even bump so the mirror stays exact
  double mass = 0.0, bump = 0.0;
  for (std::size_t j = 0; j < s.nz; ++j) {
    mass += s.mode(0, 0)[j];
    bump += std::exp(-z[j] * z[j]);
  }
  for (std::size_t j = 0; j < s.nz; ++j) s.mode(0, 0)[j] -= mass / bump * std::exp(-z[j] * z[j]);
  const KineticState m = reflect_state(s);
  for (int k = 0; k <= s.order; ++k) std::copy(m.mode(1, k).begin(), m.mode(1, k).end(), s.mode(1, k).begin());
  return s;
}

}  // namespace

TEST_SUITE("kinetic") {
  TEST_CASE("zero perturbation is stationary") {
    const auto& sys = system_257();
    const auto out = rhs(sys, sys.zero_state());
    for (double x : out) CHECK(x == 0.0);
    const auto s = step_rk4(sys, sys.zero_state(), 0.5 * sys.max_dt());
    for (double x : s.coeffs) CHECK(x == 0.0);
  }

  TEST_CASE("divergence and gradient are exact negative adjoints and conserve mass") {
    const auto& sys = system_257();
    const std::size_t n = sys.nz();
    const auto f = random_vector(n, 5), g = random_vector(n, 6);
    std::vector<double> div(n), grad(n);
    sys.divergence(f, div);
    sys.gradient(g, grad);
    double a = 0.0, b = 0.0, mass = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      a += g[k] * div[k];
      b += f[k] * grad[k];
      mass += div[k];
      scale += std::abs(div[k]);
    }
    CHECK(std::abs(a + b) <= 1e-12 * std::abs(a));
    CHECK(std::abs(mass) <= 1e-14 * scale);
  }

  TEST_CASE("interior stencils are fourth order") {
    auto error_at = [](int nz) {
      const KineticSystem sys(front_at(nz), small_options(2));
      const auto& z = sys.front().grid.z;
      std::vector<double> f(z.size()), d(z.size());
      for (std::size_t k = 0; k < z.size(); ++k) f[k] = std::exp(-z[k] * z[k] / 4);
      sys.divergence(f, d);
      double e = 0.0;
      for (std::size_t k = 8; k + 8 < z.size(); ++k) e = std::max(e, std::abs(d[k] + z[k] / 2 * f[k]));
      return e;
    };
    const double r = error_at(257) / error_at(513);
    CHECK(r > 13.0);
    CHECK(r < 19.0);
  }

  TEST_CASE("the right-hand side commutes with the mirror map bit for bit") {
    const auto& sys = system_257();
    KineticState s = sys.zero_state();
    const auto r = random_vector(s.coeffs.size(), 17);
    for (std::size_t k = 0; k < r.size(); ++k) s.coeffs[k] = 1e-3 * r[k];
    KineticState lhs = sys.zero_state(), rhs_state = sys.zero_state();
    lhs.coeffs = rhs(sys, reflect_state(s));
    rhs_state.coeffs = rhs(sys, s);
    CHECK(lhs.coeffs == reflect_state(rhs_state).coeffs);
  }

  TEST_CASE("collision part of the right-hand side is -beta k c_k") {
    // With a single excited mode k, row k receives no transport (fed by k -/+ 1)
    // and no force term (fed by k - 1), so only the collision term remains.
    const auto& sys = system_257();
    const double beta = sys.basis().beta;
    for (int k : {2, 5, 8}) {
      KineticState s = sys.zero_state();
      const auto& z = sys.front().grid.z;
      for (std::size_t j = 0; j < s.nz; ++j) s.mode(0, k)[j] = std::exp(-z[j] * z[j]);
      const auto out = rhs(sys, s);
      for (std::size_t j = 0; j < s.nz; ++j)
        CHECK(out[s.offset(0, k) + j] == doctest::Approx(-beta * k * s.mode(0, k)[j]).epsilon(1e-14).scale(1e-300));
    }
  }

  TEST_CASE("norms against direct sums") {
    const auto& sys = system_257();
    const auto s = random_symmetric_state(sys, 21, 1e-3);
    double m = 0.0, d = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k <= s.order; ++k)
        for (std::size_t j = 0; j < s.nz; ++j) {
          const double c2 = s.mode(i, k)[j] * s.mode(i, k)[j] / sys.front().w(i)[j];
          m += c2;
          if (k >= 1) d += (1.0 + sys.basis().beta * (k + 1)) * c2;
        }
    CHECK(norm_M(sys, s) == doctest::Approx(std::sqrt(m * sys.dz())).epsilon(1e-13));
    CHECK(norm_D(sys, s) == doctest::Approx(std::sqrt(d * sys.dz())).epsilon(1e-13));
  }

  TEST_CASE("CFL bound is enforced") {
    const auto& sys = system_257();
    CHECK_NOTHROW(step_rk4(sys, sys.zero_state(), sys.max_dt()));
    CHECK_THROWS_AS(step_rk4(sys, sys.zero_state(), 1.01 * sys.max_dt()), ValidationError);
  }

  TEST_CASE("default perturbation: symmetric, mass free, localized") {
    const auto& sys = system_257();
    const auto s = init_perturbation(sys, PerturbationKind::gaussian_density, 1e-3);
    CHECK(symmetry_error(s) == 0.0);
    const auto mass = species_mass(sys, s);
    CHECK(std::abs(mass[0]) < 1e-16);
    CHECK(std::abs(mass[1]) < 1e-16);
    CHECK(std::abs(s.density(0).front()) < 1e-9);
    const auto c = init_perturbation(sys, PerturbationKind::mode1_current, 1e-3);
    CHECK(symmetry_error(c) == 0.0);
    CHECK(perturbation_kind_from_string("mode1_current") == PerturbationKind::mode1_current);
    CHECK_THROWS_AS(perturbation_kind_from_string("wave"), ValidationError);
  }

  TEST_CASE("seeded noise is reproducible, symmetric and mass free") {
    const auto& sys = system_257();
    auto a = init_perturbation(sys, PerturbationKind::gaussian_density, 1e-3);
    auto b = a, c = a;
    add_seeded_noise(sys, a, 1e-4, 42);
    add_seeded_noise(sys, b, 1e-4, 42);
    add_seeded_noise(sys, c, 1e-4, 43);
    CHECK(a.coeffs == b.coeffs);
    CHECK(a.coeffs != c.coeffs);
    CHECK(symmetry_error(a) == 0.0);
    CHECK(std::abs(species_mass(sys, a)[0]) < 1e-15);
  }

  TEST_CASE("free energy: zero at the front, positive and quadratic nearby") {
    const auto& sys = system_257();
    CHECK(free_energy_G(sys, sys.zero_state()) == 0.0);
    auto err = [&](double amp) {
      const auto s = random_symmetric_state(sys, 8, amp);
      const double g = free_energy_G(sys, s), q = quadratic_free_energy(sys, s);
      CHECK(g > 0.0);
      return std::abs(g - q) / q;
    };
    const double e1 = err(1e-4), e2 = err(5e-5);
    CHECK(e1 < 1e-2);
    CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.05));
  }

  TEST_CASE("quadratic energy in Hermite form is 1/2 <a, A a> + 1/2 ||(I-P) h||^2") {
    const auto& sys = system_257();
    KineticState s = sys.zero_state();
    // Only non-hydrodynamic modes: the quadratic energy is half the squared M norm.
    const auto r = random_vector(s.nz, 4);
    for (std::size_t j = 0; j < s.nz; ++j) {
      s.mode(0, 3)[j] = 1e-3 * r[j];
      s.mode(1, 3)[s.nz - 1 - j] = -1e-3 * r[j];
    }
    const double n = norm_M(sys, s);
    CHECK(quadratic_free_energy(sys, s) == doctest::Approx(0.5 * n * n).epsilon(1e-13));
  }

  TEST_CASE("short evolution conserves mass and keeps the symmetry exactly") {
    const auto& sys = system_257();
    const auto s0 = init_perturbation(sys, PerturbationKind::gaussian_density, 1e-3);
    EvolveOptions o;
    o.dt = 0.9 * sys.max_dt();
    o.t_end = 1.0;
    o.record_every = 20;
    int calls = 0;
    const auto traj = evolve(sys, s0, o, [&](const DiagnosticsRecord&) { ++calls; });
    REQUIRE_FALSE(traj.aborted);
    CHECK(calls == static_cast<int>(traj.records.size()));
    CHECK(traj.records.back().time == 1.0);
    for (const auto& r : traj.records) {
      CHECK(std::abs(r.mass[0]) < 1e-15);
      CHECK(r.symmetry_error == 0.0);
      CHECK(std::abs(r.null_component) < 1e-12);
    }
    for (std::size_t k = 1; k < traj.records.size(); ++k)
      CHECK(traj.records[k].free_energy <= traj.records[k - 1].free_energy + 1e-14);
  }

  TEST_CASE("energy monitor on synthetic records") {
    std::vector<DiagnosticsRecord> recs;
    for (int k = 0; k <= 20; ++k) {
      DiagnosticsRecord r;
      r.time = k;
      r.norm_M = 3.0 * std::pow(1.0 + r.time / 0.2, -0.7);
      r.dnorm_t = 0.0;
      r.dnorm_z = 0.0;
      recs.push_back(r);
    }
    auto rep = energy_monitor(recs, 2.0, 0.1);
    CHECK(rep.violations == 0);
    CHECK(rep.envelope_exponent == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(rep.envelope_constant == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(rep.reference_exponent == doctest::Approx(0.2));
    recs[5].norm_M = recs[4].norm_M * 1.5;
    rep = energy_monitor(recs, 2.0, 0.1);
    CHECK(rep.violations == 1);
    CHECK(rep.max_increase > 0.0);
  }

  TEST_CASE("gamma weight") {
    const Grid1D g = build_grid(12.0, 257);
    const auto w = make_gamma_weight(g, 0.1);
    CHECK(w.values[g.center()] == 1.0);
    CHECK(w.values.back() == doctest::Approx(std::pow(145.0, 0.1)));
    CHECK_THROWS_AS(make_gamma_weight(g, -0.1), ValidationError);
  }
}
