#pragma once

// Perturbation dynamics around the front in Hermite-moment form.
//
// The full distribution is f_i = w_i M + h_i with h_i = sum_k c_{i,k}(z) phi_k(v).
// Per species i (partner j) the coefficients evolve by
//   transport   -v d/dz h_i               (couples modes k -/+ 1)
//   force       +(d/dz U*w_j + d/dz U*a_j) d/dv h_i   (raises the mode)
//   source      -beta v M w_i d/dz U*a_j  (mode 1 only)
//   collisions  -beta k c_k
// and contributions to mode K+1 are dropped.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vfplab/front.hpp"
#include "vfplab/hermite.hpp"

namespace vfp {

/// (1 + z^2)^gamma on the grid.
struct GammaWeight {
  double gamma = 0.0;
  std::vector<double> values;
};

GammaWeight make_gamma_weight(const Grid1D& grid, double gamma);

/// Coefficients c[i][k][z], species-major, stored contiguously.
struct KineticState {
  int order = 0;        // K
  std::size_t nz = 0;
  double time = 0.0;
  std::vector<double> coeffs;

  KineticState() = default;
  KineticState(int order, std::size_t nz)
      : order(order), nz(nz), coeffs(2 * static_cast<std::size_t>(order + 1) * nz, 0.0) {}

  [[nodiscard]] int modes() const { return order + 1; }
  [[nodiscard]] std::size_t offset(int species, int mode) const {
    return (static_cast<std::size_t>(species) * static_cast<std::size_t>(modes()) +
            static_cast<std::size_t>(mode)) * nz;
  }
  [[nodiscard]] std::span<double> mode(int species, int k) { return {coeffs.data() + offset(species, k), nz}; }
  [[nodiscard]] std::span<const double> mode(int species, int k) const {
    return {coeffs.data() + offset(species, k), nz};
  }
  /// Density perturbation a_i = c_{i,0}.
  [[nodiscard]] std::span<const double> density(int species) const { return mode(species, 0); }
};

/// Mirror image: c_{i,k}(z) -> (-1)^k c_{j,k}(-z).
KineticState reflect_state(const KineticState& s);

/// max |c_{1,k}(z) - (-1)^k c_{2,k}(-z)|.
double symmetry_error(const KineticState& s);

struct KineticOptions {
  int order = 16;                 // Hermite truncation K
  double cfl = 1.0;               // dt <= cfl * dz / v_max
  bool enforce_symmetry = false;  // average with the mirror image after each step
  double gamma = 0.1;             // spatial weight exponent for norm_M_gamma
  std::optional<double> k_const;  // energy_combined constant, default 10 / nu0
};

/// Precomputed front data and discretization for the perturbation equation.
/// Holds its own copy of the front.
class KineticSystem {
 public:
  KineticSystem(FrontProfile front, KineticOptions options = {});

  [[nodiscard]] const FrontProfile& front() const { return front_; }
  [[nodiscard]] const HermiteBasis& basis() const { return basis_; }
  [[nodiscard]] const KineticOptions& options() const { return options_; }
  [[nodiscard]] const GammaWeight& gamma_weight() const { return weight_; }
  [[nodiscard]] std::size_t nz() const { return front_.size(); }
  [[nodiscard]] double dz() const { return front_.grid.dz; }
  [[nodiscard]] double k_const() const { return k_const_; }
  /// cfl * dz / v_max.
  [[nodiscard]] double max_dt() const;
  [[nodiscard]] KineticState zero_state() const { return {basis_.order, nz()}; }

  /// d/dt of the coefficients, written into `out` (resized as needed).
  void rhs(const KineticState& s, std::vector<double>& out) const;

  /// Even modes use the flux-form divergence, odd modes its negative adjoint,
  /// so transport is skew and mass is conserved exactly.
  void divergence(std::span<const double> f, std::span<double> out) const;
  void gradient(std::span<const double> f, std::span<double> out) const;

  /// d/dz (U * w_j), the front's force on species i.
  [[nodiscard]] const std::vector<double>& front_force(int species) const { return front_force_[species]; }

 private:
  FrontProfile front_;
  KineticOptions options_;
  HermiteBasis basis_;
  GammaWeight weight_;
  double k_const_ = 0.0;
  std::vector<double> front_force_[2];
  std::vector<double> inv_w_[2];
};

enum class PerturbationKind { gaussian_density, mode1_current, custom };

std::string to_string(PerturbationKind kind);
PerturbationKind perturbation_kind_from_string(std::string_view name);

/// Symmetric, mass-free initial data.
///  gaussian_density: mode 0 of species 1 gets amplitude * (g_1(z) - s g_2(z)), two
///    centred Gaussians of widths 1 and 2 with s chosen so the discrete mass is 0;
///    species 2 gets the mirror image.
///  mode1_current: mode 1 of species 1 gets amplitude * g_1(z), species 2 the mirror
///    image with the sign flip of an odd mode.
///  custom: `custom` holds a full coefficient array scaled by amplitude; it is
///    rejected if not symmetric to 1e-13 while symmetry enforcement is on.
KineticState init_perturbation(const KineticSystem& sys, PerturbationKind kind, double amplitude,
                               std::span<const double> custom = {});

/// Adds level * N(0, 1) * g_1(z) to modes 0 and 1 of species 1 (draws from a
/// mt19937_64 seeded with `seed`), removes the added mode-0 mass with the width-2
/// Gaussian, and re-mirrors species 2.
void add_seeded_noise(const KineticSystem& sys, KineticState& s, double level, std::uint64_t seed);

std::vector<double> rhs(const KineticSystem& sys, const KineticState& s);

/// One classical RK4 step. Throws ValidationError if dt exceeds max_dt().
KineticState step_rk4(const KineticSystem& sys, const KineticState& s, double dt);

double norm_M(const KineticSystem& sys, const KineticState& s, const GammaWeight* weight = nullptr);
double norm_D(const KineticSystem& sys, const KineticState& s, const GammaWeight* weight = nullptr);

/// int a_i dz per species.
std::array<double, 2> species_mass(const KineticSystem& sys, const KineticState& s);

/// <a_h, w'>.
double null_component(const KineticSystem& sys, const KineticState& s);

/// G(wM + h) - G(wM) by Gauss-Hermite quadrature in v (K+1 nodes, the roots of
/// He_{K+1}, exact for the quadratic part) and the
/// grid sum in z. Throws NumericalError naming the node if f <= 0 somewhere.
double free_energy_G(const KineticSystem& sys, const KineticState& s);

/// 1/2 <a, A a> + 1/2 ||(I-P) h||_M^2, the quadratic part of free_energy_G.
double quadratic_free_energy(const KineticSystem& sys, const KineticState& s);

struct DiagnosticsRecord {
  double time = 0.0;
  double norm_M = 0.0;
  double norm_D = 0.0;
  double norm_M_gamma = 0.0;
  double dnorm_t = 0.0;
  double dnorm_z = 0.0;
  double energy_combined = 0.0;
  double free_energy = 0.0;
  std::array<double, 2> mass{};
  double null_component = 0.0;
  double symmetry_error = 0.0;
};

DiagnosticsRecord diagnostics(const KineticSystem& sys, const KineticState& s);

struct EvolveOptions {
  double dt = 0.003;
  double t_end = 20.0;
  int record_every = 50;
  double blowup_factor = 1e6;  // abort once norm_M exceeds this multiple of its start value
};

struct Trajectory {
  std::vector<DiagnosticsRecord> records;
  KineticState final_state;
  long steps = 0;
  bool aborted = false;
  std::string abort_reason;
};

/// Steps to t_end (the last step is shortened to land on it) and records
/// diagnostics at t = 0, every record_every steps, and at the end.
/// `on_record` is called with each record as it is produced.
Trajectory evolve(const KineticSystem& sys, KineticState state, const EvolveOptions& options,
                  const std::function<void(const DiagnosticsRecord&)>& on_record = {});

struct EnergyReport {
  int violations = 0;          // increases of energy_combined above tolerance
  double max_increase = 0.0;   // largest increase between consecutive records
  double tolerance = 0.0;
  double envelope_exponent = 0.0;  // p in norm_M ~ c (1 + t/(2 gamma))^(-p)
  double envelope_constant = 0.0;  // c
  double reference_exponent = 0.0; // 2 gamma
};

/// Recomputes K (||h||^2 + ||d_t h||^2) + ||d_z h||^2 from the records with the
/// given K, audits it for increases above rel_tol times its first value, and
/// fits the norm_M decay envelope by least squares.
EnergyReport energy_monitor(const std::vector<DiagnosticsRecord>& records, double k_const,
                            double gamma, double rel_tol = 1e-9);

}  // namespace vfp
