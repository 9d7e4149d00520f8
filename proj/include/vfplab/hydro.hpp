#pragma once

// Macroscopic gradient flow d/dt rho_i = d/dz (beta^-1 rho_i d/dz mu_i),
// mu_i = ln rho_i + beta U * rho_j, on the truncated line with zero-flux walls.

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vfplab/front.hpp"

namespace vfp {

/// Densities on the model grid. Each field keeps the constant extension it was
/// created with; the convolution in mu uses it outside [-Z, Z].
struct HydroState {
  ModelParams params;
  Grid1D grid;
  Kernel1D kernel;
  ScalarField rho1, rho2;
  double time = 0.0;

  [[nodiscard]] const ScalarField& rho(int i) const { return i == 0 ? rho1 : rho2; }
  [[nodiscard]] std::size_t size() const { return grid.size(); }
};

/// State with the given densities, each extended by its own boundary values.
HydroState make_hydro_state(const ModelParams& params, std::vector<double> rho1, std::vector<double> rho2);

/// State equal to the front, extended by the coexistence densities.
HydroState hydro_state_from_front(const FrontProfile& front);

/// mu_i = ln rho_i + beta U * rho_j. Throws ValidationError on a non-positive density.
std::array<std::vector<double>, 2> chemical_potential(const HydroState& s);

/// beta^-1 rho_face (mu_{k+1} - mu_k) / dz on the nz-1 interior faces, with
/// the arithmetic mean as face mobility.
std::array<std::vector<double>, 2> face_fluxes(const HydroState& s);

/// max over species and faces of |flux|.
double flux_sup_norm(const HydroState& s);

/// safety * dz^2 * beta / (2 max(max rho, 1)).
double hydro_max_dt(const HydroState& s, double safety = 0.9);

/// Forward Euler step. Throws ValidationError if dt exceeds hydro_max_dt(s, 1)
/// and NumericalError if a density turns non-positive.
HydroState hydro_step(const HydroState& s, double dt);

/// int [f(rho) - f(rho+, rho-) - mu*(rho1 + rho2 - n)] dz + beta int rho1 (U*rho2 - rho2) dz
/// + beta int (rho2 - rho2_far) (U*bath1) dz, with mu* the common-tangent slope of
/// the double well and bath1 the extension of rho1 outside the domain.
double hydro_free_energy(const HydroState& s);

std::array<double, 2> hydro_mass(const HydroState& s);

struct HydroRecord {
  double time = 0.0;
  double free_energy = 0.0;
  std::array<double, 2> mass{};
  double flux_sup_norm = 0.0;
  double dist_to_front_sup = 0.0;
};

struct HydroOptions {
  double dt = 0.0;  // 0 selects hydro_max_dt
  double t_end = 1.0;
  int record_every = 100;
};

struct HydroTrajectory {
  std::vector<HydroRecord> records;
  HydroState final_state;
  long steps = 0;
};

/// Symmetric, mass-free density bump of the given amplitude added to the front
/// (a centred Gaussian of width 1 minus one of width 2, mirrored for species 2).
HydroState perturbed_front_state(const FrontProfile& front, double amplitude);

HydroTrajectory hydro_evolve(const FrontProfile& front, HydroState state, const HydroOptions& options,
                             const std::function<void(const HydroRecord&)>& on_record = {});

}  // namespace vfp
