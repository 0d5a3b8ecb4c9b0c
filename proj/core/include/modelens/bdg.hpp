#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "modelens/grid.hpp"

namespace modelens {

/// A stationary condensate: real-positive normalised psi0 with its chemical
/// potential, in the trap V with interaction g2dN.
struct Condensate {
  ComplexField psi;
  double mu = 0.0;
  ScalarField V;
  double g2dN = 0.0;
};

/// Bogoliubov eigenpair, normalised to int(|u|^2 - |v|^2) = 1.
struct BdGMode {
  double omega = 0.0;  ///< units of omega_x
  ComplexField u;
  ComplexField v;
  ScalarField f;  ///< density fluctuation profile, unit pixel norm, sign fixed
  double residual = 0.0;  ///< ||omega^2 f+ - A B f+|| / ||f+||
};

/// Linearised GP operator: with c = g psi0^2 and H0 = -lap/2 + V,
/// u' = (H0 - mu + 2c) u + c v, v' = -[(H0 - mu + 2c) v + c u].
std::pair<ComplexField, ComplexField> bdg_apply(const Condensate& ground, const ComplexField& u,
                                                const ComplexField& v);

struct BdgOptions {
  double tol = 1e-8;         ///< residual tolerance on the product operator
  int max_krylov = 160;      ///< Lanczos basis capacity
  int guard = 6;             ///< extra Ritz pairs carried along for the wanted K
  double inner_tol = 1e-12;  ///< relative tolerance of the inner CG solves
  int inner_max_iter = 20000;
  int refine_iterations = 8;  ///< Rayleigh-Ritz subspace refinement sweeps
  double omega_floor = 0.05;  ///< frequencies below this are discarded (zero mode)
  std::uint64_t seed = 12345;
};

/// The K lowest positive-frequency modes, ascending in omega.
///
/// Solves omega^2 f+ = A B f+ with A = H0 - mu + c and B = H0 - mu + 3c on
/// the complement of psi0 (which removes the Goldstone mode), using
/// shift-invert Lanczos in the B inner product followed by Rayleigh-Ritz
/// refinement. Throws NumericalError on non-convergence.
std::vector<BdGMode> bdg_spectrum(const Condensate& ground, int K, const BdgOptions& options = {});

/// psi0 (u + v), normalised to unit Euclidean pixel norm; largest-magnitude
/// pixel positive.
ScalarField mode_density(const BdGMode& mode, const Condensate& ground);

struct HydroFrequencies {
  double dipole_x = 0.0;
  double dipole_y = 0.0;
  double scissors = 0.0;
  double quadrupole = 0.0;
  double monopole = 0.0;
};

/// Thomas-Fermi hydrodynamic limit of the 2D anisotropic harmonic trap.
HydroFrequencies hydrodynamic_frequencies(double omega_x, double omega_y);


}  // namespace modelens
