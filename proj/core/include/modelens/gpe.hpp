#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "modelens/fft.hpp"
#include "modelens/grid.hpp"

namespace modelens {

/// Harmonic trap V = (alpha/2)[(u cos t + v sin t)^2 + eps (u sin t - v cos t)^2],
/// u = x - x0, v = y - y0.
struct TrapParams {
  double alpha = 1.0;
  double epsilon = 1.0;  ///< omega_y^2 / omega_x^2
  double x0 = 0.0;
  double y0 = 0.0;
  double theta = 0.0;  ///< radians

  void validate() const;

  /// V at one point.
  double value(double x, double y) const;

  /// Trap frequencies along the (rotated) trap axes, units of omega_x.
  double omega_x() const;
  double omega_y() const;

  /// Excitation sequence of the reference simulation.
  static TrapParams reference_initial();
  static TrapParams reference_final();

  bool operator==(const TrapParams&) const = default;
};

struct SimParams {
  double g2dN = 1000.0;
  double dt = 1e-3;
  double t_total = 37.7;
  double sample_interval = 0.126;
  /// When set, sample this many frames evenly over [0, t_total] instead of
  /// every sample_interval.
  std::optional<int> frame_count;

  void validate() const;

  /// Completed step indices at which densities are recorded.
  std::vector<long> sample_steps() const;
};

/// sqrt(8 pi) a / a_z
double coupling_constant(double a_over_az);

ScalarField potential(const TrapParams& trap, const Grid2D& grid);

struct GroundStateOptions {
  double dtau = 1e-3;
  long max_steps = 400000;
  int check_every = 10;
  /// Newton refinement of the stationary equation after imaginary time.
  bool polish = true;
  double polish_tol = 1e-12;
  int polish_max_steps = 12;
};

struct GroundState {
  ComplexField psi;
  double mu = 0.0;
  double energy = 0.0;
  long steps = 0;
  /// Energy at each convergence check during imaginary time.
  std::vector<double> energy_trace;
  /// ||(H - mu) psi|| / ||psi|| after the final stage.
  double residual = 0.0;
};

/// Imaginary-time split-step relaxation to the lowest-energy normalised state.
/// Converged when the energy change per step drops below `tol`; throws
/// NumericalError when max_steps is reached first.
GroundState ground_state(const ScalarField& V, double g2dN, double tol = 1e-10,
                         const GroundStateOptions& options = {});

/// E = int |grad psi|^2/2 + V |psi|^2 + (g/2)|psi|^4
double energy(const ComplexField& psi, const ScalarField& V, double g2dN);

/// mu = <psi| -lap/2 + V + g|psi|^2 |psi> / <psi|psi>
double chemical_potential(const ComplexField& psi, const ScalarField& V, double g2dN);

/// Strang-split real-time propagator: half local step, full kinetic step in
/// Fourier space, half local step.
class SplitStepPropagator {
 public:
  SplitStepPropagator(const ComplexField& psi0, const ScalarField& V, double g2dN, double dt);

  /// Advances `n` full steps.
  void step(long n = 1);

  long steps_taken() const { return steps_; }
  double time() const { return steps_ * dt_; }
  const Grid2D& grid() const { return fft_.grid(); }
  std::span<const Complex> state() const { return psi_; }
  ComplexField psi() const { return ComplexField(fft_.grid(), psi_); }

  /// int |psi|^2
  double norm() const;
  void density(std::span<double> out) const;

 private:
  void local_phase(double fraction);
  void kinetic();

  Fft2D fft_;
  std::vector<Complex> psi_;
  std::vector<double> V_;
  std::vector<Complex> kinetic_phase_;
  double g_;
  double dt_;
  long steps_ = 0;
};

/// Real-time evolution sampling |psi|^2 at SimParams::sample_steps().
ImageStack evolve(const ComplexField& psi0, const ScalarField& V, const SimParams& sim);

/// Mass-weighted mean position of a nonnegative density frame.
std::pair<double, double> center_of_mass(std::span<const double> frame, const Grid2D& grid);

}  // namespace modelens
