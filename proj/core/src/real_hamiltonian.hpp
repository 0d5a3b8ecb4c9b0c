#pragma once

// Matrix-free single-particle Hamiltonian acting on real fields; private to
// the library (used by the ground-state polish and the BdG solver).

#include <memory>
#include <span>

#include <Eigen/Core>

#include "modelens/grid.hpp"

namespace modelens::detail {

class RealHamiltonian {
 public:
  RealHamiltonian(const Grid2D& grid, std::span<const double> potential);
  ~RealHamiltonian();
  RealHamiltonian(const RealHamiltonian&) = delete;
  RealHamiltonian& operator=(const RealHamiltonian&) = delete;

  const Grid2D& grid() const { return grid_; }
  const Eigen::VectorXd& potential() const { return potential_; }

  /// out = -lap(in)/2
  void kinetic(const Eigen::VectorXd& in, Eigen::VectorXd& out) const;

  /// out = (-lap/2 + V + diag) in
  void apply(const Eigen::VectorXd& in, const Eigen::VectorXd& diag, Eigen::VectorXd& out) const;

  /// out = (k^2/2 + shift)^-1 in, applied in Fourier space.
  void inverse_kinetic(const Eigen::VectorXd& in, double shift, Eigen::VectorXd& out) const;

 private:
  void transform(const Eigen::VectorXd& in, Eigen::VectorXd& out, double shift, bool invert) const;

  struct Plans;
  Grid2D grid_;
  Eigen::VectorXd potential_;
  std::vector<double> half_k2_;  // k^2/2 on the r2c layout
  std::unique_ptr<Plans> plans_;
};

}  // namespace modelens::detail
