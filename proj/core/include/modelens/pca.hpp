#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "modelens/grid.hpp"

namespace modelens {

/// Mean-subtracted stack: B(n, j) is pixel j of centred frame n.
struct CenteredData {
  int nx = 0;
  int ny = 0;
  Eigen::VectorXd mean_image;
  FrameMatrix B;
  std::vector<double> times;

  int n_frames() const { return static_cast<int>(B.rows()); }
  int n_pixels() const { return static_cast<int>(B.cols()); }
};

struct PrincipalComponent {
  Eigen::VectorXd image;  ///< unit Euclidean norm, largest-|value| pixel positive
  double eigenvalue = 0.0;
  double fraction = 0.0;  ///< eigenvalue / total variance
};

struct PcaResult {
  std::vector<PrincipalComponent> components;  ///< decreasing eigenvalue
  /// Eigenvalues of Sigma = B B^T/(N-1): the full spectrum on the direct path,
  /// the leading ones on the iterative path.
  Eigen::VectorXd eigenvalues;
  double total_variance = 0.0;  ///< trace of the covariance, ||B||_F^2/(N-1)
  /// No variance beyond rounding of the mean (all frames identical).
  bool zero_variance = false;
  /// More components were requested than the numerical rank allows.
  bool truncated = false;
};

struct WeightSeries {
  int component = 0;
  std::vector<double> values;
  std::vector<double> times;
};

struct PcaOptions {
  /// Dense diagonalisation of Sigma up to this many frames, Lanczos beyond.
  int direct_limit = 1000;
  /// Eigenvalues below rank_tol * largest are treated as zero.
  double rank_tol = 1e-12;
  std::uint64_t seed = 7;
};

/// Subtracts the mean image. Requires N >= 2.
CenteredData center(const ImageStack& stack);

/// Principal components of the centred data through the N x N Gram matrix.
/// Requires 1 <= K <= N.
PcaResult principal_components(const CenteredData& data, int K, const PcaOptions& options = {});

/// w(n, k) = <B row n, PC k>
std::vector<WeightSeries> weights(const CenteredData& data, std::span<const PrincipalComponent> pcs);

/// mean + sum_k w(n, k) PC_k over the given components (weights[i] belongs to pcs[i]).
ImageStack reconstruct(const CenteredData& data, std::span<const PrincipalComponent> pcs,
                       std::span<const WeightSeries> weights);

}  // namespace modelens
