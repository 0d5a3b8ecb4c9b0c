#pragma once

#include <functional>
#include <optional>

#include <Eigen/Core>

namespace modelens::linalg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// y = Op(x). Operators must not alias x and y.
using LinearOp = std::function<void(const Vector& x, Vector& y)>;

struct CgResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Preconditioned conjugate gradients for a symmetric positive (semi)definite
/// operator. When `deflate` is given (unit vector), the solve is restricted to
/// its orthogonal complement: both b and x are projected, and the operator and
/// preconditioner are wrapped by the projector.
CgResult pcg(const LinearOp& op, const LinearOp& preconditioner, const Vector& b, Vector& x,
             double tol, int max_iter, const Vector* deflate = nullptr);

struct EigenResult {
  Vector values;   ///< sorted by decreasing value
  Matrix vectors;  ///< one column per value, orthonormal in the metric
  Vector residual_estimates;
  int iterations = 0;
  bool converged = false;
};

/// Lanczos with full reorthogonalisation for the `nev` largest eigenvalues of
/// an operator that is self-adjoint in the inner product <x, y>_M = x^T M y
/// (M = identity when `metric` is empty). Convergence: |beta_m s_mi| <=
/// tol * |theta_i| for each wanted Ritz pair (absolute floor tol * |theta_max|).
EigenResult lanczos_largest(const LinearOp& op, const std::optional<LinearOp>& metric,
                            const Vector& start, int nev, int max_dim, double tol,
                            int check_every = 5);

}  // namespace modelens::linalg
