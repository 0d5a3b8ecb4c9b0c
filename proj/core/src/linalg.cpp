#include "modelens/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "modelens/errors.hpp"

namespace modelens::linalg {

namespace {
void project_out(Vector& v, const Vector* unit) {
  if (unit) v -= unit->dot(v) * (*unit);
}
}  // namespace

CgResult pcg(const LinearOp& op, const LinearOp& preconditioner, const Vector& b, Vector& x,
             double tol, int max_iter, const Vector* deflate) {
  const Eigen::Index n = b.size();
  if (x.size() != n) x = Vector::Zero(n);
  Vector rhs = b;
  project_out(rhs, deflate);
  project_out(x, deflate);

  CgResult result;
  const double bnorm = rhs.norm();
  if (bnorm == 0.0) {
    x.setZero();
    result.converged = true;
    return result;
  }

  Vector r(n), z(n), p(n), q(n);
  op(x, q);
  r = rhs - q;
  project_out(r, deflate);
  preconditioner(r, z);
  project_out(z, deflate);
  p = z;
  double rz = r.dot(z);

  for (int it = 0; it < max_iter; ++it) {
    result.relative_residual = r.norm() / bnorm;
    if (result.relative_residual <= tol) {
      result.iterations = it;
      result.converged = true;
      return result;
    }
    op(p, q);
    project_out(q, deflate);
    const double pq = p.dot(q);
    if (!(pq > 0.0)) break;  // operator not positive on the search direction
    const double alpha = rz / pq;
    x += alpha * p;
    r -= alpha * q;
    preconditioner(r, z);
    project_out(z, deflate);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
    result.iterations = it + 1;
  }
  // Recompute the true residual before giving up.
  op(x, q);
  r = rhs - q;
  project_out(r, deflate);
  result.relative_residual = r.norm() / bnorm;
  result.converged = result.relative_residual <= tol;
  return result;
}

EigenResult lanczos_largest(const LinearOp& op, const std::optional<LinearOp>& metric,
                            const Vector& start, int nev, int max_dim, double tol,
                            int check_every) {
  const Eigen::Index n = start.size();
  if (nev < 1) throw ValidationError("lanczos: nev must be >= 1");
  max_dim = static_cast<int>(std::min<Eigen::Index>(max_dim, n));
  if (nev > max_dim) throw ValidationError("lanczos: nev exceeds Krylov capacity");

  auto apply_metric = [&](const Vector& v, Vector& out) {
    if (metric) (*metric)(v, out); else out = v;
  };

  Matrix Q(n, max_dim);   // basis
  Matrix MQ(n, max_dim);  // metric applied to the basis
  std::vector<double> alpha, beta;

  Vector q = start, mq(n), w(n), mw(n);
  apply_metric(q, mq);
  double qnorm = std::sqrt(std::max(q.dot(mq), 0.0));
  if (!(qnorm > 0.0)) throw NumericalError("lanczos: start vector has zero norm");
  Q.col(0) = q / qnorm;
  MQ.col(0) = mq / qnorm;

  EigenResult result;
  int m = 0;
  for (int j = 0; j < max_dim; ++j) {
    op(Q.col(j), w);
    alpha.push_back(MQ.col(j).dot(w));
    // Full reorthogonalisation, twice.
    for (int pass = 0; pass < 2; ++pass) {
      const Vector coeffs = MQ.leftCols(j + 1).transpose() * w;
      w -= Q.leftCols(j + 1) * coeffs;
    }
    apply_metric(w, mw);
    const double b = std::sqrt(std::max(w.dot(mw), 0.0));
    m = j + 1;

    const bool last = (m == max_dim) || b <= 1e-14 * std::abs(alpha.front());
    if (last || (m >= nev && (m % check_every == 0))) {
      Matrix T = Matrix::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        T(i, i) = alpha[i];
        if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
      }
      Eigen::SelfAdjointEigenSolver<Matrix> es(T);
      const Vector& theta = es.eigenvalues();  // ascending
      const double scale = theta.cwiseAbs().maxCoeff();
      int ok = 0;
      const int wanted = std::min(nev, m);
      Vector est(wanted);
      for (int i = 0; i < wanted; ++i) {
        const int idx = m - 1 - i;
        est(i) = std::abs(b * es.eigenvectors()(m - 1, idx));
        if (est(i) <= tol * std::max(std::abs(theta(idx)), 1e-3 * scale)) ++ok;
      }
      if ((ok == wanted && m >= nev) || last) {
        result.values.resize(wanted);
        result.vectors.resize(n, wanted);
        for (int i = 0; i < wanted; ++i) {
          const int idx = m - 1 - i;
          result.values(i) = theta(idx);
          result.vectors.col(i) = Q.leftCols(m) * es.eigenvectors().col(idx);
        }
        result.residual_estimates = est;
        result.iterations = m;
        result.converged = ok == wanted && m >= nev;
        return result;
      }
    }
    if (j + 1 < max_dim) {
      beta.push_back(b);
      Q.col(j + 1) = w / b;
      MQ.col(j + 1) = mw / b;
    }
  }
  return result;  // unreachable: the last iteration always returns
}

}  // namespace modelens::linalg
