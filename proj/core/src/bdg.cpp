#include "modelens/bdg.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "modelens/linalg.hpp"
#include "real_hamiltonian.hpp"

namespace modelens {

namespace {

using linalg::Matrix;
using linalg::Vector;

void check_condensate(const Condensate& ground) {
  if (!(ground.psi.grid() == ground.V.grid())) throw ValidationError("Condensate: grid mismatch");
  ground.psi.grid().require_spectral();
  if (!(ground.g2dN >= 0.0)) throw ValidationError("Condensate: g2dN must be >= 0");
}

Vector real_part(const ComplexField& psi) {
  Vector p(static_cast<Eigen::Index>(psi.size()));
  for (std::size_t i = 0; i < psi.size(); ++i) p(static_cast<Eigen::Index>(i)) = psi[i].real();
  return p;
}

// A = H0 - mu + c, B = H0 - mu + 3c acting on real vectors.
class ReducedOperators {
 public:
  explicit ReducedOperators(const Condensate& ground)
      : h_(ground.psi.grid(), ground.V.values()), psi0_(real_part(ground.psi)) {
    const Vector c = ground.g2dN * psi0_.array().square();
    diag_a_ = c.array() - ground.mu;
    diag_b_ = 3.0 * c.array() - ground.mu;
    unit_ = psi0_.normalized();
    shift_ = 1.0 + 0.5 * std::abs(ground.mu);
  }

  void A(const Vector& x, Vector& y) const { h_.apply(x, diag_a_, y); }
  void B(const Vector& x, Vector& y) const { h_.apply(x, diag_b_, y); }
  void AB(const Vector& x, Vector& y) const {
    B(x, tmp_);
    A(tmp_, y);
  }
  void precondition(const Vector& x, Vector& y) const { h_.inverse_kinetic(x, shift_, y); }
  void project(Vector& x) const { x -= unit_.dot(x) * unit_; }
  const Vector& unit() const { return unit_; }
  const Vector& psi0() const { return psi0_; }

 private:
  detail::RealHamiltonian h_;
  Vector psi0_;
  Vector diag_a_;
  Vector diag_b_;
  Vector unit_;
  double shift_;
  mutable Vector tmp_;
};

}  // namespace

std::pair<ComplexField, ComplexField> bdg_apply(const Condensate& ground, const ComplexField& u,
                                                const ComplexField& v) {
  check_condensate(ground);
  if (!(u.grid() == ground.psi.grid()) || !(v.grid() == ground.psi.grid())) {
    throw ValidationError("bdg_apply: grid mismatch");
  }
  const auto lap_u = laplacian_spectral(u);
  const auto lap_v = laplacian_spectral(v);
  std::vector<Complex> out_u(u.size()), out_v(v.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double c = ground.g2dN * std::norm(ground.psi[i]);
    const double d = ground.V[i] - ground.mu + 2.0 * c;
    out_u[i] = -0.5 * lap_u[i] + d * u[i] + c * v[i];
    out_v[i] = -(-0.5 * lap_v[i] + d * v[i] + c * u[i]);
  }
  return {ComplexField(u.grid(), std::move(out_u)), ComplexField(v.grid(), std::move(out_v))};
}

std::vector<BdGMode> bdg_spectrum(const Condensate& ground, int K, const BdgOptions& options) {
  check_condensate(ground);
  if (K < 1) throw ValidationError("bdg_spectrum: K must be >= 1");
  const int wanted = K + options.guard;
  if (wanted > options.max_krylov / 2) {
    throw ValidationError("bdg_spectrum: K exceeds the Krylov capacity (max_krylov/2 - guard)");
  }
  {
    double max_re = 0.0, max_im = 0.0;
    for (const auto& z : ground.psi.values()) {
      max_re = std::max(max_re, std::abs(z.real()));
      max_im = std::max(max_im, std::abs(z.imag()));
    }
    if (max_im > 1e-8 * max_re) throw ValidationError("bdg_spectrum: ground state must be real");
  }

  const Grid2D& grid = ground.psi.grid();
  const auto n = static_cast<Eigen::Index>(grid.size());
  ReducedOperators ops(ground);
  const Vector& unit = ops.unit();
  const double area = grid.cell_area();

  auto solve = [&](bool with_a, const Vector& rhs, Vector& x) {
    auto op = [&](const Vector& in, Vector& out) { with_a ? ops.A(in, out) : ops.B(in, out); };
    auto pre = [&](const Vector& in, Vector& out) { ops.precondition(in, out); };
    x.setZero(n);
    const auto res = linalg::pcg(op, pre, rhs, x, options.inner_tol, options.inner_max_iter, &unit);
    if (!res.converged && res.relative_residual > 1e3 * options.inner_tol) {
      std::ostringstream msg;
      msg << "bdg_spectrum: inner solve stalled at relative residual " << res.relative_residual;
      throw NumericalError(msg.str());
    }
  };
  // (AB)^-1 restricted to the complement of psi0.
  Vector w_scratch(n);
  auto inverse = [&](const Vector& x, Vector& y) {
    solve(true, x, w_scratch);
    solve(false, w_scratch, y);
    ops.project(y);
  };
  // Metric P B P.
  auto metric = [&](const Vector& x, Vector& y) {
    Vector px = x;
    ops.project(px);
    ops.B(px, y);
    ops.project(y);
  };

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  Vector start(n);
  for (Eigen::Index i = 0; i < n; ++i) start(i) = normal(rng);
  // Smooth the random start: components far up the spectrum are useless.
  ops.precondition(Vector(start), start);
  ops.project(start);

  auto lz = linalg::lanczos_largest(inverse, linalg::LinearOp(metric), start, wanted,
                                    options.max_krylov, 1e-10);

  // Rayleigh-Ritz refinement on span{(AB)^-1 Y} with the exact operator.
  Matrix Y = lz.vectors;
  const int m = static_cast<int>(Y.cols());
  Vector lambda(m), residual(m);
  Matrix Z(n, m), BZ(n, m), ABZ(n, m);
  Vector col(n);
  bool converged = false;
  for (int sweep = 0; sweep <= options.refine_iterations; ++sweep) {
    if (sweep == 0) {
      Z = Y;
    } else {
      for (int j = 0; j < m; ++j) {
        inverse(Y.col(j), col);
        Z.col(j) = col;
      }
    }
    for (int j = 0; j < m; ++j) {
      ops.B(Z.col(j), col);
      BZ.col(j) = col;
    }
    Matrix G = Z.transpose() * BZ;
    G = 0.5 * (G + G.transpose()).eval();
    Eigen::LLT<Matrix> llt(G);
    if (llt.info() != Eigen::Success) throw NumericalError("bdg_spectrum: B-Gram matrix not positive");
    const Matrix Linv = llt.matrixL().solve(Matrix::Identity(m, m));
    Z = (Z * Linv.transpose()).eval();
    BZ = (BZ * Linv.transpose()).eval();
    for (int j = 0; j < m; ++j) {
      ops.A(BZ.col(j), col);
      ABZ.col(j) = col;
    }
    Matrix H = BZ.transpose() * ABZ;
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    Y = Z * es.eigenvectors();
    const Matrix ABY = ABZ * es.eigenvectors();
    lambda = es.eigenvalues();
    for (int j = 0; j < m; ++j) {
      residual(j) = (ABY.col(j) - lambda(j) * Y.col(j)).norm() / Y.col(j).norm();
    }
    // Wanted: the K smallest frequencies above the floor.
    int counted = 0, good = 0;
    for (int j = 0; j < m && counted < K; ++j) {
      if (lambda(j) <= options.omega_floor * options.omega_floor) continue;
      ++counted;
      if (residual(j) <= options.tol) ++good;
    }
    if (counted == K && good == K) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "bdg_spectrum: residuals did not reach " << options.tol << " (worst wanted "
        << residual.head(std::min(m, K)).maxCoeff() << ")";
    throw NumericalError(msg.str());
  }

  std::vector<BdGMode> modes;
  const Vector& psi0 = ops.psi0();
  for (int j = 0; j < m && static_cast<int>(modes.size()) < K; ++j) {
    if (lambda(j) <= options.omega_floor * options.omega_floor) continue;
    const double omega = std::sqrt(lambda(j));
    Vector fp = Y.col(j);
    Vector bfp(n);
    ops.B(fp, bfp);
    const double scale = std::sqrt(omega / (fp.dot(bfp) * area));
    fp *= scale;
    bfp *= scale;
    const Vector fm = bfp / omega;

    std::vector<double> profile(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) profile[i] = psi0(i) * fp(i);
    const double pn = Eigen::Map<const Vector>(profile.data(), n).norm();
    if (!(pn > 0.0)) throw NumericalError("bdg_spectrum: zero density profile");
    for (auto& x : profile) x /= pn;
    // Keep (u, v) consistent with the sign chosen for the density profile.
    const double s = fix_sign(profile);
    std::vector<Complex> u(static_cast<std::size_t>(n)), v(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      u[i] = s * 0.5 * (fp(i) + fm(i));
      v[i] = s * 0.5 * (fp(i) - fm(i));
    }
    modes.push_back(BdGMode{omega, ComplexField(grid, std::move(u)), ComplexField(grid, std::move(v)),
                            ScalarField(grid, std::move(profile)), residual(j)});
  }
  if (static_cast<int>(modes.size()) < K) {
    throw NumericalError("bdg_spectrum: fewer than K modes above the frequency floor");
  }
  return modes;
}

ScalarField mode_density(const BdGMode& mode, const Condensate& ground) {
  if (!(mode.u.grid() == ground.psi.grid())) throw ValidationError("mode_density: grid mismatch");
  std::vector<double> f(mode.u.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    f[i] = (std::conj(ground.psi[i]) * (mode.u[i] + mode.v[i])).real();
    norm += f[i] * f[i];
  }
  norm = std::sqrt(norm);
  if (!(norm > 0.0)) throw ValidationError("mode_density: zero-norm profile");
  for (auto& x : f) x /= norm;
  fix_sign(f);
  return ScalarField(mode.u.grid(), std::move(f));
}

HydroFrequencies hydrodynamic_frequencies(double omega_x, double omega_y) {
  if (!(omega_x > 0.0) || !(omega_y > 0.0)) throw ValidationError("hydrodynamic_frequencies: need positive frequencies");
  const double s = omega_x * omega_x + omega_y * omega_y;
  const double root = std::sqrt(9.0 * s * s - 32.0 * omega_x * omega_x * omega_y * omega_y);
  HydroFrequencies h;
  h.dipole_x = omega_x;
  h.dipole_y = omega_y;
  h.scissors = std::sqrt(s);
  h.monopole = std::sqrt(1.5 * s + 0.5 * root);
  h.quadrupole = std::sqrt(1.5 * s - 0.5 * root);
  return h;
}

}  // namespace modelens
