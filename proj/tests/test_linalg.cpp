#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "modelens/linalg.hpp"

using namespace modelens::linalg;

namespace {

Matrix random_spd(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = d(rng);
  return A * A.transpose() + n * Matrix::Identity(n, n);
}

Vector random_vector(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

LinearOp matrix_op(const Matrix& A) {
  return [A](const Vector& x, Vector& y) { y = A * x; };
}

}  // namespace

TEST(Pcg, MatchesDenseSolve) {
  const Matrix A = random_spd(40, 1);
  const Vector b = random_vector(40, 2);
  const Vector dinv = A.diagonal().cwiseInverse();
  Vector x = Vector::Zero(40);
  const auto r = pcg(matrix_op(A), [&](const Vector& in, Vector& out) { out = dinv.cwiseProduct(in); }, b, x, 1e-13, 500);
  EXPECT_TRUE(r.converged);
  EXPECT_LE((x - A.ldlt().solve(b)).norm(), 1e-10 * x.norm());
}

TEST(Pcg, DeflationSolvesOnComplement) {
  // Singular operator with null vector q: solvable on q-perp.
  const int n = 30;
  Vector q = random_vector(n, 3).normalized();
  const Matrix P = Matrix::Identity(n, n) - q * q.transpose();
  const Matrix A = P * random_spd(n, 4) * P;
  const Vector b = P * random_vector(n, 5);
  Vector x = Vector::Zero(n);
  const auto r = pcg(matrix_op(A), [](const Vector& in, Vector& out) { out = in; }, b, x, 1e-13, 500, &q);
  EXPECT_TRUE(r.converged);
  EXPECT_LE(std::abs(q.dot(x)), 1e-12);
  EXPECT_LE((A * x - b).norm(), 1e-10 * b.norm());
}

TEST(Pcg, ReportsNonConvergence) {
  const Matrix A = random_spd(40, 6);
  Vector x = Vector::Zero(40);
  const auto r = pcg(matrix_op(A), [](const Vector& in, Vector& out) { out = in; }, random_vector(40, 7), x, 1e-15, 2);
  EXPECT_FALSE(r.converged);
}

TEST(Lanczos, LargestEigenvaluesOfSymmetricMatrix) {
  const Matrix A = random_spd(80, 8);
  Eigen::SelfAdjointEigenSolver<Matrix> es(A);
  const auto r = lanczos_largest(matrix_op(A), std::nullopt, random_vector(80, 9), 5, 60, 1e-12);
  ASSERT_TRUE(r.converged);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(r.values(i), es.eigenvalues()(79 - i), 1e-9 * es.eigenvalues()(79));
  EXPECT_LE((r.vectors.transpose() * r.vectors - Matrix::Identity(5, 5)).norm(), 1e-10);
}

TEST(Lanczos, GeneralisedProblemInMetric) {
  // K v = lambda M v  <=>  M^{-1} K self-adjoint in the M inner product.
  const int n = 40;
  const Matrix K = random_spd(n, 10), M = random_spd(n, 11);
  const Eigen::LDLT<Matrix> Mf(M);
  LinearOp op = [&](const Vector& x, Vector& y) { y = Mf.solve(K * x); };
  const auto r = lanczos_largest(op, matrix_op(M), random_vector(n, 12), 3, n, 1e-12);
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(K, M);
  ASSERT_TRUE(r.converged);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.values(i), es.eigenvalues()(n - 1 - i), 1e-9 * es.eigenvalues()(n - 1));
  EXPECT_LE((r.vectors.transpose() * M * r.vectors - Matrix::Identity(3, 3)).norm(), 1e-9);
}
