#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "modelens/pca.hpp"
#include "modelens/synth.hpp"

using namespace modelens;

namespace {

Eigen::VectorXd as_vector(const ScalarField& f) {
  return Eigen::Map<const Eigen::VectorXd>(f.values().data(), static_cast<Eigen::Index>(f.size()));
}

std::vector<double> times(int N, double T) {
  std::vector<double> t(N);
  for (int n = 0; n < N; ++n) t[n] = T * n / (N - 1);
  return t;
}

// Norm of the projection of unit vector v onto span(a, b).
double span_overlap(const Eigen::VectorXd& v, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::MatrixXd M(a.size(), 2);
  M << a, b;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
  const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(a.size(), 2);
  return (Q.transpose() * v).norm() / v.norm();
}

}  // namespace

TEST(GaussianCloud, PeakAndSymmetry) {
  const auto g = Grid2D::raster(31, 31);
  const auto c = gaussian_cloud(g, 4.0);
  EXPECT_DOUBLE_EQ(c(15, 15), 1.0);
  EXPECT_NEAR(c(19, 15), std::exp(-0.5), 1e-14);
  EXPECT_DOUBLE_EQ(c(3, 7), c(27, 23));
  EXPECT_THROW(gaussian_cloud(g, 0.0), ValidationError);
}

TEST(ShapeProfiles, OrthonormalAndValidated) {
  const auto g = Grid2D::raster(40, 40);
  const std::vector<std::string> names{"dipole-x", "dipole-y", "scissors", "quadrupole", "monopole"};
  const auto p = shape_profiles(g, names, 6.0);
  ASSERT_EQ(p.size(), 5u);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j)
      EXPECT_NEAR(as_vector(p[i]).dot(as_vector(p[j])), i == j ? 1.0 : 0.0, 1e-12);
  const std::vector<std::string> bad{"breathing"};
  EXPECT_THROW(shape_profiles(g, bad, 6.0), ValidationError);
}

TEST(SynthesizeDataset, NoModesNoNoiseGivesCopies) {
  const auto g = Grid2D::raster(12, 10);
  const auto rho0 = gaussian_cloud(g, 3.0);
  const auto s = synthesize_dataset(rho0, {}, times(7, 1.0), 0.0, 1);
  ASSERT_EQ(s.n_frames(), 7);
  EXPECT_EQ(s.nx, 12);
  EXPECT_EQ(s.ny, 10);
  for (int n = 0; n < 7; ++n) EXPECT_EQ(s.frames.row(n).transpose(), as_vector(rho0));
}

TEST(SynthesizeDataset, SingleModeRecoveredByPca) {
  const auto g = Grid2D::raster(32, 32);
  const std::vector<std::string> names{"dipole-x"};
  const auto f = shape_profiles(g, names, 5.0)[0];
  const std::vector<SynthMode> modes{{0.1, 1.0, 0.3, f}};
  const int N = 300;
  const auto s = synthesize_dataset(gaussian_cloud(g, 5.0), modes, times(N, 37.7), 0.0, 1);
  const auto pca = principal_components(center(s), 2);
  ASSERT_GE(pca.components.size(), 1u);
  EXPECT_GE(std::abs(pca.components[0].image.dot(as_vector(f))), 0.999);
  const double expected = N * 0.01 / (2.0 * (N - 1));
  EXPECT_NEAR(pca.components[0].eigenvalue, expected, 0.05 * expected);
}

TEST(SynthesizeDataset, DominantModeIsolatedBeforeBeatPeriod) {
  const auto g = Grid2D::raster(32, 32);
  const std::vector<std::string> names{"dipole-x", "dipole-y"};
  const auto p = shape_profiles(g, names, 5.0);
  // Beat period 2 pi / 0.1 ~ 63, record only 20 long.
  const std::vector<SynthMode> modes{{1.0, 1.0, 0.0, p[0]}, {0.1, 1.1, 0.5, p[1]}};
  const auto s = synthesize_dataset(gaussian_cloud(g, 5.0), modes, times(200, 20.0), 1e-4, 3);
  const auto pca = principal_components(center(s), 2);
  EXPECT_GE(std::abs(pca.components[0].image.dot(as_vector(p[0]))), 0.99);
}

TEST(SynthesizeDataset, NoiseStatisticsAndDeterminism) {
  const auto g = Grid2D::raster(20, 20);
  const auto rho0 = gaussian_cloud(g, 4.0);
  const auto a = synthesize_dataset(rho0, {}, times(50, 1.0), 0.02, 42);
  const auto b = synthesize_dataset(rho0, {}, times(50, 1.0), 0.02, 42);
  const auto c = synthesize_dataset(rho0, {}, times(50, 1.0), 0.02, 43);
  EXPECT_EQ(a.frames, b.frames);
  EXPECT_NE(a.frames, c.frames);
  Eigen::MatrixXd resid = a.frames;
  resid.rowwise() -= as_vector(rho0).transpose();
  EXPECT_NEAR(std::sqrt(resid.squaredNorm() / resid.size()), 0.02, 0.001);
}

TEST(SynthesizeDataset, WarnsOnNonOrthonormalProfilesAndChecksShape) {
  const auto g = Grid2D::raster(16, 16);
  const auto rho0 = gaussian_cloud(g, 3.0);
  const std::vector<SynthMode> loose{{0.1, 1.0, 0.0, rho0}};
  testing::internal::CaptureStderr();
  synthesize_dataset(rho0, loose, times(10, 5.0), 0.0, 1);
  EXPECT_NE(testing::internal::GetCapturedStderr().find("orthonormal"), std::string::npos);
  const std::vector<SynthMode> wrong{{0.1, 1.0, 0.0, gaussian_cloud(Grid2D::raster(8, 8), 2.0)}};
  EXPECT_THROW(synthesize_dataset(rho0, wrong, times(10, 5.0), 0.0, 1), ValidationError);
  EXPECT_THROW(synthesize_dataset(rho0, {}, times(10, 5.0), -1.0, 1), ValidationError);
}

TEST(SynthNoiseStack, JitterGivesGradientComponents) {
  const auto g = Grid2D::raster(48, 48);
  const auto base = gaussian_cloud(g, 6.0);
  NoiseSpec spec;
  spec.jitter_px = 0.3;
  const auto s = synth_noise_stack(base, spec, 200, 5);
  EXPECT_EQ(s.time_unit, "frame");
  const auto pca = principal_components(center(s), 2);
  // Analytic gradients of the Gaussian (centre 23.5).
  Eigen::VectorXd gx(g.size()), gy(g.size());
  for (int iy = 0; iy < 48; ++iy)
    for (int ix = 0; ix < 48; ++ix) {
      gx(g.index(ix, iy)) = -(ix - 23.5) / 36.0 * base(ix, iy);
      gy(g.index(ix, iy)) = -(iy - 23.5) / 36.0 * base(ix, iy);
    }
  for (int k = 0; k < 2; ++k) EXPECT_GE(span_overlap(pca.components[k].image, gx, gy), 0.99) << k;
}

TEST(SynthNoiseStack, IntensityOnlyIsRankOneAlongBase) {
  const auto g = Grid2D::raster(24, 24);
  const auto base = gaussian_cloud(g, 5.0);
  NoiseSpec spec;
  spec.intensity_frac = 0.05;
  const auto s = synth_noise_stack(base, spec, 40, 2);
  const auto pca = principal_components(center(s), 3);
  EXPECT_GE(std::abs(pca.components[0].image.dot(as_vector(base).normalized())), 1.0 - 1e-12);
  EXPECT_NEAR(pca.components[0].fraction, 1.0, 1e-10);
}

TEST(SynthNoiseStack, FringeComponentIsPlaneWave) {
  const auto g = Grid2D::raster(32, 32);
  const auto base = gaussian_cloud(g, 5.0);
  NoiseSpec spec;
  spec.fringe = {0.05, 0.4, 0.1};
  const auto pca = principal_components(center(synth_noise_stack(base, spec, 60, 8)), 2);
  Eigen::VectorXd c(g.size()), sn(g.size());
  for (int iy = 0; iy < 32; ++iy)
    for (int ix = 0; ix < 32; ++ix) {
      c(g.index(ix, iy)) = std::cos(0.4 * ix + 0.1 * iy);
      sn(g.index(ix, iy)) = std::sin(0.4 * ix + 0.1 * iy);
    }
  for (int k = 0; k < 2; ++k) EXPECT_GE(span_overlap(pca.components[k].image, c, sn), 1.0 - 1e-10);
}

TEST(SynthNoiseStack, AllOffIsZeroVarianceAndDeterministic) {
  const auto g = Grid2D::raster(16, 16);
  const auto base = gaussian_cloud(g, 3.0);
  const auto s = synth_noise_stack(base, NoiseSpec{}, 10, 1);
  EXPECT_TRUE(principal_components(center(s), 2).zero_variance);
  NoiseSpec spec{0.4, 0.03, {0.02, 0.35, 0.12}};
  EXPECT_EQ(synth_noise_stack(base, spec, 10, 9).frames, synth_noise_stack(base, spec, 10, 9).frames);
  spec.jitter_px = -1;
  EXPECT_THROW(synth_noise_stack(base, spec, 10, 1), ValidationError);
  EXPECT_THROW(synth_noise_stack(base, NoiseSpec{}, 0, 1), ValidationError);
}
