#include "modelens/pca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "modelens/linalg.hpp"

namespace modelens {

CenteredData center(const ImageStack& stack) {
  stack.validate();
  if (stack.n_frames() < 2) throw ValidationError("center: need at least two frames");
  CenteredData data;
  data.nx = stack.nx;
  data.ny = stack.ny;
  data.times = stack.times;
  data.mean_image = stack.frames.colwise().mean().transpose();
  data.B = stack.frames.rowwise() - data.mean_image.transpose();
  return data;
}

namespace {

// Index of the first pixel that carries a significant share of the vector.
Eigen::Index first_significant(const Eigen::VectorXd& v) {
  const double scale = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-8 * scale) return i;
  }
  return v.size();
}

}  // namespace

PcaResult principal_components(const CenteredData& data, int K, const PcaOptions& options) {
  const int N = data.n_frames();
  if (N < 2) throw ValidationError("principal_components: need at least two frames");
  if (K < 1 || K > N) throw ValidationError("principal_components: K must be in [1, N]");

  PcaResult result;
  const double denom = N - 1.0;
  result.total_variance = data.B.squaredNorm() / denom;

  Eigen::VectorXd lambda;  // decreasing
  Eigen::MatrixXd Y;       // eigenvectors of Sigma, matching columns
  if (N <= options.direct_limit) {
    const Eigen::MatrixXd sigma = (data.B * data.B.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    lambda = es.eigenvalues().reverse();
    Y = es.eigenvectors().rowwise().reverse();
    result.eigenvalues = lambda.cwiseMax(0.0);
  } else {
    auto op = [&](const linalg::Vector& x, linalg::Vector& y) {
      const Eigen::VectorXd bt = data.B.transpose() * x;
      y = (data.B * bt) / denom;
    };
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal;
    linalg::Vector start(N);
    for (int i = 0; i < N; ++i) start(i) = normal(rng);
    const int max_dim = std::min(N, std::max(4 * K + 40, 80));
    auto lz = linalg::lanczos_largest(op, std::nullopt, start, K, max_dim, 1e-12);
    if (!lz.converged) throw NumericalError("principal_components: Lanczos did not converge");
    lambda = lz.values;
    Y = lz.vectors;
    result.eigenvalues = lambda.cwiseMax(0.0);
  }

  const double lmax = lambda.size() ? std::max(lambda(0), 0.0) : 0.0;
  // Identical frames still leave mean-subtraction rounding in B.
  const double roundoff = 64 * std::numeric_limits<double>::epsilon() * data.mean_image.norm() * std::sqrt(double(N));
  if (!(result.total_variance > 0.0) || !(lmax > 0.0) || data.B.norm() <= roundoff) {
    result.zero_variance = true;
    result.eigenvalues.setZero();
    return result;
  }

  std::vector<PrincipalComponent> pcs;
  for (Eigen::Index k = 0; k < lambda.size() && static_cast<int>(pcs.size()) < K; ++k) {
    if (!(lambda(k) > options.rank_tol * lmax)) break;
    PrincipalComponent pc;
    pc.image = data.B.transpose() * Y.col(k);
    pc.image /= std::sqrt(denom * lambda(k));
    pc.eigenvalue = lambda(k);
    pc.fraction = lambda(k) / result.total_variance;
    pcs.push_back(std::move(pc));
  }
  result.truncated = static_cast<int>(pcs.size()) < K;

  // Deterministic order for (near-)ties: first significant pixel index.
  std::stable_sort(pcs.begin(), pcs.end(), [&](const PrincipalComponent& a, const PrincipalComponent& b) {
    if (std::abs(a.eigenvalue - b.eigenvalue) > 1e-12 * lmax) return a.eigenvalue > b.eigenvalue;
    return first_significant(a.image) < first_significant(b.image);
  });
  // Gram-Schmidt pass to clean rounding in weakly conditioned components.
  for (std::size_t k = 0; k < pcs.size(); ++k) {
    for (std::size_t j = 0; j < k; ++j) pcs[k].image -= pcs[j].image.dot(pcs[k].image) * pcs[j].image;
    pcs[k].image.normalize();
    fix_sign({pcs[k].image.data(), static_cast<std::size_t>(pcs[k].image.size())});
  }
  result.components = std::move(pcs);
  return result;
}

std::vector<WeightSeries> weights(const CenteredData& data, std::span<const PrincipalComponent> pcs) {
  std::vector<WeightSeries> out;
  out.reserve(pcs.size());
  for (std::size_t k = 0; k < pcs.size(); ++k) {
    if (pcs[k].image.size() != data.n_pixels()) throw ValidationError("weights: pixel count mismatch");
    const Eigen::VectorXd w = data.B * pcs[k].image;
    out.push_back({static_cast<int>(k), std::vector<double>(w.data(), w.data() + w.size()), data.times});
  }
  return out;
}

ImageStack reconstruct(const CenteredData& data, std::span<const PrincipalComponent> pcs,
                       std::span<const WeightSeries> weights) {
  if (pcs.size() != weights.size()) throw ValidationError("reconstruct: one weight series per component");
  FrameMatrix frames = data.mean_image.transpose().replicate(data.n_frames(), 1);
  for (std::size_t k = 0; k < pcs.size(); ++k) {
    if (pcs[k].image.size() != data.n_pixels() ||
        static_cast<int>(weights[k].values.size()) != data.n_frames()) {
      throw ValidationError("reconstruct: dimension mismatch");
    }
    const Eigen::Map<const Eigen::VectorXd> w(weights[k].values.data(), data.n_frames());
    frames.noalias() += w * pcs[k].image.transpose();
  }
  return ImageStack(data.nx, data.ny, std::move(frames), data.times);
}

}  // namespace modelens
