#include "modelens/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <random>

#include "modelens/errors.hpp"

namespace modelens {

namespace {

void warn_if_not_orthonormal(std::span<const SynthMode> modes) {
  for (std::size_t a = 0; a < modes.size(); ++a) {
    const auto fa = modes[a].profile.values();
    for (std::size_t b = a; b < modes.size(); ++b) {
      const auto fb = modes[b].profile.values();
      double dot = 0.0;
      for (std::size_t j = 0; j < fa.size(); ++j) dot += fa[j] * fb[j];
      const double target = a == b ? 1.0 : 0.0;
      if (std::abs(dot - target) > 1e-6) {
        std::cerr << "[W] synthesize_dataset: mode profiles are not orthonormal (<f" << a << ", f" << b
                  << "> = " << dot << ")\n";
        return;
      }
    }
  }
}

}  // namespace

ScalarField gaussian_cloud(const Grid2D& grid, double width) {
  if (!(width > 0.0)) throw ValidationError("gaussian_cloud: width must be > 0");
  const double cx = 0.5 * (grid.nx() - 1), cy = 0.5 * (grid.ny() - 1);
  std::vector<double> v(grid.size());
  for (int iy = 0; iy < grid.ny(); ++iy) {
    for (int ix = 0; ix < grid.nx(); ++ix) {
      const double x = ix - cx, y = iy - cy;
      v[grid.index(ix, iy)] = std::exp(-(x * x + y * y) / (2.0 * width * width));
    }
  }
  return ScalarField(grid, std::move(v));
}

std::vector<ScalarField> shape_profiles(const Grid2D& grid, std::span<const std::string> shapes, double width) {
  const ScalarField g = gaussian_cloud(grid, width);
  const double cx = 0.5 * (grid.nx() - 1), cy = 0.5 * (grid.ny() - 1);
  std::vector<Eigen::VectorXd> basis;
  std::vector<ScalarField> out;
  for (const auto& name : shapes) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(grid.size()));
    for (int iy = 0; iy < grid.ny(); ++iy) {
      for (int ix = 0; ix < grid.nx(); ++ix) {
        const double x = (ix - cx) / width, y = (iy - cy) / width;
        double s;
        if (name == "dipole-x") s = x;
        else if (name == "dipole-y") s = y;
        else if (name == "scissors") s = x * y;
        else if (name == "quadrupole") s = x * x - y * y;
        else if (name == "monopole") s = x * x + y * y - 2.0;
        else throw ValidationError("shape_profiles: unknown shape '" + name + "'");
        const auto j = grid.index(ix, iy);
        v(static_cast<Eigen::Index>(j)) = s * g[j];
      }
    }
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) v -= b.dot(v) * b;
    }
    const double n = v.norm();
    if (!(n > 1e-12)) throw ValidationError("shape_profiles: '" + name + "' is not independent of the previous shapes");
    v /= n;
    basis.push_back(v);
    out.emplace_back(grid, std::vector<double>(v.data(), v.data() + v.size()));
  }
  return out;
}

ImageStack synthesize_dataset(const ScalarField& rho0, std::span<const SynthMode> modes,
                              std::span<const double> times, double noise_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0)) throw ValidationError("synthesize_dataset: noise sigma must be >= 0");
  if (times.empty()) throw ValidationError("synthesize_dataset: no sampling times");
  const auto P = static_cast<Eigen::Index>(rho0.size());
  for (const auto& m : modes) {
    if (!(m.profile.grid().nx() == rho0.grid().nx() && m.profile.grid().ny() == rho0.grid().ny())) {
      throw ValidationError("synthesize_dataset: mode profile dimensions differ from rho0");
    }
  }
  warn_if_not_orthonormal(modes);

  const auto N = static_cast<Eigen::Index>(times.size());
  FrameMatrix frames(N, P);
  const Eigen::Map<const Eigen::RowVectorXd> base(rho0.values().data(), P);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index n = 0; n < N; ++n) {
    frames.row(n) = base;
    for (const auto& m : modes) {
      const double c = m.amplitude * std::cos(m.omega * times[n] + m.phase);
      frames.row(n) += c * Eigen::Map<const Eigen::RowVectorXd>(m.profile.values().data(), P);
    }
    if (noise_sigma > 0.0) {
      for (Eigen::Index j = 0; j < P; ++j) frames(n, j) += noise_sigma * normal(rng);
    }
  }
  return ImageStack(rho0.grid().nx(), rho0.grid().ny(), std::move(frames),
                    std::vector<double>(times.begin(), times.end()));
}

ImageStack synth_noise_stack(const ScalarField& base, const NoiseSpec& spec, int n_frames, std::uint64_t seed) {
  if (n_frames < 1) throw ValidationError("synth_noise_stack: need at least one frame");
  if (!(spec.jitter_px >= 0.0 && spec.intensity_frac >= 0.0 && spec.fringe.amplitude >= 0.0)) {
    throw ValidationError("synth_noise_stack: noise parameters must be >= 0");
  }
  const int nx = base.grid().nx(), ny = base.grid().ny();
  const auto img = base.values();
  const double peak = *std::max_element(img.begin(), img.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
  auto at = [&](int ix, int iy) { return (ix < 0 || iy < 0 || ix >= nx || iy >= ny) ? 0.0 : img[iy * nx + ix]; };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);

  FrameMatrix frames(n_frames, static_cast<Eigen::Index>(nx) * ny);
  std::vector<double> times(n_frames);
  for (int n = 0; n < n_frames; ++n) {
    times[n] = n;
    const double sx = spec.jitter_px * normal(rng);
    const double sy = spec.jitter_px * normal(rng);
    const double scale = 1.0 + spec.intensity_frac * normal(rng);
    const double phi = uniform(rng);
    for (int iy = 0; iy < ny; ++iy) {
      for (int ix = 0; ix < nx; ++ix) {
        // shifted(x) = base(x - s)
        const double px = ix - sx, py = iy - sy;
        const int x0 = static_cast<int>(std::floor(px)), y0 = static_cast<int>(std::floor(py));
        const double fx = px - x0, fy = py - y0;
        const double v = (1 - fx) * (1 - fy) * at(x0, y0) + fx * (1 - fy) * at(x0 + 1, y0) +
                         (1 - fx) * fy * at(x0, y0 + 1) + fx * fy * at(x0 + 1, y0 + 1);
        double value = scale * v;
        if (spec.fringe.amplitude > 0.0) {
          value += spec.fringe.amplitude * peak * std::cos(spec.fringe.kx * ix + spec.fringe.ky * iy + phi);
        }
        frames(n, iy * nx + ix) = value;
      }
    }
  }
  return ImageStack(nx, ny, std::move(frames), std::move(times), "frame");
}

}  // namespace modelens
