#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "modelens/grid.hpp"

namespace modelens {

/// Gaussian cloud exp(-(x^2 + y^2) / (2 w^2)) centred on the raster, peak 1.
ScalarField gaussian_cloud(const Grid2D& grid, double width);

/// Low-order mode shapes on a Gaussian envelope of the given width (pixels),
/// Gram-Schmidt orthonormalised in the order given. Names: dipole-x (x),
/// dipole-y (y), scissors (xy), quadrupole (x^2 - y^2), monopole
/// (x^2 + y^2 - 2 w^2).
std::vector<ScalarField> shape_profiles(const Grid2D& grid, std::span<const std::string> shapes, double width);

/// One term c cos(omega t + phi) f(r) of the small-oscillation expansion.
struct SynthMode {
  double amplitude = 0.0;
  double omega = 0.0;
  double phase = 0.0;
  ScalarField profile;
};

/// rho(r, t) = rho0(r) + sum_k c_k cos(omega_k t + phi_k) f_k(r) + noise, where
/// the noise is independent Gaussian per pixel and frame. Profiles that are not
/// orthonormal (pixel inner product) draw a warning on stderr.
ImageStack synthesize_dataset(const ScalarField& rho0, std::span<const SynthMode> modes,
                              std::span<const double> times, double noise_sigma, std::uint64_t seed);

struct FringeSpec {
  double amplitude = 0.0;  ///< relative to the peak of the base image
  double kx = 0.0;         ///< radians per pixel
  double ky = 0.0;
};

struct NoiseSpec {
  double jitter_px = 0.0;       ///< standard deviation of the frame shift
  double intensity_frac = 0.0;  ///< standard deviation of the intensity factor - 1
  FringeSpec fringe;
};

/// Camera-like nuisance stack: each frame is the base image shifted by a
/// random sub-pixel offset (bilinear, zero outside), scaled by 1 + frac N(0,1),
/// plus amplitude * max(base) * cos(k.r + phi) with phi uniform. Frame times
/// are 0, 1, ..., N-1 in units of "frame".
ImageStack synth_noise_stack(const ScalarField& base, const NoiseSpec& spec, int n_frames, std::uint64_t seed);

}  // namespace modelens
