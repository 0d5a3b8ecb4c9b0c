#pragma once

#include <complex>
#include <vector>

#include "modelens/grid.hpp"

namespace modelens {

struct FourierResponse {
  ScalarField magnitude;  ///< |a(r)| on the raster grid of the stack
  std::vector<Complex> coefficients;
  /// Pixel RMS of |a(r)|: c/2 * rms(f) for a cosine c cos(w t) f(r), and
  /// sigma/sqrt(N) on average for white noise.
  double amplitude = 0.0;
  int bin = 0;
  double bin_frequency = 0.0;  ///< angular, in the stack's time unit
};

/// Per-pixel discrete Fourier coefficient a(r) = (1/N) sum_n rho(r, t_n)
/// exp(-i w_m (t_n - t_0)) at the bin m nearest the angular frequency `omega`.
/// Requires evenly spaced times and 1 <= m < N/2; the Nyquist bin and above
/// are rejected because they cannot carry an oscillation unambiguously.
FourierResponse fourier_response(const ImageStack& stack, double omega);

}  // namespace modelens
