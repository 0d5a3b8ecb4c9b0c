#include "modelens/fourier.hpp"

#include <cmath>
#include <numbers>

#include "modelens/errors.hpp"

namespace modelens {

FourierResponse fourier_response(const ImageStack& stack, double omega) {
  stack.validate();
  const int N = stack.n_frames();
  if (N < 2) throw ValidationError("fourier_response: need at least two frames");
  if (!(omega > 0.0) || !std::isfinite(omega)) throw ValidationError("fourier_response: frequency must be positive");
  const double dt = (stack.times.back() - stack.times.front()) / (N - 1);
  for (int n = 1; n < N; ++n) {
    const double step = stack.times[n] - stack.times[n - 1];
    if (std::abs(step - dt) > 1e-6 * dt) throw ValidationError("fourier_response: sampling times are not evenly spaced");
  }
  const double base = 2.0 * std::numbers::pi / (N * dt);
  const long m = std::lround(omega / base);
  if (m < 1 || 2 * m >= N) {
    throw ValidationError("fourier_response: frequency " + std::to_string(omega) + " falls outside the resolvable band (bin " +
                          std::to_string(m) + " of " + std::to_string(N) + " frames)");
  }

  Eigen::VectorXcd phase(N);
  for (int n = 0; n < N; ++n) phase(n) = std::polar(1.0 / N, -2.0 * std::numbers::pi * m * n / N);
  const Eigen::VectorXcd a = stack.frames.cast<Complex>().transpose() * phase;

  std::vector<double> mag(a.size());
  double sum2 = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    mag[j] = std::abs(a(j));
    sum2 += mag[j] * mag[j];
  }
  FourierResponse out{ScalarField(Grid2D::raster(stack.nx, stack.ny), std::move(mag)), {}, 0.0, 0, 0.0};
  out.coefficients.assign(a.data(), a.data() + a.size());
  out.amplitude = std::sqrt(sum2 / static_cast<double>(a.size()));
  out.bin = static_cast<int>(m);
  out.bin_frequency = m * base;
  return out;
}

}  // namespace modelens
