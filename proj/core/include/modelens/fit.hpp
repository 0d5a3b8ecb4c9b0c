#pragma once

#include <span>
#include <vector>

#include "modelens/pca.hpp"

namespace modelens {

/// offset + sum_j amplitudes[j] cos(frequencies[j] t + phases[j])
struct SinusoidFit {
  int n_components = 0;
  std::vector<double> amplitudes;   ///< > 0, sorted decreasing
  std::vector<double> frequencies;  ///< angular, or cycles per time unit when fitted with cyclic
  std::vector<double> phases;       ///< (-pi, pi], referred to t = 0
  double offset = 0.0;
  double rms_residual = 0.0;
  int iterations = 0;
  bool cyclic = false;
  /// Sum of squared residuals after the initial guess and each accepted step.
  std::vector<double> ssr_history;

  double evaluate(double t) const;
};

struct FitOptions {
  /// Report (and interpret max_frequency) in cycles per time unit, e.g. Hz.
  bool cyclic = false;
  /// Periodogram oversampling relative to the 2 pi / T resolution.
  double oversample = 10.0;
  /// Upper end of the periodogram search; 0 selects the mean Nyquist limit.
  double max_frequency = 0.0;
  int max_iter = 500;
};

/// Classical Lomb-Scargle power at the given angular frequencies (mean removed,
/// normalised by the variance).
std::vector<double> lomb_scargle(std::span<const double> times, std::span<const double> values,
                                 std::span<const double> omegas);

/// Least-squares sum of `n` sinusoids plus an offset. Frequencies are seeded
/// from successive periodogram peaks of the prewhitened residual and refined
/// jointly by damped Gauss-Newton (Levenberg-Marquardt) steps. Times need not
/// be evenly spaced. Requires N >= 4 n; throws ValidationError on a constant
/// series and NumericalError on non-convergence.
SinusoidFit fit_sinusoids(std::span<const double> times, std::span<const double> values, int n,
                          const FitOptions& options = {});

SinusoidFit fit_sinusoids(const WeightSeries& series, int n, const FitOptions& options = {});

}  // namespace modelens
