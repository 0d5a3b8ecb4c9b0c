#pragma once

#include <memory>
#include <span>

#include "modelens/grid.hpp"

namespace modelens {

/// Reusable in-place 2D complex DFT on one grid shape (FFTW backed).
///
/// Forward is unnormalised; backward divides by nx*ny. Plans are built with
/// FFTW_ESTIMATE so results are reproducible run to run.
class Fft2D {
 public:
  explicit Fft2D(const Grid2D& grid);
  ~Fft2D();
  Fft2D(Fft2D&&) noexcept;
  Fft2D& operator=(Fft2D&&) noexcept;
  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;

  const Grid2D& grid() const { return grid_; }

  void forward(std::span<Complex> data) const;
  /// Inverse transform including the 1/(nx*ny) factor.
  void backward(std::span<Complex> data) const;

  /// -(kx^2 + ky^2) on the FFT layout.
  std::span<const double> minus_k_squared() const { return minus_k2_; }

 private:
  struct Plans;
  Grid2D grid_;
  std::unique_ptr<Plans> plans_;
  std::vector<double> minus_k2_;
};

}  // namespace modelens
