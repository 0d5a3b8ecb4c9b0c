#include "modelens/fft.hpp"

#include <fftw3.h>

namespace modelens {

struct Fft2D::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  ~Plans() {
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }
};

Fft2D::Fft2D(const Grid2D& grid) : grid_(grid), plans_(std::make_unique<Plans>()) {
  grid.require_spectral();
  const int nx = grid.nx();
  const int ny = grid.ny();
  auto* scratch = fftw_alloc_complex(grid.size());
  // Row-major with x fastest: the slow dimension is y.
  constexpr unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans_->forward = fftw_plan_dft_2d(ny, nx, scratch, scratch, FFTW_FORWARD, flags);
  plans_->backward = fftw_plan_dft_2d(ny, nx, scratch, scratch, FFTW_BACKWARD, flags);
  fftw_free(scratch);
  if (!plans_->forward || !plans_->backward) throw Error("Fft2D: FFTW planning failed");

  minus_k2_.resize(grid.size());
  for (int iy = 0; iy < ny; ++iy) {
    const double ky = grid.ky(iy);
    for (int ix = 0; ix < nx; ++ix) {
      const double kx = grid.kx(ix);
      minus_k2_[grid.index(ix, iy)] = -(kx * kx + ky * ky);
    }
  }
}

Fft2D::~Fft2D() = default;
Fft2D::Fft2D(Fft2D&&) noexcept = default;
Fft2D& Fft2D::operator=(Fft2D&&) noexcept = default;

void Fft2D::forward(std::span<Complex> data) const {
  if (data.size() != grid_.size()) throw ValidationError("Fft2D: dimension mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_->forward, p, p);
}

void Fft2D::backward(std::span<Complex> data) const {
  if (data.size() != grid_.size()) throw ValidationError("Fft2D: dimension mismatch");
  auto* p = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plans_->backward, p, p);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& v : data) v *= scale;
}

}  // namespace modelens
