#include "real_hamiltonian.hpp"

#include <fftw3.h>

namespace modelens::detail {

struct RealHamiltonian::Plans {
  double* real = nullptr;
  fftw_complex* spectrum = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  ~Plans() {
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(spectrum);
  }
};

RealHamiltonian::RealHamiltonian(const Grid2D& grid, std::span<const double> potential)
    : grid_(grid), plans_(std::make_unique<Plans>()) {
  grid.require_spectral();
  if (potential.size() != grid.size()) throw ValidationError("RealHamiltonian: potential size mismatch");
  potential_ = Eigen::Map<const Eigen::VectorXd>(potential.data(), static_cast<Eigen::Index>(potential.size()));

  const int nx = grid.nx();
  const int ny = grid.ny();
  const int nxh = nx / 2 + 1;
  plans_->real = fftw_alloc_real(grid.size());
  plans_->spectrum = fftw_alloc_complex(static_cast<std::size_t>(ny) * nxh);
  plans_->forward = fftw_plan_dft_r2c_2d(ny, nx, plans_->real, plans_->spectrum, FFTW_ESTIMATE);
  plans_->backward = fftw_plan_dft_c2r_2d(ny, nx, plans_->spectrum, plans_->real, FFTW_ESTIMATE);
  if (!plans_->forward || !plans_->backward) throw Error("RealHamiltonian: FFTW planning failed");

  half_k2_.resize(static_cast<std::size_t>(ny) * nxh);
  for (int iy = 0; iy < ny; ++iy) {
    const double ky = grid.ky(iy);
    for (int ix = 0; ix < nxh; ++ix) {
      const double kx = grid.kx(ix);
      half_k2_[static_cast<std::size_t>(iy) * nxh + ix] = 0.5 * (kx * kx + ky * ky);
    }
  }
}

RealHamiltonian::~RealHamiltonian() = default;

void RealHamiltonian::transform(const Eigen::VectorXd& in, Eigen::VectorXd& out, double shift,
                                bool invert) const {
  const std::size_t n = grid_.size();
  std::copy(in.data(), in.data() + n, plans_->real);
  fftw_execute(plans_->forward);
  const double norm = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < half_k2_.size(); ++i) {
    const double factor = (invert ? 1.0 / (half_k2_[i] + shift) : half_k2_[i]) * norm;
    plans_->spectrum[i][0] *= factor;
    plans_->spectrum[i][1] *= factor;
  }
  fftw_execute(plans_->backward);
  out.resize(static_cast<Eigen::Index>(n));
  std::copy(plans_->real, plans_->real + n, out.data());
}

void RealHamiltonian::kinetic(const Eigen::VectorXd& in, Eigen::VectorXd& out) const {
  transform(in, out, 0.0, false);
}

void RealHamiltonian::apply(const Eigen::VectorXd& in, const Eigen::VectorXd& diag,
                            Eigen::VectorXd& out) const {
  transform(in, out, 0.0, false);
  out.array() += (potential_ + diag).array() * in.array();
}

void RealHamiltonian::inverse_kinetic(const Eigen::VectorXd& in, double shift,
                                      Eigen::VectorXd& out) const {
  transform(in, out, shift, true);
}

}  // namespace modelens::detail
