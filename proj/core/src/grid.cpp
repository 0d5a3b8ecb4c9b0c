#include "modelens/grid.hpp"

#include <cmath>
#include <numbers>

#include "modelens/fft.hpp"

namespace modelens {

Grid2D::Grid2D(int nx, int ny, double lx, double ly) : Grid2D(nx, ny, lx, ly, true) {}

Grid2D::Grid2D(int nx, int ny, double lx, double ly, bool spectral)
    : nx_(nx), ny_(ny), lx_(lx), ly_(ly), spectral_(spectral) {
  if (spectral) {
    if (nx < 8 || ny < 8 || nx % 2 != 0 || ny % 2 != 0) {
      throw ValidationError("Grid2D: nx and ny must be even and >= 8 (got " +
                            std::to_string(nx) + "x" + std::to_string(ny) + ")");
    }
  } else if (nx < 1 || ny < 1) {
    throw ValidationError("Grid2D: raster dimensions must be positive");
  }
  if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
    throw ValidationError("Grid2D: lx and ly must be finite and positive");
  }
}

Grid2D Grid2D::raster(int width, int height) {
  return Grid2D(width, height, static_cast<double>(width), static_cast<double>(height), false);
}

namespace {
double wave_number(int i, int n, double length) {
  const int m = i < n / 2 ? i : i - n;
  return 2.0 * std::numbers::pi * m / length;
}
}  // namespace

double Grid2D::kx(int ix) const { return wave_number(ix, nx_, lx_); }
double Grid2D::ky(int iy) const { return wave_number(iy, ny_, ly_); }

void Grid2D::require_spectral() const {
  if (!spectral_) {
    throw ValidationError("spectral operation requested on a raster grid");
  }
}

template <typename T>
Field<T>::Field(Grid2D grid, std::vector<T> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw ValidationError("Field: expected " + std::to_string(grid_.size()) + " values, got " +
                          std::to_string(values_.size()));
  }
  for (const T& v : values_) {
    bool finite;
    if constexpr (std::is_same_v<T, Complex>) {
      finite = std::isfinite(v.real()) && std::isfinite(v.imag());
    } else {
      finite = std::isfinite(v);
    }
    if (!finite) throw ValidationError("Field: non-finite value");
  }
}

template class Field<double>;
template class Field<Complex>;

ImageStack::ImageStack(int nx_, int ny_, FrameMatrix frames_, std::vector<double> times_,
                       std::string time_unit_)
    : nx(nx_), ny(ny_), frames(std::move(frames_)), times(std::move(times_)),
      time_unit(std::move(time_unit_)) {
  validate();
}

void ImageStack::validate() const {
  if (nx < 1 || ny < 1) throw ValidationError("ImageStack: bad frame geometry");
  if (frames.cols() != static_cast<Eigen::Index>(nx) * ny) {
    throw ValidationError("ImageStack: pixel count " + std::to_string(frames.cols()) +
                          " does not match " + std::to_string(nx) + "x" + std::to_string(ny));
  }
  if (static_cast<Eigen::Index>(times.size()) != frames.rows()) {
    throw ValidationError("ImageStack: one timestamp per frame required");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw ValidationError("ImageStack: times must be strictly increasing");
  }
}

double fix_sign(std::span<double> values) {
  std::size_t best = 0;
  double best_abs = -1.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    // small slack so that mirror-symmetric lobes resolve to the first index
    if (std::abs(values[i]) > best_abs * (1.0 + 1e-9)) {
      best_abs = std::abs(values[i]);
      best = i;
    }
  }
  if (!values.empty() && values[best] < 0.0) {
    for (auto& v : values) v = -v;
    return -1.0;
  }
  return 1.0;
}

ComplexField fft2(const ComplexField& field) {
  field.grid().require_spectral();
  std::vector<Complex> data(field.values().begin(), field.values().end());
  Fft2D(field.grid()).forward(data);
  return ComplexField(field.grid(), std::move(data));
}

ComplexField ifft2(const ComplexField& field) {
  field.grid().require_spectral();
  std::vector<Complex> data(field.values().begin(), field.values().end());
  Fft2D(field.grid()).backward(data);
  return ComplexField(field.grid(), std::move(data));
}

ComplexField laplacian_spectral(const ComplexField& field) {
  field.grid().require_spectral();
  const Fft2D fft(field.grid());
  std::vector<Complex> data(field.values().begin(), field.values().end());
  fft.forward(data);
  const auto mk2 = fft.minus_k_squared();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= mk2[i];
  fft.backward(data);
  return ComplexField(field.grid(), std::move(data));
}

Complex inner_product(const ComplexField& f, const ComplexField& g) {
  if (!(f.grid() == g.grid())) throw ValidationError("inner_product: grid mismatch");
  Complex sum{};
  for (std::size_t i = 0; i < f.size(); ++i) sum += std::conj(f[i]) * g[i];
  return sum * f.grid().cell_area();
}

ComplexField to_complex(const ScalarField& field) {
  std::vector<Complex> data(field.values().begin(), field.values().end());
  return ComplexField(field.grid(), std::move(data));
}

ScalarField density(const ComplexField& psi) {
  std::vector<double> rho(psi.size());
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = std::norm(psi[i]);
  return ScalarField(psi.grid(), std::move(rho));
}

}  // namespace modelens
