#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "modelens/errors.hpp"

namespace modelens {

using Complex = std::complex<double>;

/// Uniform periodic 2D domain, cell-centred, lengths in units of a_x.
///
/// Pixels are flattened row-major with x running fastest:
/// index = iy * nx + ix.
class Grid2D {
 public:
  /// Spectral grid: nx, ny >= 8 and even, lx, ly > 0.
  Grid2D(int nx, int ny, double lx, double ly);

  /// Pixel raster of an image (unit spacing, any size >= 1). Raster grids
  /// carry image geometry only; spectral operations reject them.
  static Grid2D raster(int width, int height);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  double dx() const { return lx_ / nx_; }
  double dy() const { return ly_ / ny_; }
  double cell_area() const { return dx() * dy(); }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
  bool is_spectral() const { return spectral_; }

  double x(int ix) const { return -0.5 * lx_ + (ix + 0.5) * dx(); }
  double y(int iy) const { return -0.5 * ly_ + (iy + 0.5) * dy(); }

  /// Angular wave numbers k = 2*pi*m/L with m in [-n/2, n/2).
  double kx(int ix) const;
  double ky(int iy) const;

  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * nx_ + ix;
  }

  /// Throws ValidationError unless the grid supports spectral transforms.
  void require_spectral() const;

  bool operator==(const Grid2D& other) const = default;

 private:
  Grid2D(int nx, int ny, double lx, double ly, bool spectral);

  int nx_;
  int ny_;
  double lx_;
  double ly_;
  bool spectral_;
};

/// Immutable field sampled on a Grid2D.
template <typename T>
class Field {
 public:
  Field(Grid2D grid, std::vector<T> values);
  /// Zero field.
  explicit Field(Grid2D grid) : grid_(grid), values_(grid.size(), T{}) {}

  const Grid2D& grid() const { return grid_; }
  std::span<const T> values() const { return values_; }
  const T& operator()(int ix, int iy) const { return values_[grid_.index(ix, iy)]; }
  const T& operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  /// Moves the storage out; the field is left empty.
  std::vector<T> release() && { return std::move(values_); }

 private:
  Grid2D grid_;
  std::vector<T> values_;
};

using ScalarField = Field<double>;
using ComplexField = Field<Complex>;

extern template class Field<double>;
extern template class Field<Complex>;

/// Frames stored one per row.
using FrameMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// N frames of P pixels with their sampling times.
struct ImageStack {
  int nx = 0;  ///< frame width (pixels)
  int ny = 0;  ///< frame height (pixels)
  FrameMatrix frames;
  std::vector<double> times;
  std::string time_unit = "1/omega_x";

  ImageStack() = default;
  ImageStack(int nx, int ny, FrameMatrix frames, std::vector<double> times,
             std::string time_unit = "1/omega_x");

  int n_frames() const { return static_cast<int>(frames.rows()); }
  int n_pixels() const { return static_cast<int>(frames.cols()); }

  /// Throws ValidationError when shapes or times are inconsistent.
  void validate() const;
};

ComplexField fft2(const ComplexField& field);
ComplexField ifft2(const ComplexField& field);

/// Pure Laplacian evaluated in Fourier space.
ComplexField laplacian_spectral(const ComplexField& field);

/// sum conj(f) g dx dy
Complex inner_product(const ComplexField& f, const ComplexField& g);

/// Fixes the sign so the largest-|value| entry is positive (first index on
/// ties). Returns the factor applied (+1 or -1).
double fix_sign(std::span<double> values);

ComplexField to_complex(const ScalarField& field);
ScalarField density(const ComplexField& psi);

}  // namespace modelens
