#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

#include "modelens/grid.hpp"

namespace modelens {

/// Element type tag of an NDA v1 file.
enum class NdaType : std::uint8_t { Real64 = 1, Complex128 = 2, UInt16 = 3 };

/// In-memory image of an NDA v1 array.
///
/// Layout on disk: "NDAR", u8 version (1), u8 dtype, u8 ndim, u8 0,
/// ndim little-endian u64 dims, then the row-major little-endian payload.
struct NdaArray {
  std::vector<std::uint64_t> dims;
  std::variant<std::vector<double>, std::vector<Complex>, std::vector<std::uint16_t>> data;

  NdaType dtype() const { return static_cast<NdaType>(data.index() + 1); }
  std::uint64_t element_count() const;

  /// Typed views; throw FormatError on dtype mismatch.
  const std::vector<double>& real() const;
  const std::vector<Complex>& complex() const;
  const std::vector<std::uint16_t>& uint16() const;
};

void save_nda(const std::filesystem::path& path, std::span<const double> values,
              std::span<const std::uint64_t> dims);
void save_nda(const std::filesystem::path& path, std::span<const Complex> values,
              std::span<const std::uint64_t> dims);
void save_nda(const std::filesystem::path& path, std::span<const std::uint16_t> values,
              std::span<const std::uint64_t> dims);
void save_nda(const std::filesystem::path& path, const NdaArray& array);

NdaArray load_nda(const std::filesystem::path& path);

/// Encodes/decodes NDA bytes without touching the filesystem.
std::vector<std::uint8_t> encode_nda(const NdaArray& array);
NdaArray decode_nda(std::span<const std::uint8_t> bytes);

/// Binary (P5) PGM, 8- or 16-bit big-endian samples, scaled to [0, 1].
ScalarField load_pgm(const std::filesystem::path& path);
ScalarField decode_pgm(std::span<const std::uint8_t> bytes);

/// Writes a 16-bit P5 PGM; values are clamped to [0, 1] and scaled by maxval.
void save_pgm(const std::filesystem::path& path, const ScalarField& image,
              std::uint16_t maxval = 65535);

}  // namespace modelens
