#include "modelens/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace modelens {

namespace {

constexpr std::uint8_t kMagic[4] = {'N', 'D', 'A', 'R'};
constexpr std::uint8_t kVersion = 1;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
  T value;
  std::memcpy(&value, raw, sizeof(T));
  return value;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("short write to " + path.string());
}

std::uint64_t product(std::span<const std::uint64_t> dims) {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

}  // namespace

std::uint64_t NdaArray::element_count() const {
  return std::visit([](const auto& v) { return static_cast<std::uint64_t>(v.size()); }, data);
}

const std::vector<double>& NdaArray::real() const {
  if (auto* p = std::get_if<std::vector<double>>(&data)) return *p;
  throw FormatError("NDA: expected real64 payload");
}
const std::vector<Complex>& NdaArray::complex() const {
  if (auto* p = std::get_if<std::vector<Complex>>(&data)) return *p;
  throw FormatError("NDA: expected complex128 payload");
}
const std::vector<std::uint16_t>& NdaArray::uint16() const {
  if (auto* p = std::get_if<std::vector<std::uint16_t>>(&data)) return *p;
  throw FormatError("NDA: expected uint16 payload");
}

std::vector<std::uint8_t> encode_nda(const NdaArray& array) {
  if (array.dims.size() > 255) throw ValidationError("NDA: at most 255 dimensions");
  if (product(array.dims) != array.element_count()) {
    throw ValidationError("NDA: dims product does not match element count");
  }
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(array.dtype()));
  out.push_back(static_cast<std::uint8_t>(array.dims.size()));
  out.push_back(0);
  for (auto d : array.dims) put_le<std::uint64_t>(out, d);
  std::visit(
      [&](const auto& values) {
        using T = typename std::decay_t<decltype(values)>::value_type;
        if constexpr (std::is_same_v<T, Complex>) {
          out.reserve(out.size() + values.size() * 16);
          for (const auto& v : values) {
            put_le<double>(out, v.real());
            put_le<double>(out, v.imag());
          }
        } else {
          out.reserve(out.size() + values.size() * sizeof(T));
          for (const auto& v : values) put_le<T>(out, v);
        }
      },
      array.data);
  return out;
}

NdaArray decode_nda(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw FormatError("NDA: truncated header");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw FormatError("NDA: bad magic");
  }
  if (bytes[4] != kVersion) throw FormatError("NDA: unsupported version " + std::to_string(bytes[4]));
  const std::uint8_t dtype = bytes[5];
  const std::size_t ndim = bytes[6];
  const std::size_t header = 8 + 8 * ndim;
  if (bytes.size() < header) throw FormatError("NDA: truncated dims");

  NdaArray array;
  for (std::size_t i = 0; i < ndim; ++i) array.dims.push_back(get_le<std::uint64_t>(&bytes[8 + 8 * i]));
  const std::uint64_t count = product(array.dims);
  const std::uint8_t* p = bytes.data() + header;
  const std::size_t available = bytes.size() - header;

  auto need = [&](std::size_t width) {
    if (count > available / width || count * width != available) {
      throw FormatError(count * width > available ? "NDA: truncated payload"
                                                  : "NDA: trailing bytes after payload");
    }
  };
  switch (dtype) {
    case 1: {
      need(8);
      std::vector<double> v(count);
      for (std::size_t i = 0; i < count; ++i) v[i] = get_le<double>(p + 8 * i);
      array.data = std::move(v);
      break;
    }
    case 2: {
      need(16);
      std::vector<Complex> v(count);
      for (std::size_t i = 0; i < count; ++i) {
        v[i] = {get_le<double>(p + 16 * i), get_le<double>(p + 16 * i + 8)};
      }
      array.data = std::move(v);
      break;
    }
    case 3: {
      need(2);
      std::vector<std::uint16_t> v(count);
      for (std::size_t i = 0; i < count; ++i) v[i] = get_le<std::uint16_t>(p + 2 * i);
      array.data = std::move(v);
      break;
    }
    default:
      throw FormatError("NDA: unknown dtype " + std::to_string(dtype));
  }
  return array;
}

void save_nda(const std::filesystem::path& path, const NdaArray& array) {
  write_file(path, encode_nda(array));
}

void save_nda(const std::filesystem::path& path, std::span<const double> values,
              std::span<const std::uint64_t> dims) {
  save_nda(path, NdaArray{{dims.begin(), dims.end()}, std::vector<double>(values.begin(), values.end())});
}

void save_nda(const std::filesystem::path& path, std::span<const Complex> values,
              std::span<const std::uint64_t> dims) {
  save_nda(path, NdaArray{{dims.begin(), dims.end()}, std::vector<Complex>(values.begin(), values.end())});
}

void save_nda(const std::filesystem::path& path, std::span<const std::uint16_t> values,
              std::span<const std::uint64_t> dims) {
  save_nda(path,
           NdaArray{{dims.begin(), dims.end()}, std::vector<std::uint16_t>(values.begin(), values.end())});
}

NdaArray load_nda(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode_nda(bytes);
}

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  auto is_space = [](std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; };
  for (;;) {
    while (pos < bytes.size() && is_space(bytes[pos])) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  std::string token;
  while (pos < bytes.size() && !is_space(bytes[pos]) && bytes[pos] != '#') token.push_back(static_cast<char>(bytes[pos++]));
  if (token.empty()) throw FormatError("PGM: truncated header");
  return token;
}

long pgm_number(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  const std::string token = pgm_token(bytes, pos);
  if (!std::all_of(token.begin(), token.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
      token.size() > 9) {
    throw FormatError("PGM: bad header field '" + token + "'");
  }
  return std::stol(token);
}

}  // namespace

ScalarField decode_pgm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  const std::string magic = pgm_token(bytes, pos);
  if (magic != "P5") throw FormatError("PGM: unsupported format '" + magic + "' (only binary P5)");
  const long width = pgm_number(bytes, pos);
  const long height = pgm_number(bytes, pos);
  const long maxval = pgm_number(bytes, pos);
  if (width < 1 || height < 1) throw FormatError("PGM: empty image");
  if (maxval < 1 || maxval > 65535) throw FormatError("PGM: maxval must be in [1, 65535]");
  if (pos >= bytes.size()) throw FormatError("PGM: truncated data");
  ++pos;  // single whitespace byte after maxval

  const std::size_t count = static_cast<std::size_t>(width) * height;
  const std::size_t width_bytes = maxval > 255 ? 2 : 1;
  if (bytes.size() - pos < count * width_bytes) throw FormatError("PGM: truncated data");

  std::vector<double> values(count);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t i = 0; i < count; ++i) {
    unsigned sample = width_bytes == 2 ? (unsigned{bytes[pos + 2 * i]} << 8) | bytes[pos + 2 * i + 1]
                                       : unsigned{bytes[pos + i]};
    values[i] = sample * scale;
  }
  return ScalarField(Grid2D::raster(static_cast<int>(width), static_cast<int>(height)),
                     std::move(values));
}

ScalarField load_pgm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode_pgm(bytes);
}

void save_pgm(const std::filesystem::path& path, const ScalarField& image, std::uint16_t maxval) {
  if (maxval == 0) throw ValidationError("PGM: maxval must be positive");
  const std::string header = "P5\n" + std::to_string(image.grid().nx()) + " " +
                             std::to_string(image.grid().ny()) + "\n" + std::to_string(maxval) + "\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (double v : image.values()) {
    const auto s = static_cast<unsigned>(std::lround(std::clamp(v, 0.0, 1.0) * maxval));
    if (maxval > 255) out.push_back(static_cast<std::uint8_t>(s >> 8));
    out.push_back(static_cast<std::uint8_t>(s & 0xff));
  }
  write_file(path, out);
}

}  // namespace modelens
