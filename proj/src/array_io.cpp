#include "wcreg/array_io.hpp"

#include "wcreg/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

namespace wcreg::io {

namespace {

static_assert(std::endian::native == std::endian::little,
              "raw array encoding assumes a little-endian host");

template <typename T>
void put(std::string& out, T value)
{
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(std::string_view bytes, std::size_t& offset)
{
  if (offset + sizeof(T) > bytes.size())
    throw IoError("raw array: truncated input");
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  offset += sizeof(T);
  return value;
}

} // namespace

std::string encode_raw(const DenseArray& array)
{
  std::string out(kRawMagic.begin(), kRawMagic.end());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(array.rank()));
  for (auto e : array.shape())
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e));
  for (double v : array.values())
    put<double>(out, v);
  return out;
}

DenseArray decode_raw(std::string_view bytes)
{
  if (bytes.size() < kRawMagic.size() ||
      !std::equal(kRawMagic.begin(), kRawMagic.end(), bytes.begin()))
    throw IoError("raw array: bad magic");
  std::size_t offset = kRawMagic.size();
  const auto rank = take<std::uint32_t>(bytes, offset);
  if (rank == 0)
    throw IoError("raw array: rank 0");
  Shape shape(rank);
  for (auto& e : shape)
    e = take<std::uint32_t>(bytes, offset);
  const std::size_t n = shape_size(shape);
  if (bytes.size() - offset != n * sizeof(double))
    throw IoError(fmt::format("raw array: payload has {} bytes, expected {}", bytes.size() - offset,
                              n * sizeof(double)));
  std::vector<double> data(n);
  std::memcpy(data.data(), bytes.data() + offset, n * sizeof(double));
  return DenseArray(std::move(shape), std::move(data));
}

void write_raw(const std::filesystem::path& path, const DenseArray& array)
{
  write_file_atomic(path, encode_raw(array));
}

DenseArray read_raw(const std::filesystem::path& path) { return decode_raw(read_file(path)); }

void write_pgm(const std::filesystem::path& path, const DenseArray& image)
{
  if (image.rank() != 2)
    throw ShapeError("write_pgm: image must be 2-D");
  const auto rows = image.shape()[0];
  const auto cols = image.shape()[1];
  std::string out = fmt::format("P5\n{} {}\n255\n", cols, rows);
  out.reserve(out.size() + image.size());
  for (double v : image.values()) {
    const double c = std::clamp(v, 0.0, 1.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(c * 255.0))));
  }
  write_file_atomic(path, out);
}

DenseArray read_pgm(const std::filesystem::path& path)
{
  const std::string bytes = read_file(path);
  std::istringstream header(bytes);
  std::string magic;
  std::size_t cols = 0, rows = 0, maxval = 0;
  header >> magic >> cols >> rows >> maxval;
  if (!header || magic != "P5" || maxval != 255)
    throw IoError(fmt::format("{}: not a P5 PGM with maxval 255", path.string()));
  const auto pos = static_cast<std::size_t>(header.tellg()) + 1; // single whitespace byte
  if (bytes.size() < pos + rows * cols)
    throw IoError(fmt::format("{}: truncated PGM payload", path.string()));
  DenseArray image({rows, cols});
  for (std::size_t i = 0; i < rows * cols; ++i)
    image[i] = static_cast<unsigned char>(bytes[pos + i]) / 255.0;
  return image;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents)
{
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw IoError(fmt::format("cannot open {} for writing", tmp.string()));
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out)
      throw IoError(fmt::format("write to {} failed", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace wcreg::io
