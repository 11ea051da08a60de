#pragma once

#include "wcreg/tensor.hpp"

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

namespace wcreg::io {

/// Magic prefix of the raw array format.
inline constexpr std::array<char, 8> kRawMagic = {'W', 'C', 'R', 'E', 'G', '\0', 'v', '1'};

/// Raw array layout: magic, u32 rank, rank x u32 extents, row-major f64 payload,
/// everything little-endian.
std::string encode_raw(const DenseArray& array);
DenseArray decode_raw(std::string_view bytes);

void write_raw(const std::filesystem::path& path, const DenseArray& array);
DenseArray read_raw(const std::filesystem::path& path);

/// Binary PGM (P5, maxval 255). Values are clamped to [0,1] and mapped linearly to [0,255].
void write_pgm(const std::filesystem::path& path, const DenseArray& image);
DenseArray read_pgm(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

} // namespace wcreg::io
