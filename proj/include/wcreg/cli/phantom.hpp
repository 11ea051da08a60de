#pragma once

#include "wcreg/tensor.hpp"

#include <array>
#include <string>

namespace wcreg::cli {

struct Phantom
{
  DenseArray image;
  std::string description;
};

/// One ellipse: intensity, semi-axes (a, b), centre (x0, y0), rotation in degrees.
struct Ellipse
{
  double intensity;
  double a;
  double b;
  double x0;
  double y0;
  double phi_deg;
};

/// Ten-ellipse head table in the high-contrast variant; overlaps sum to values in [0,1].
const std::array<Ellipse, 10>& mini_shepp_table();

/// Sum of all table entries; a cheap guard against edits to the constants.
double mini_shepp_checksum();

/// kind in {discs, bars, mini-shepp}; n >= 16. Row index runs along y (top row is y = 1),
/// column index along x. Values in [0,1].
Phantom make_phantom(const std::string& kind, std::size_t n);

} // namespace wcreg::cli
