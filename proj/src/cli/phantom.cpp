#include "wcreg/cli/phantom.hpp"

#include "wcreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

namespace wcreg::cli {

const std::array<Ellipse, 10>& mini_shepp_table()
{
  static const std::array<Ellipse, 10> table = {{
    {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
    {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
    {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},
    {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
    {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
    {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
    {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
    {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
    {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
    {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
  }};
  return table;
}

double mini_shepp_checksum()
{
  double s = 0.0;
  for (const auto& e : mini_shepp_table())
    s += e.intensity + e.a + e.b + e.x0 + e.y0 + e.phi_deg;
  return s;
}

namespace {
// pixel centre coordinates in [-1,1]^2, exactly antisymmetric about the centre
double coord_x(std::size_t j, std::size_t n)
{
  return (2.0 * static_cast<double>(j) + 1.0 - static_cast<double>(n)) / static_cast<double>(n);
}
double coord_y(std::size_t i, std::size_t n) { return -coord_x(i, n); }
} // namespace

Phantom make_phantom(const std::string& kind, std::size_t n)
{
  if (n < 16)
    throw ConfigError(fmt::format("phantom: n must be at least 16, got {}", n));
  Phantom p;
  p.image = DenseArray({n, n});
  if (kind == "mini-shepp") {
    p.description = "ten-ellipse head phantom";
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double x = coord_x(j, n), y = coord_y(i, n);
        double v = 0.0;
        for (const auto& e : mini_shepp_table()) {
          const double phi = e.phi_deg * std::numbers::pi / 180.0;
          const double c = std::cos(phi), s = std::sin(phi);
          const double u = (x - e.x0) * c + (y - e.y0) * s;
          const double w = -(x - e.x0) * s + (y - e.y0) * c;
          if ((u * u) / (e.a * e.a) + (w * w) / (e.b * e.b) <= 1.0)
            v += e.intensity;
        }
        p.image.at(i, j) = v;
      }
  } else if (kind == "discs") {
    p.description = "five discs on a zero background";
    struct Disc
    {
      double x0, y0, r, v;
    };
    static const Disc discs[] = {{-0.45, 0.45, 0.25, 1.0},
                                 {0.45, 0.45, 0.2, 0.6},
                                 {-0.45, -0.45, 0.2, 0.8},
                                 {0.45, -0.45, 0.25, 0.4},
                                 {0.0, 0.0, 0.15, 0.7}};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double x = coord_x(j, n), y = coord_y(i, n);
        double v = 0.0;
        for (const auto& d : discs)
          if ((x - d.x0) * (x - d.x0) + (y - d.y0) * (y - d.y0) <= d.r * d.r)
            v = std::max(v, d.v);
        p.image.at(i, j) = v;
      }
  } else if (kind == "bars") {
    p.description = "vertical bars mirrored about the centre column";
    // half-widths and levels of bars centred at +-x_c; the centre bar sits at x = 0
    struct Bar
    {
      double xc, half, v;
    };
    static const Bar bars[] = {{0.0, 0.08, 1.0}, {0.3, 0.06, 0.7}, {0.55, 0.05, 0.5}, {0.78, 0.04, 0.3}};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double x = std::abs(coord_x(j, n)), y = coord_y(i, n);
        double v = 0.0;
        if (std::abs(y) <= 0.7)
          for (const auto& b : bars)
            if (std::abs(x - b.xc) <= b.half)
              v = b.v;
        p.image.at(i, j) = v;
      }
  } else {
    throw ConfigError(fmt::format("phantom: unknown kind '{}' (discs, bars, mini-shepp)", kind));
  }
  for (auto& v : p.image.values())
    v = std::clamp(v, 0.0, 1.0);
  return p;
}

} // namespace wcreg::cli
