#include "wcreg/learn/spiral.hpp"

#include "wcreg/errors.hpp"
#include "wcreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace wcreg::learn {

double ManifoldOracle::distance(double x, double y) const
{
  if (points_.empty())
    throw ConfigError("manifold oracle: no points");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : points_) {
    const double dx = p[0] - x, dy = p[1] - y;
    best = std::min(best, dx * dx + dy * dy);
  }
  return std::sqrt(best);
}

std::array<double, 2> SpiralShape::point(int arm, double t) const
{
  const double r = a + b * t;
  const double phase = t + (arm == 0 ? 0.0 : std::numbers::pi);
  return {r * std::cos(phase), r * std::sin(phase)};
}

SpiralFixture spiral_fixture(std::size_t n_per_arm, double noise_sigma, std::uint64_t seed,
                             const SpiralShape& shape)
{
  if (n_per_arm < 1)
    throw ConfigError("spiral_fixture: n_per_arm must be at least 1");
  if (!(noise_sigma >= 0.0))
    throw ConfigError("spiral_fixture: noise_sigma must be nonnegative");
  if (!(shape.t_max > shape.t_min) || shape.dense_per_arm < 2)
    throw ConfigError("spiral_fixture: bad spiral shape");

  SpiralFixture f;
  Rng rs = Rng(seed).stream("spiral_samples");
  Rng rn = Rng(seed).stream("spiral_noise");
  for (int arm = 0; arm < 2; ++arm) {
    for (std::size_t i = 0; i < n_per_arm; ++i) {
      const auto p = shape.point(arm, rs.uniform(shape.t_min, shape.t_max));
      f.real.push_back({p[0], p[1]});
      Vec q{p[0], p[1]};
      if (noise_sigma > 0.0) {
        q[0] += noise_sigma * rn.normal();
        q[1] += noise_sigma * rn.normal();
      }
      f.noisy.push_back(q);
    }
  }

  std::vector<std::array<double, 2>> dense;
  dense.reserve(2 * shape.dense_per_arm);
  double pitch = 0.0;
  const double dt = (shape.t_max - shape.t_min) / static_cast<double>(shape.dense_per_arm - 1);
  for (int arm = 0; arm < 2; ++arm) {
    for (std::size_t i = 0; i < shape.dense_per_arm; ++i) {
      dense.push_back(shape.point(arm, shape.t_min + dt * static_cast<double>(i)));
      if (i > 0) {
        const auto& p = dense[dense.size() - 2];
        const auto& q = dense.back();
        pitch = std::max(pitch, std::hypot(p[0] - q[0], p[1] - q[1]));
      }
    }
  }
  f.oracle = ManifoldOracle(std::move(dense), pitch);
  return f;
}

AlignmentReport distance_alignment(const std::function<double(const Vec&)>& regulariser,
                                   const ManifoldOracle& oracle, const GridBox& box,
                                   std::size_t grid_n)
{
  if (grid_n < 16)
    throw ConfigError(fmt::format("distance_alignment: grid_n must be at least 16, got {}", grid_n));
  if (!(box.x_hi > box.x_lo) || !(box.y_hi > box.y_lo))
    throw ConfigError("distance_alignment: empty box");
  const std::size_t n = grid_n * grid_n;
  Vec r(n), d(n);
  const double hx = (box.x_hi - box.x_lo) / static_cast<double>(grid_n);
  const double hy = (box.y_hi - box.y_lo) / static_cast<double>(grid_n);
  for (std::size_t i = 0; i < grid_n; ++i) {
    for (std::size_t j = 0; j < grid_n; ++j) {
      const double x = box.x_lo + (static_cast<double>(j) + 0.5) * hx;
      const double y = box.y_lo + (static_cast<double>(i) + 0.5) * hy;
      r[i * grid_n + j] = regulariser({x, y});
      d[i * grid_n + j] = oracle.distance(x, y);
    }
  }

  AlignmentReport rep;
  rep.points = n;
  double mr = 0.0, md = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mr += r[k];
    md += d[k];
  }
  mr /= static_cast<double>(n);
  md /= static_cast<double>(n);
  double srr = 0.0, srd = 0.0, sdd = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    srr += (r[k] - mr) * (r[k] - mr);
    srd += (r[k] - mr) * (d[k] - md);
    sdd += (d[k] - md) * (d[k] - md);
  }
  // constant R (up to rounding) carries no information
  const bool degenerate = !(srr > 1e-24 * static_cast<double>(n) * (1.0 + mr * mr));
  rep.correlation = degenerate || sdd == 0.0 ? 0.0 : srd / std::sqrt(srr * sdd);
  rep.b = degenerate ? 0.0 : std::max(0.0, srd / srr);
  rep.a = md - rep.b * mr;
  for (std::size_t k = 0; k < n; ++k)
    rep.sup_error = std::max(rep.sup_error, std::abs(rep.a + rep.b * r[k] - d[k]));
  return rep;
}

} // namespace wcreg::learn
