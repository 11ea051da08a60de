#pragma once

#include "wcreg/learn/training.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <numbers>
#include <vector>

namespace wcreg::learn {

/// Distance to a manifold sampled densely in the plane (brute-force nearest point).
class ManifoldOracle
{
public:
  ManifoldOracle() = default;
  ManifoldOracle(std::vector<std::array<double, 2>> points, double pitch)
    : points_(std::move(points)), pitch_(pitch)
  {
  }

  double distance(double x, double y) const;
  /// Largest gap between consecutive points of the discretisation.
  double pitch() const { return pitch_; }
  const std::vector<std::array<double, 2>>& points() const { return points_; }

private:
  std::vector<std::array<double, 2>> points_;
  double pitch_ = 0.0;
};

/// Arm radius r(t) = a + b t for t in [t_min, t_max]; the second arm is rotated by pi.
struct SpiralShape
{
  double a = 0.5;
  double b = 0.25;
  double t_min = 0.5 * std::numbers::pi;
  double t_max = 2.5 * std::numbers::pi;
  std::size_t dense_per_arm = 10000;

  std::array<double, 2> point(int arm, double t) const;
};

struct SpiralFixture
{
  Batch real;
  Batch noisy;
  ManifoldOracle oracle;
};

/// n_per_arm points per arm at uniform random t, plus the same points with Gaussian
/// noise of standard deviation noise_sigma.
SpiralFixture spiral_fixture(std::size_t n_per_arm, double noise_sigma, std::uint64_t seed,
                             const SpiralShape& shape = {});

struct GridBox
{
  double x_lo = -3.0;
  double x_hi = 3.0;
  double y_lo = -3.0;
  double y_hi = 3.0;
};

struct AlignmentReport
{
  /// Pearson correlation of R and d_M over the grid (0 when R is constant)
  double correlation = 0.0;
  /// sup |a + b R - d_M| for the least-squares fit with b >= 0
  double sup_error = 0.0;
  double a = 0.0;
  double b = 0.0;
  std::size_t points = 0;
};

/// Evaluates R and d_M on a grid_n x grid_n grid of cell centres in the box.
AlignmentReport distance_alignment(const std::function<double(const Vec&)>& regulariser,
                                   const ManifoldOracle& oracle, const GridBox& box,
                                   std::size_t grid_n);

} // namespace wcreg::learn
