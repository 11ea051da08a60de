#pragma once

#include "wcreg/linear_operator.hpp"

#include <ostream>
#include <vector>

namespace wcreg {

/// Compressed-row sparse matrix of ray weights.
struct SparseWeights
{
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_start; // size rows + 1
  std::vector<std::size_t> col_index;
  std::vector<double> weight;

  void multiply(std::span<const double> x, std::span<double> y) const;
  void multiply_transpose(std::span<const double> y, std::span<double> x) const;
  /// Dumps "row,col,weight" lines with a header.
  void write_csv(std::ostream& out) const;
};

/// Toy parallel-beam geometry. The image covers [-1,1]^2 with pixel centres at
/// -1 + (j + 1/2) * 2/n (row index runs along the second coordinate). Detectors are
/// evenly spaced over the image diagonal [-sqrt2, sqrt2]; each ray is sampled at
/// half-pixel steps and every sample spreads its step length over the four nearest
/// pixel centres with bilinear weights.
struct RadonGeometry
{
  std::size_t grid_n = 0;
  std::vector<double> angles;
  std::size_t detectors = 0;

  double pixel_size() const { return 2.0 / static_cast<double>(grid_n); }
  double detector_position(std::size_t d) const;
};

SparseWeights build_radon_weights(const RadonGeometry& geometry);

/// Image (grid_n x grid_n) to sinogram (angles x detectors). The adjoint is the exact
/// transpose of the same weight table.
LinearOperator make_radon(std::size_t grid_n, const std::vector<double>& angles,
                          std::size_t detectors);

/// Evenly spaced angles in [0, pi).
std::vector<double> uniform_angles(std::size_t count);

} // namespace wcreg
