#include "wcreg/radon.hpp"

#include "wcreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

namespace wcreg {

void SparseWeights::multiply(std::span<const double> x, std::span<double> y) const
{
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t k = row_start[r]; k < row_start[r + 1]; ++k)
      s += weight[k] * x[col_index[k]];
    y[r] = s;
  }
}

void SparseWeights::multiply_transpose(std::span<const double> y, std::span<double> x) const
{
  std::fill(x.begin(), x.end(), 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = row_start[r]; k < row_start[r + 1]; ++k)
      x[col_index[k]] += weight[k] * y[r];
}

void SparseWeights::write_csv(std::ostream& out) const
{
  out << "row,col,weight\n";
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = row_start[r]; k < row_start[r + 1]; ++k)
      out << fmt::format("{},{},{:.17g}\n", r, col_index[k], weight[k]);
}

double RadonGeometry::detector_position(std::size_t d) const
{
  const double span = 2.0 * std::numbers::sqrt2;
  return -std::numbers::sqrt2 + (static_cast<double>(d) + 0.5) * span /
                                  static_cast<double>(detectors);
}

SparseWeights build_radon_weights(const RadonGeometry& g)
{
  if (g.grid_n < 8)
    throw ConfigError(fmt::format("make_radon: grid_n must be >= 8, got {}", g.grid_n));
  if (g.angles.empty())
    throw ConfigError("make_radon: need at least one angle");
  if (g.detectors == 0)
    throw ConfigError("make_radon: need at least one detector");

  const std::size_t n = g.grid_n;
  const double h = g.pixel_size();
  const double dt = 0.5 * h;
  const double half_len = std::numbers::sqrt2;
  const auto samples = static_cast<std::size_t>(std::ceil(2.0 * half_len / dt));

  SparseWeights w;
  w.rows = g.angles.size() * g.detectors;
  w.cols = n * n;
  w.row_start.reserve(w.rows + 1);
  w.row_start.push_back(0);

  std::vector<double> scratch(w.cols, 0.0);
  std::vector<std::size_t> touched;
  std::vector<char> mark(w.cols, 0);

  auto deposit = [&](long row, long col, double value) {
    if (row < 0 || col < 0 || row >= static_cast<long>(n) || col >= static_cast<long>(n) ||
        value == 0.0)
      return;
    const auto idx = static_cast<std::size_t>(row) * n + static_cast<std::size_t>(col);
    if (!mark[idx]) {
      mark[idx] = 1;
      touched.push_back(idx);
    }
    scratch[idx] += value;
  };

  for (double theta : g.angles) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (std::size_t d = 0; d < g.detectors; ++d) {
      const double offset = g.detector_position(d);
      for (std::size_t q = 0; q < samples; ++q) {
        const double t = -half_len + (static_cast<double>(q) + 0.5) * dt;
        const double px = offset * c - t * s;
        const double py = offset * s + t * c;
        // continuous pixel coordinates: column along px, row along py
        const double u = (px + 1.0) / h - 0.5;
        const double v = (py + 1.0) / h - 0.5;
        const double fu = std::floor(u);
        const double fv = std::floor(v);
        const double au = u - fu;
        const double av = v - fv;
        const long j0 = static_cast<long>(fu);
        const long i0 = static_cast<long>(fv);
        deposit(i0, j0, dt * (1.0 - av) * (1.0 - au));
        deposit(i0, j0 + 1, dt * (1.0 - av) * au);
        deposit(i0 + 1, j0, dt * av * (1.0 - au));
        deposit(i0 + 1, j0 + 1, dt * av * au);
      }
      std::sort(touched.begin(), touched.end());
      for (auto idx : touched) {
        w.col_index.push_back(idx);
        w.weight.push_back(scratch[idx]);
        scratch[idx] = 0.0;
        mark[idx] = 0;
      }
      touched.clear();
      w.row_start.push_back(w.col_index.size());
    }
  }
  return w;
}

LinearOperator make_radon(std::size_t grid_n, const std::vector<double>& angles,
                          std::size_t detectors)
{
  RadonGeometry geometry{grid_n, angles, detectors};
  auto table = std::make_shared<const SparseWeights>(build_radon_weights(geometry));
  const Shape domain{grid_n, grid_n};
  const Shape range{angles.size(), detectors};
  auto apply = [table, range](const DenseArray& x) {
    DenseArray y(range);
    table->multiply(x.values(), y.values());
    return y;
  };
  auto adjoint = [table, domain](const DenseArray& y) {
    DenseArray x(domain);
    table->multiply_transpose(y.values(), x.values());
    return x;
  };
  return LinearOperator(fmt::format("radon{}x{}", angles.size(), detectors), domain, range, apply,
                        adjoint);
}

std::vector<double> uniform_angles(std::size_t count)
{
  std::vector<double> a(count);
  for (std::size_t i = 0; i < count; ++i)
    a[i] = std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
  return a;
}

} // namespace wcreg
