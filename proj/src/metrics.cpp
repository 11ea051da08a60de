#include "wcreg/metrics.hpp"

#include "wcreg/errors.hpp"

#include <cmath>
#include <fmt/format.h>

namespace wcreg {

double psnr(const DenseArray& reference, const DenseArray& test, double peak)
{
  require_same_shape(reference, test, "psnr");
  if (!(peak > 0.0))
    throw ConfigError("psnr: peak must be positive");
  double sse = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - test[i];
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(reference.size());
  if (mse == 0.0)
    return kPsnrIdentical;
  return 10.0 * std::log10(peak * peak / mse);
}

std::vector<double> ssim_gaussian_taps(const SsimParams& params)
{
  std::vector<double> taps(params.window);
  const double c = 0.5 * static_cast<double>(params.window - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < params.window; ++i) {
    const double d = static_cast<double>(i) - c;
    taps[i] = std::exp(-d * d / (2.0 * params.window_sigma * params.window_sigma));
    total += taps[i];
  }
  for (double& t : taps)
    t /= total;
  return taps;
}

namespace {

// Valid-mode separable filtering: output is (rows - w + 1) x (cols - w + 1).
std::vector<double> filter_valid(const std::vector<double>& img, std::size_t rows, std::size_t cols,
                                 const std::vector<double>& taps)
{
  const std::size_t w = taps.size();
  const std::size_t out_cols = cols - w + 1;
  const std::size_t out_rows = rows - w + 1;
  std::vector<double> horiz(rows * out_cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < out_cols; ++c) {
      double s = 0.0;
      for (std::size_t t = 0; t < w; ++t)
        s += taps[t] * img[r * cols + c + t];
      horiz[r * out_cols + c] = s;
    }
  std::vector<double> out(out_rows * out_cols, 0.0);
  for (std::size_t r = 0; r < out_rows; ++r)
    for (std::size_t c = 0; c < out_cols; ++c) {
      double s = 0.0;
      for (std::size_t t = 0; t < w; ++t)
        s += taps[t] * horiz[(r + t) * out_cols + c];
      out[r * out_cols + c] = s;
    }
  return out;
}

} // namespace

double ssim(const DenseArray& reference, const DenseArray& test, double peak,
            const SsimParams& params)
{
  require_same_shape(reference, test, "ssim");
  if (reference.rank() != 2)
    throw ShapeError("ssim: arrays must be 2-D");
  if (!(peak > 0.0))
    throw ConfigError("ssim: peak must be positive");
  const std::size_t rows = reference.shape()[0];
  const std::size_t cols = reference.shape()[1];
  if (rows < params.window || cols < params.window)
    throw ConfigError(fmt::format("ssim: image {}x{} smaller than the {}x{} window", rows, cols,
                                  params.window, params.window));

  const auto taps = ssim_gaussian_taps(params);
  const auto& x = reference.storage();
  const auto& y = test.storage();
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, rows, cols, taps);
  const auto my = filter_valid(y, rows, cols, taps);
  const auto mxx = filter_valid(xx, rows, cols, taps);
  const auto myy = filter_valid(yy, rows, cols, taps);
  const auto mxy = filter_valid(xy, rows, cols, taps);

  const double c1 = (params.k1 * peak) * (params.k1 * peak);
  const double c2 = (params.k2 * peak) * (params.k2 * peak);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = mxx[i] - mx[i] * mx[i];
    const double vy = myy[i] - my[i] * my[i];
    const double cxy = mxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cxy + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / static_cast<double>(mx.size());
}

} // namespace wcreg
