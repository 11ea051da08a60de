#pragma once

#include "wcreg/tensor.hpp"

#include <limits>

namespace wcreg {

/// Returned by psnr when the two images are identical.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// Peak signal-to-noise ratio in dB: 10 log10(peak^2 / MSE).
double psnr(const DenseArray& reference, const DenseArray& test, double peak = 1.0);

/// SSIM constants. Gaussian window 11x11 with std 1.5, C1 = (0.01 peak)^2,
/// C2 = (0.03 peak)^2. Only windows lying fully inside the image are averaged.
struct SsimParams
{
  std::size_t window = 11;
  double window_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Normalised 1-D Gaussian taps used by ssim (the 2-D window is their outer product).
std::vector<double> ssim_gaussian_taps(const SsimParams& params = {});

/// Mean structural similarity of two rank-2 arrays.
double ssim(const DenseArray& reference, const DenseArray& test, double peak = 1.0,
            const SsimParams& params = {});

} // namespace wcreg
