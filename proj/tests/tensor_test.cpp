#include "wcreg/array_io.hpp"
#include "wcreg/errors.hpp"
#include "wcreg/linear_operator.hpp"
#include "wcreg/metrics.hpp"
#include "wcreg/mnorm.hpp"
#include "wcreg/rng.hpp"
#include "wcreg/tensor.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace wcreg;

namespace {
// Neumaier-compensated sum of products
double kahan_inner(const DenseArray& u, const DenseArray& v)
{
  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double t = u[i] * v[i];
    const double n = s + t;
    c += std::abs(s) >= std::abs(t) ? (s - n) + t : (t - n) + s;
    s = n;
  }
  return s + c;
}
} // namespace

TEST_CASE("inner product")
{
  CHECK(inner(DenseArray::vector({1, 2}), DenseArray::vector({3, 4})) == 11.0);
  Rng rng(5);
  const DenseArray v = rng.normal_array({7});
  CHECK(inner(DenseArray({7}), v) == 0.0);
  for (int t = 0; t < 20; ++t) {
    const DenseArray a = rng.normal_array({100}), b = rng.normal_array({100});
    const double ref = kahan_inner(a, b);
    CHECK(std::abs(inner(a, b) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
  }
  CHECK_THROWS_AS(inner(DenseArray({3}), DenseArray({4})), ShapeError);
}

TEST_CASE("inner is symmetric and bilinear")
{
  Rng rng(11);
  for (int t = 0; t < 50; ++t) {
    const DenseArray u = rng.normal_array({30}), v = rng.normal_array({30}), w = rng.normal_array({30});
    const double a = rng.normal(), b = rng.normal();
    CHECK(inner(u, v) == doctest::Approx(inner(v, u)).epsilon(1e-12));
    const double lhs = inner(lincomb(a, u, b, v), w);
    const double rhs = a * inner(u, w) + b * inner(v, w);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(a * inner(u, w)) + std::abs(b * inner(v, w)) + 1.0));
  }
}

TEST_CASE("M-norm")
{
  SUBCASE("decoupled")
  {
    const LinearOperator z = make_zero({1}, {1});
    CHECK(m_norm_sq({DenseArray::vector({1}), DenseArray::vector({2})}, 1.0, 1.0, z) == 5.0);
  }
  SUBCASE("zero primal part")
  {
    const LinearOperator a = make_matrix(2, 2, {1, 2, 3, 4});
    const DenseArray y = DenseArray::vector({0.5, -1.5});
    CHECK(m_norm_sq({DenseArray({2}), y}, 0.3, 0.7, a) == doctest::Approx(squared_norm(y) / 0.7));
  }
  SUBCASE("dense 4x4 assembly")
  {
    const double tau = 0.5, sigma = 0.5;
    const LinearOperator a = make_matrix(2, 2, {1, 0, 0, 1});
    // M = [[I/tau, -A^T], [-A, I/sigma]]
    const double m[4][4] = {{1 / tau, 0, -1, 0}, {0, 1 / tau, 0, -1}, {-1, 0, 1 / sigma, 0}, {0, -1, 0, 1 / sigma}};
    const double z[4] = {1, 1, 1, 1};
    double ref = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        ref += z[i] * m[i][j] * z[j];
    CHECK(m_norm_sq({DenseArray::vector({1, 1}), DenseArray::vector({1, 1})}, tau, sigma, a) == doctest::Approx(ref));
  }
  SUBCASE("A = 0 is exact")
  {
    Rng rng(3);
    const DenseArray x = rng.normal_array({5}), y = rng.normal_array({3});
    CHECK(m_norm_sq({x, y}, 0.7, 1.9, make_zero({5}, {3})) == squared_norm(x) / 0.7 + squared_norm(y) / 1.9);
  }
  SUBCASE("nonnegative under the step condition")
  {
    Rng rng(8);
    LinearOperator a = make_matrix(4, 6, rng.normal_array({24}).storage());
    const double na = certify_norm(a).value;
    const double tau = 0.8 / na, sigma = 1.0 / (tau * na * na * (1.0 + 1e-5));
    for (int t = 0; t < 10000; ++t) {
      const ProductPoint z{rng.normal_array({6}), rng.normal_array({4})};
      CHECK(m_norm_sq(z, tau, sigma, a) >= -1e-12 * (squared_norm(z.x) + squared_norm(z.y)));
    }
  }
  CHECK_THROWS_AS(m_norm_sq({DenseArray({1}), DenseArray({1})}, 0.0, 1.0, make_zero({1}, {1})), ConfigError);
}

TEST_CASE("psnr")
{
  const DenseArray a({8, 8}, 0.5);
  CHECK(psnr(a, a) == kPsnrIdentical);
  CHECK(psnr(a, DenseArray({8, 8}, 0.6)) == doctest::Approx(20.0).epsilon(1e-12));
  Rng rng(2);
  const DenseArray r = rng.uniform_array({16, 16}, 0, 1), t = rng.uniform_array({16, 16}, 0, 1);
  double mse = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    mse += (r[i] - t[i]) * (r[i] - t[i]);
  mse /= static_cast<double>(r.size());
  CHECK(std::abs(psnr(r, t) - 10.0 * std::log10(1.0 / mse)) <= 1e-10);
  CHECK(psnr(r, t) == psnr(t, r));
  CHECK_THROWS_AS(psnr(r, DenseArray({4, 4})), ShapeError);
}

namespace {
// plain-loop SSIM with the standard constants
double ssim_reference(const DenseArray& x, const DenseArray& y)
{
  const int w = 11, h = 5, n = static_cast<int>(x.shape()[0]), m = static_cast<int>(x.shape()[1]);
  double g[11], gs = 0.0;
  for (int i = 0; i < w; ++i) {
    g[i] = std::exp(-0.5 * (i - h) * (i - h) / (1.5 * 1.5));
    gs += g[i];
  }
  const double c1 = 1e-4, c2 = 9e-4;
  double total = 0.0;
  int count = 0;
  for (int r = 0; r + w <= n; ++r)
    for (int c = 0; c + w <= m; ++c) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int i = 0; i < w; ++i)
        for (int j = 0; j < w; ++j) {
          const double k = g[i] * g[j] / (gs * gs);
          const double a = x.at(r + i, c + j), b = y.at(r + i, c + j);
          mx += k * a;
          my += k * b;
          sxx += k * a * a;
          syy += k * b * b;
          sxy += k * a * b;
        }
      sxx -= mx * mx;
      syy -= my * my;
      sxy -= mx * my;
      total += (2 * mx * my + c1) * (2 * sxy + c2) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
      ++count;
    }
  return total / count;
}
} // namespace

TEST_CASE("ssim")
{
  Rng rng(4);
  const DenseArray a = rng.uniform_array({16, 16}, 0, 1);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ssim(a, DenseArray({16, 16})) < 1.0);
  DenseArray b = a;
  for (auto& v : b.values())
    v = std::clamp(v + 0.1 * rng.normal(), 0.0, 1.0);
  CHECK(std::abs(ssim(a, b) - ssim_reference(a, b)) <= 1e-6);
  CHECK_THROWS_AS(ssim(DenseArray({8, 8}), DenseArray({8, 8})), ConfigError);
}

TEST_CASE("raw and pgm round trips")
{
  Rng rng(1);
  const DenseArray a = rng.normal_array({3, 4, 2});
  const std::string bytes = io::encode_raw(a);
  CHECK(bytes.substr(0, 8) == std::string("WCREG\0v1", 8));
  CHECK(io::decode_raw(bytes) == a);
  CHECK_THROWS(io::decode_raw(bytes.substr(0, bytes.size() - 1)));

  const auto dir = std::filesystem::temp_directory_path() / "wcreg_io_test";
  std::filesystem::create_directories(dir);
  io::write_raw(dir / "a.raw", a);
  CHECK(io::read_raw(dir / "a.raw") == a);
  DenseArray img({5, 7});
  for (std::size_t i = 0; i < img.size(); ++i)
    img[i] = static_cast<double>(i % 6) / 5.0;
  io::write_pgm(dir / "a.pgm", img);
  const DenseArray back = io::read_pgm(dir / "a.pgm");
  CHECK(back.shape() == img.shape());
  CHECK(max_abs(back - img) <= 0.5 / 255.0 + 1e-12);
  std::filesystem::remove_all(dir);
}

TEST_CASE("rng streams are independent of consumers")
{
  Rng a(42), b(42);
  const double first = a.stream("x").uniform();
  (void)b.stream("y").uniform();
  CHECK(b.stream("x").uniform() == first);
  CHECK(Rng(42).stream("x").next_u64() != Rng(42).stream("y").next_u64());
}
