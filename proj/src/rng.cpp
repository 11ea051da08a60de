#include "wcreg/rng.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace wcreg {

namespace {
constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

std::uint64_t fnv1a(std::string_view s)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}
} // namespace

std::uint64_t Rng::mix(std::uint64_t z)
{
  z += kGamma;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng Rng::stream(std::string_view name) const { return Rng(mix(key_ ^ fnv1a(name)), KeyTag{}); }

Rng Rng::stream(std::uint64_t index) const
{
  return Rng(mix(key_ ^ mix(index + 0x632be59bd9b4e019ULL)), KeyTag{});
}

std::uint64_t Rng::next_u64() { return mix(key_ + kGamma * (++counter_)); }

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::size_t Rng::uniform_index(std::size_t n)
{
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r >= limit);
  return static_cast<std::size_t>(r % bound);
}

double Rng::normal()
{
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

DenseArray Rng::uniform_array(const Shape& shape, double lo, double hi)
{
  DenseArray a(shape);
  for (double& v : a.values())
    v = uniform(lo, hi);
  return a;
}

DenseArray Rng::normal_array(const Shape& shape, double stddev)
{
  DenseArray a(shape);
  for (double& v : a.values())
    v = stddev * normal();
  return a;
}

std::vector<std::size_t> Rng::permutation(std::size_t n)
{
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i)
    std::swap(p[i - 1], p[uniform_index(i)]);
  return p;
}

} // namespace wcreg
