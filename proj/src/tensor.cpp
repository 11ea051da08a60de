#include "wcreg/tensor.hpp"

#include "wcreg/errors.hpp"

#include <cmath>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace wcreg {

std::size_t shape_size(const Shape& shape)
{
  std::size_t n = 1;
  for (auto e : shape)
    n *= e;
  return n;
}

std::string shape_string(const Shape& shape)
{
  return fmt::format("[{}]", fmt::join(shape, "x"));
}

namespace {
void validate_shape(const Shape& shape)
{
  if (shape.empty())
    throw ShapeError("array shape must have at least one extent");
  for (auto e : shape)
    if (e == 0)
      throw ShapeError(fmt::format("array extents must be positive, got {}", shape_string(shape)));
}
} // namespace

DenseArray::DenseArray(Shape shape, double fill)
  : shape_(std::move(shape))
{
  validate_shape(shape_);
  data_.assign(shape_size(shape_), fill);
}

DenseArray::DenseArray(Shape shape, std::vector<double> data)
  : shape_(std::move(shape)), data_(std::move(data))
{
  validate_shape(shape_);
  if (data_.size() != shape_size(shape_))
    throw ShapeError(fmt::format("data length {} does not match shape {}", data_.size(),
                                 shape_string(shape_)));
}

DenseArray DenseArray::vector(std::initializer_list<double> values)
{
  return DenseArray({values.size()}, std::vector<double>(values));
}

DenseArray DenseArray::vector(std::vector<double> values)
{
  const auto n = values.size();
  return DenseArray({n}, std::move(values));
}

bool DenseArray::all_finite() const noexcept
{
  for (double v : data_)
    if (!std::isfinite(v))
      return false;
  return true;
}

DenseArray DenseArray::reshaped(Shape shape) const
{
  return DenseArray(std::move(shape), data_);
}

DenseArray& DenseArray::operator+=(const DenseArray& other)
{
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i)
    data_[i] += other.data_[i];
  return *this;
}

DenseArray& DenseArray::operator-=(const DenseArray& other)
{
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i)
    data_[i] -= other.data_[i];
  return *this;
}

DenseArray& DenseArray::operator*=(double s) noexcept
{
  for (double& v : data_)
    v *= s;
  return *this;
}

DenseArray operator+(DenseArray a, const DenseArray& b) { return a += b; }
DenseArray operator-(DenseArray a, const DenseArray& b) { return a -= b; }
DenseArray operator*(double s, DenseArray a) { return a *= s; }
DenseArray operator-(DenseArray a) { return a *= -1.0; }

void require_same_shape(const DenseArray& u, const DenseArray& v, const char* what)
{
  if (u.shape() != v.shape())
    throw ShapeError(fmt::format("{}: shape mismatch {} vs {}", what, shape_string(u.shape()),
                                 shape_string(v.shape())));
}

double inner(const DenseArray& u, const DenseArray& v)
{
  require_same_shape(u, v, "inner");
  double s = 0.0;
  const auto a = u.values();
  const auto b = v.values();
  for (std::size_t i = 0; i < a.size(); ++i)
    s += a[i] * b[i];
  return s;
}

double squared_norm(const DenseArray& u)
{
  double s = 0.0;
  for (double v : u.values())
    s += v * v;
  return s;
}

double norm(const DenseArray& u) { return std::sqrt(squared_norm(u)); }

double distance(const DenseArray& u, const DenseArray& v)
{
  require_same_shape(u, v, "distance");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double max_abs(const DenseArray& u)
{
  double m = 0.0;
  for (double v : u.values())
    m = std::max(m, std::abs(v));
  return m;
}

void axpy(double a, const DenseArray& x, DenseArray& y)
{
  require_same_shape(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i)
    y[i] += a * x[i];
}

DenseArray lincomb(double a, const DenseArray& x, double b, const DenseArray& y)
{
  require_same_shape(x, y, "lincomb");
  DenseArray out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = a * x[i] + b * y[i];
  return out;
}

} // namespace wcreg
