#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace wcreg {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Flat row-major array of doubles with shape metadata.
///
/// Carrier for images, sinograms, signals and network inputs. Every extent is
/// positive and data().size() always equals the product of the extents.
class DenseArray
{
public:
  DenseArray() = default;
  explicit DenseArray(Shape shape, double fill = 0.0);
  DenseArray(Shape shape, std::vector<double> data);

  /// Rank-1 array holding the given values.
  static DenseArray vector(std::initializer_list<double> values);
  static DenseArray vector(std::vector<double> values);
  static DenseArray zeros_like(const DenseArray& other) { return DenseArray(other.shape_); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::vector<double>& storage() noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Row-major 2-D access; rank must be 2.
  double& at(std::size_t row, std::size_t col) { return data_[row * shape_[1] + col]; }
  double at(std::size_t row, std::size_t col) const { return data_[row * shape_[1] + col]; }

  bool all_finite() const noexcept;
  DenseArray reshaped(Shape shape) const;

  DenseArray& operator+=(const DenseArray& other);
  DenseArray& operator-=(const DenseArray& other);
  DenseArray& operator*=(double s) noexcept;

  friend bool operator==(const DenseArray&, const DenseArray&) = default;

private:
  Shape shape_;
  std::vector<double> data_;
};

DenseArray operator+(DenseArray a, const DenseArray& b);
DenseArray operator-(DenseArray a, const DenseArray& b);
DenseArray operator*(double s, DenseArray a);
DenseArray operator-(DenseArray a);

/// Throws ShapeError naming `what` when the shapes differ.
void require_same_shape(const DenseArray& u, const DenseArray& v, const char* what);

/// Hilbert inner product, summed left to right.
double inner(const DenseArray& u, const DenseArray& v);
double squared_norm(const DenseArray& u);
double norm(const DenseArray& u);
double distance(const DenseArray& u, const DenseArray& v);
double max_abs(const DenseArray& u);

/// y += a * x
void axpy(double a, const DenseArray& x, DenseArray& y);
/// a * x + b * y
DenseArray lincomb(double a, const DenseArray& x, double b, const DenseArray& y);

/// Primal-dual pair z = (x, y).
struct ProductPoint
{
  DenseArray x;
  DenseArray y;

  friend bool operator==(const ProductPoint&, const ProductPoint&) = default;
};

} // namespace wcreg
