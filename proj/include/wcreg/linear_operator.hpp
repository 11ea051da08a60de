#pragma once

#include "wcreg/tensor.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace wcreg {

struct NormEstimate
{
  double value = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

/// A bounded linear map A: X -> Y together with its adjoint A*.
///
/// Application is pure; copies share the (immutable) implementation. A cached
/// norm estimate can be attached; solvers refuse to run without a converged one.
class LinearOperator
{
public:
  using Map = std::function<DenseArray(const DenseArray&)>;

  LinearOperator(std::string name, Shape domain, Shape range, Map apply, Map adjoint);

  const std::string& name() const noexcept { return name_; }
  const Shape& domain_shape() const noexcept { return domain_; }
  const Shape& range_shape() const noexcept { return range_; }

  DenseArray apply(const DenseArray& x) const;
  DenseArray adjoint(const DenseArray& y) const;

  const std::optional<NormEstimate>& norm_estimate() const noexcept { return norm_; }
  void set_norm_estimate(NormEstimate estimate) { norm_ = estimate; }
  /// Value of a converged estimate; throws ConfigError when none is attached.
  double certified_norm() const;

private:
  std::string name_;
  Shape domain_;
  Shape range_;
  std::shared_ptr<const Map> apply_;
  std::shared_ptr<const Map> adjoint_;
  std::optional<NormEstimate> norm_;
};

LinearOperator make_identity(const Shape& shape);
LinearOperator make_zero(const Shape& domain, const Shape& range);
LinearOperator make_scaled(const LinearOperator& op, double factor);

/// Dense row-major matrix acting on rank-1 arrays.
LinearOperator make_matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

enum class Boundary
{
  zero,
  periodic
};

/// Discrete convolution with an odd-extent kernel (rank 1 or 2) centred on its middle tap.
/// The adjoint is correlation with the same kernel under the same boundary rule.
LinearOperator make_convolution(const DenseArray& kernel, Boundary boundary, const Shape& signal);

/// Restriction to the entries where mask is nonzero; the adjoint zero-fills.
LinearOperator make_subsample(const DenseArray& mask);

/// B after A, i.e. x -> B(A(x)).
LinearOperator compose(const LinearOperator& b, const LinearOperator& a);

/// Normalised sampled Gaussian kernel with `taps` entries.
DenseArray gaussian_kernel_1d(std::size_t taps, double stddev);

/// Worst |<Au,w> - <u,A*w>| / (|Au||w| + |u||A*w|) over random Gaussian probes.
double adjoint_test(const LinearOperator& op, std::size_t trials, std::uint64_t seed);

struct PowerMethodOptions
{
  std::size_t max_iters = 1000;
  double tol = 1e-10;
  std::uint64_t seed = 0;
};

/// Power iteration on A*A. The returned value is the running maximum of |A v_k| over
/// unit iterates v_k (nondecreasing); converged when successive estimates differ by
/// less than tol relative.
NormEstimate operator_norm(const LinearOperator& op, const PowerMethodOptions& options = {});

/// Computes and attaches a norm estimate; returns it.
NormEstimate certify_norm(LinearOperator& op, const PowerMethodOptions& options = {});

/// Columns of A as a dense row-major (range size) x (domain size) matrix.
std::vector<double> assemble_dense(const LinearOperator& op);

} // namespace wcreg
