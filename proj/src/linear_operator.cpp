#include "wcreg/linear_operator.hpp"

#include "wcreg/errors.hpp"
#include "wcreg/rng.hpp"

#include <cmath>
#include <fmt/format.h>

namespace wcreg {

LinearOperator::LinearOperator(std::string name, Shape domain, Shape range, Map apply, Map adjoint)
  : name_(std::move(name)),
    domain_(std::move(domain)),
    range_(std::move(range)),
    apply_(std::make_shared<const Map>(std::move(apply))),
    adjoint_(std::make_shared<const Map>(std::move(adjoint)))
{
}

DenseArray LinearOperator::apply(const DenseArray& x) const
{
  if (x.shape() != domain_)
    throw ShapeError(fmt::format("{}: apply expects {}, got {}", name_, shape_string(domain_),
                                 shape_string(x.shape())));
  return (*apply_)(x);
}

DenseArray LinearOperator::adjoint(const DenseArray& y) const
{
  if (y.shape() != range_)
    throw ShapeError(fmt::format("{}: adjoint expects {}, got {}", name_, shape_string(range_),
                                 shape_string(y.shape())));
  return (*adjoint_)(y);
}

double LinearOperator::certified_norm() const
{
  if (!norm_ || !norm_->converged)
    throw ConfigError(fmt::format("{}: no converged operator norm estimate attached", name_));
  return norm_->value;
}

LinearOperator make_identity(const Shape& shape)
{
  auto id = [](const DenseArray& x) { return x; };
  LinearOperator op("identity", shape, shape, id, id);
  op.set_norm_estimate({1.0, true, 0});
  return op;
}

LinearOperator make_zero(const Shape& domain, const Shape& range)
{
  LinearOperator op(
    "zero", domain, range, [range](const DenseArray&) { return DenseArray(range); },
    [domain](const DenseArray&) { return DenseArray(domain); });
  op.set_norm_estimate({0.0, true, 0});
  return op;
}

LinearOperator make_scaled(const LinearOperator& op, double factor)
{
  LinearOperator out(
    fmt::format("{}*{}", factor, op.name()), op.domain_shape(), op.range_shape(),
    [op, factor](const DenseArray& x) { return factor * op.apply(x); },
    [op, factor](const DenseArray& y) { return factor * op.adjoint(y); });
  if (op.norm_estimate()) {
    auto est = *op.norm_estimate();
    est.value *= std::abs(factor);
    out.set_norm_estimate(est);
  }
  return out;
}

LinearOperator make_matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
{
  if (entries.size() != rows * cols)
    throw ShapeError(fmt::format("make_matrix: {} entries for a {}x{} matrix", entries.size(),
                                 rows, cols));
  auto m = std::make_shared<const std::vector<double>>(std::move(entries));
  auto apply = [m, rows, cols](const DenseArray& x) {
    DenseArray y({rows});
    for (std::size_t i = 0; i < rows; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols; ++j)
        s += (*m)[i * cols + j] * x[j];
      y[i] = s;
    }
    return y;
  };
  auto adjoint = [m, rows, cols](const DenseArray& y) {
    DenseArray x({cols});
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j)
        x[j] += (*m)[i * cols + j] * y[i];
    return x;
  };
  return LinearOperator(fmt::format("matrix{}x{}", rows, cols), {cols}, {rows}, apply, adjoint);
}

namespace {

// Index of i + offset under the boundary rule, or -1 when it falls outside (zero boundary).
inline long wrap(long i, long n, Boundary boundary)
{
  if (i >= 0 && i < n)
    return i;
  if (boundary == Boundary::zero)
    return -1;
  i %= n;
  return i < 0 ? i + n : i;
}

} // namespace

LinearOperator make_convolution(const DenseArray& kernel, Boundary boundary, const Shape& signal)
{
  if (kernel.rank() != signal.size() || (kernel.rank() != 1 && kernel.rank() != 2))
    throw ConfigError("make_convolution: kernel and signal must both be rank 1 or both rank 2");
  for (auto e : kernel.shape())
    if (e % 2 == 0)
      throw ConfigError(fmt::format("make_convolution: kernel extents must be odd, got {}",
                                    shape_string(kernel.shape())));

  // Treat rank 1 as a single-row image so one loop nest serves both.
  const long krows = kernel.rank() == 2 ? static_cast<long>(kernel.shape()[0]) : 1;
  const long kcols = static_cast<long>(kernel.shape().back());
  const long rows = signal.size() == 2 ? static_cast<long>(signal[0]) : 1;
  const long cols = static_cast<long>(signal.back());
  const long cr = krows / 2;
  const long cc = kcols / 2;
  auto k = std::make_shared<const DenseArray>(kernel);

  // (Ax)[r,c] = sum_{i,j} k[i,j] x[r - (i - cr), c - (j - cc)]
  auto apply = [=](const DenseArray& x) {
    DenseArray y(signal);
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c) {
        double s = 0.0;
        for (long i = 0; i < krows; ++i) {
          const long rr = wrap(r - (i - cr), rows, boundary);
          if (rr < 0)
            continue;
          for (long j = 0; j < kcols; ++j) {
            const long cc2 = wrap(c - (j - cc), cols, boundary);
            if (cc2 < 0)
              continue;
            s += (*k)[static_cast<std::size_t>(i * kcols + j)] *
                 x[static_cast<std::size_t>(rr * cols + cc2)];
          }
        }
        y[static_cast<std::size_t>(r * cols + c)] = s;
      }
    return y;
  };
  // (A*y)[r,c] = sum_{i,j} k[i,j] y[r + (i - cr), c + (j - cc)]
  auto adjoint = [=](const DenseArray& y) {
    DenseArray x(signal);
    for (long r = 0; r < rows; ++r)
      for (long c = 0; c < cols; ++c) {
        double s = 0.0;
        for (long i = 0; i < krows; ++i) {
          const long rr = wrap(r + (i - cr), rows, boundary);
          if (rr < 0)
            continue;
          for (long j = 0; j < kcols; ++j) {
            const long cc2 = wrap(c + (j - cc), cols, boundary);
            if (cc2 < 0)
              continue;
            s += (*k)[static_cast<std::size_t>(i * kcols + j)] *
                 y[static_cast<std::size_t>(rr * cols + cc2)];
          }
        }
        x[static_cast<std::size_t>(r * cols + c)] = s;
      }
    return x;
  };
  return LinearOperator(fmt::format("convolution{}", shape_string(kernel.shape())), signal, signal,
                        apply, adjoint);
}

LinearOperator make_subsample(const DenseArray& mask)
{
  auto kept = std::make_shared<std::vector<std::size_t>>();
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i] != 0.0)
      kept->push_back(i);
  if (kept->empty())
    throw ConfigError("make_subsample: mask keeps no entries");
  const Shape domain = mask.shape();
  const Shape range{kept->size()};
  auto apply = [kept, range](const DenseArray& x) {
    DenseArray y(range);
    for (std::size_t i = 0; i < kept->size(); ++i)
      y[i] = x[(*kept)[i]];
    return y;
  };
  auto adjoint = [kept, domain](const DenseArray& y) {
    DenseArray x(domain);
    for (std::size_t i = 0; i < kept->size(); ++i)
      x[(*kept)[i]] = y[i];
    return x;
  };
  return LinearOperator(fmt::format("subsample{}", range[0]), domain, range, apply, adjoint);
}

LinearOperator compose(const LinearOperator& b, const LinearOperator& a)
{
  if (a.range_shape() != b.domain_shape())
    throw ShapeError(fmt::format("compose: {} produces {}, {} expects {}", a.name(),
                                 shape_string(a.range_shape()), b.name(),
                                 shape_string(b.domain_shape())));
  return LinearOperator(
    fmt::format("{}*{}", b.name(), a.name()), a.domain_shape(), b.range_shape(),
    [a, b](const DenseArray& x) { return b.apply(a.apply(x)); },
    [a, b](const DenseArray& y) { return a.adjoint(b.adjoint(y)); });
}

DenseArray gaussian_kernel_1d(std::size_t taps, double stddev)
{
  if (taps % 2 == 0)
    throw ConfigError("gaussian_kernel_1d: taps must be odd");
  DenseArray k({taps});
  const double c = 0.5 * static_cast<double>(taps - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < taps; ++i) {
    const double d = static_cast<double>(i) - c;
    k[i] = std::exp(-d * d / (2.0 * stddev * stddev));
    total += k[i];
  }
  k *= 1.0 / total;
  return k;
}

double adjoint_test(const LinearOperator& op, std::size_t trials, std::uint64_t seed)
{
  Rng rng = Rng(seed).stream("adjoint_test");
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const auto u = rng.normal_array(op.domain_shape());
    const auto w = rng.normal_array(op.range_shape());
    const auto au = op.apply(u);
    const auto aw = op.adjoint(w);
    const double scale = norm(au) * norm(w) + norm(u) * norm(aw);
    const double diff = std::abs(inner(au, w) - inner(u, aw));
    if (scale > 0.0)
      worst = std::max(worst, diff / scale);
    else
      worst = std::max(worst, diff);
  }
  return worst;
}

NormEstimate operator_norm(const LinearOperator& op, const PowerMethodOptions& options)
{
  if (options.max_iters < 1 || !(options.tol > 0.0))
    throw ConfigError("operator_norm: need max_iters >= 1 and tol > 0");
  Rng rng = Rng(options.seed).stream("power_method");
  auto v = rng.normal_array(op.domain_shape());
  v *= 1.0 / norm(v);

  NormEstimate est;
  double previous = 0.0;
  for (std::size_t k = 1; k <= options.max_iters; ++k) {
    const auto av = op.apply(v);
    const double sigma = norm(av);
    est.iterations = k;
    if (sigma == 0.0) {
      // v is in the kernel; for a nonzero operator a fresh probe would still find
      // a direction, so only stop when A*A v also vanishes on a second probe.
      auto probe = rng.normal_array(op.domain_shape());
      if (norm(op.apply(probe)) == 0.0) {
        est.value = 0.0;
        est.converged = true;
        return est;
      }
      v = (1.0 / norm(probe)) * probe;
      continue;
    }
    est.value = std::max(est.value, sigma);
    if (k > 1 && std::abs(sigma - previous) < options.tol * sigma) {
      est.converged = true;
      return est;
    }
    previous = sigma;
    auto w = op.adjoint(av);
    const double wn = norm(w);
    if (wn == 0.0) {
      est.converged = true;
      return est;
    }
    v = (1.0 / wn) * std::move(w);
  }
  return est;
}

NormEstimate certify_norm(LinearOperator& op, const PowerMethodOptions& options)
{
  auto est = operator_norm(op, options);
  op.set_norm_estimate(est);
  return est;
}

std::vector<double> assemble_dense(const LinearOperator& op)
{
  const std::size_t n = shape_size(op.domain_shape());
  const std::size_t m = shape_size(op.range_shape());
  std::vector<double> dense(m * n, 0.0);
  DenseArray e(op.domain_shape());
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const auto col = op.apply(e);
    for (std::size_t i = 0; i < m; ++i)
      dense[i * n + j] = col[i];
    e[j] = 0.0;
  }
  return dense;
}

} // namespace wcreg
