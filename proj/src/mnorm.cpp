#include "wcreg/mnorm.hpp"

#include "wcreg/errors.hpp"

namespace wcreg {

namespace {
void check_steps(double tau, double sigma)
{
  if (!(tau > 0.0) || !(sigma > 0.0))
    throw ConfigError("M-norm: step sizes tau and sigma must be positive");
}
} // namespace

double m_norm_sq(const ProductPoint& z, double tau, double sigma, const LinearOperator& a)
{
  check_steps(tau, sigma);
  return squared_norm(z.x) / tau - 2.0 * inner(a.apply(z.x), z.y) + squared_norm(z.y) / sigma;
}

ProductPoint apply_m(const ProductPoint& z, double tau, double sigma, double theta,
                     const LinearOperator& a)
{
  check_steps(tau, sigma);
  ProductPoint out{(1.0 / tau) * z.x, (1.0 / sigma) * z.y};
  axpy(-1.0, a.adjoint(z.y), out.x);
  axpy(-theta, a.apply(z.x), out.y);
  return out;
}

} // namespace wcreg
