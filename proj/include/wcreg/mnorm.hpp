#pragma once

#include "wcreg/linear_operator.hpp"
#include "wcreg/tensor.hpp"

namespace wcreg {

/// |z|_M^2 = (1/tau)|x|^2 - 2<Ax, y> + (1/sigma)|y|^2, the quadratic form of the
/// primal-dual preconditioner. Nonnegative whenever tau*sigma*|A|^2 < 1.
double m_norm_sq(const ProductPoint& z, double tau, double sigma, const LinearOperator& a);

/// M z = (x/tau - A*y, -theta A x + y/sigma). Self-adjoint only for theta = 1.
ProductPoint apply_m(const ProductPoint& z, double tau, double sigma, double theta,
                     const LinearOperator& a);

} // namespace wcreg
