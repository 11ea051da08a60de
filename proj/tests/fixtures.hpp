#pragma once

#include "wcreg/fidelity.hpp"
#include "wcreg/functional.hpp"
#include "wcreg/linear_operator.hpp"
#include "wcreg/pdhgm.hpp"
#include "wcreg/rng.hpp"

#include <cmath>

namespace fixtures {

using namespace wcreg;

// 64 samples, zero-boundary 5-tap blur, four spikes, noise 0.01
struct Deconv
{
  LinearOperator a;
  DenseArray x_true;
  DenseArray y;
};

inline Deconv spike_deconvolution()
{
  const std::size_t n = 64;
  LinearOperator a = make_convolution(gaussian_kernel_1d(5, 1.0), Boundary::zero, {n});
  certify_norm(a);
  DenseArray x({n});
  x[10] = 1.0;
  x[25] = -0.7;
  x[40] = 0.5;
  x[52] = 1.2;
  Rng rng(1);
  DenseArray y = a.apply(x) + rng.normal_array({n}, 0.01);
  return {a, x, y};
}

inline PdProblem mcp_problem(const Deconv& d, double alpha = 1.0)
{
  const std::size_t n = d.x_true.size();
  return {d.a, mcp(0.05, 3.0), make_conjugate_fidelity(alpha, d.y), DenseArray({n}), DenseArray({n})};
}

inline PdConfig suggested(const PdProblem& p, std::size_t iters)
{
  const StepSizes s = suggest_steps(p.r.rho_wc, p.cf.mu_fid, p.a.certified_norm());
  PdConfig c;
  c.tau = s.tau;
  c.sigma = s.sigma;
  c.max_iters = iters;
  return c;
}

// 64-sample periodic 19-tap blur of two bumps
inline DenseArray two_bumps(std::size_t n)
{
  DenseArray x({n});
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n);
    x[i] = std::exp(-std::pow((t - 0.3) / 0.08, 2)) + 0.6 * std::exp(-std::pow((t - 0.7) / 0.05, 2));
  }
  return x;
}

} // namespace fixtures
