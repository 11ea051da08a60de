#include "wcreg/fidelity.hpp"

#include "wcreg/errors.hpp"
#include "wcreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace wcreg {

double sq_l2(const DenseArray& y, const DenseArray& y_ref)
{
  require_same_shape(y, y_ref, "sq_l2");
  return 0.5 * squared_norm(y - y_ref);
}

Fidelity squared_l2_fidelity()
{
  return {"squared_l2", sq_l2, 2.0, 2.0, true};
}

ConjugateFidelity make_conjugate_fidelity(double alpha, DenseArray y_delta)
{
  if (!(alpha > 0.0))
    throw ConfigError(fmt::format("fidelity: alpha must be positive, got {}", alpha));
  return {alpha, std::move(y_delta), alpha};
}

DenseArray conj_prox(const ConjugateFidelity& cf, double sigma, const DenseArray& v)
{
  if (!(sigma > 0.0))
    throw ConfigError("conj_prox: sigma must be positive");
  DenseArray out = v;
  axpy(-sigma, cf.y_delta, out);
  out *= 1.0 / (1.0 + sigma * cf.alpha);
  return out;
}

double conj_eval(const ConjugateFidelity& cf, const DenseArray& w)
{
  return 0.5 * cf.alpha * squared_norm(w) + inner(w, cf.y_delta);
}

DenseArray conj_grad(const ConjugateFidelity& cf, const DenseArray& w)
{
  return lincomb(cf.alpha, w, 1.0, cf.y_delta);
}

double primal_eval(const ConjugateFidelity& cf, const DenseArray& y)
{
  return squared_norm(y - cf.y_delta) / (2.0 * cf.alpha);
}

DenseArray primal_grad(const ConjugateFidelity& cf, const DenseArray& y)
{
  return (1.0 / cf.alpha) * (y - cf.y_delta);
}

Assumption5Report assumption5_audit(const Fidelity& fid, std::size_t samples, std::uint64_t seed,
                                    std::size_t dim)
{
  if (samples == 0)
    throw ConfigError("assumption5_audit: samples must be positive");
  Rng rng = Rng(seed).stream("assumption5");
  double worst = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const auto y1 = rng.normal_array({dim});
    const auto y2 = rng.normal_array({dim});
    const auto y3 = rng.normal_array({dim});
    const double den = fid.eval(y1, y3) + std::pow(distance(y2, y3), fid.p);
    if (den > 0.0)
      worst = std::max(worst, fid.eval(y1, y2) / den);
  }
  Assumption5Report r;
  r.worst_ratio = worst;
  r.pass = worst <= fid.c;
  r.certificate = {fmt::format("assumption5:{}", fid.name),
                   fmt::format("D(y1,y2) <= {} (D(y1,y3) + |y2-y3|^{})", fid.c, fid.p), samples,
                   worst - fid.c, r.pass};
  return r;
}

} // namespace wcreg
