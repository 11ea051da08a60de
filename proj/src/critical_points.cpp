#include "wcreg/critical_points.hpp"

#include "wcreg/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace wcreg {

SplitRegulariser SplitRegulariser::from_parts(Functional r_wc, Functional r_sc)
{
  SplitRegulariser reg;
  reg.gamma = r_wc.rho_wc;
  reg.mu_sc = r_sc.mu_sc;
  if (!(reg.mu_sc > 0.0))
    throw ConfigError(fmt::format("split regulariser: {} is not strongly convex", r_sc.name));
  reg.r_wc = std::move(r_wc);
  reg.r_sc = std::move(r_sc);
  if (!reg.sqrt_case_applies() && !reg.lipschitz_case_applies())
    throw CertificateError(fmt::format(
      "split regulariser: gamma={} >= 2 mu={} and {} has no Lipschitz constant", reg.gamma,
      2.0 * reg.mu_sc, reg.r_wc.name));
  return reg;
}

CriticalPointBound critical_point_bound(const SplitRegulariser& reg, const DenseArray& z)
{
  if (!reg.sqrt_case_applies() && !reg.lipschitz_case_applies())
    throw CertificateError("critical_point_bound: neither the Lipschitz nor the sqrt case applies");
  if (!(reg.mu_sc > 0.0))
    throw CertificateError("critical_point_bound: mu_sc must be positive");
  const double g_sc = norm(reg.r_sc.subgrad(z));
  CriticalPointBound out;
  if (reg.lipschitz_case_applies())
    out.lipschitz_radius = (*reg.r_wc.lipschitz_in(z.size()) + g_sc) / reg.mu_sc;
  if (reg.sqrt_case_applies()) {
    const double slack = reg.mu_sc - 0.5 * reg.gamma;
    const double r0 = reg.r_wc.eval(z);
    if (r0 < 0.0)
      throw CertificateError(fmt::format("critical_point_bound: r_wc(z) = {} < 0", r0));
    out.sqrt_radius = g_sc / slack + std::sqrt(r0 / slack);
  }
  out.radius = std::min(out.lipschitz_radius.value_or(INFINITY), out.sqrt_radius.value_or(INFINITY));
  return out;
}

std::vector<double> scan_critical_points_1d(const Functional& f, const ScanOptions& o)
{
  if (!(o.step > 0.0) || !(o.hi > o.lo))
    throw ConfigError("scan: need step > 0 and hi > lo");
  struct Hit
  {
    double x;
    bool breakpoint;
  };
  std::vector<Hit> hits;

  const auto n = static_cast<std::size_t>(std::floor((o.hi - o.lo) / o.step));
  auto grid = [&](std::size_t i) { return i == n ? std::min(o.hi, o.lo + n * o.step) : o.lo + i * o.step; };
  double a = grid(0);
  double ga = f.subgrad1(a);
  if (ga == 0.0)
    hits.push_back({a, false});
  for (std::size_t i = 1; i <= n; ++i) {
    const double b = grid(i);
    const double gb = f.subgrad1(b);
    if (gb == 0.0) {
      hits.push_back({b, false});
    } else if (ga != 0.0 && (ga < 0.0) != (gb < 0.0)) {
      double l = a, r = b, gl = ga;
      for (int it = 0; it < 80 && r - l > 0.0; ++it) {
        const double m = 0.5 * (l + r);
        if (m <= l || m >= r)
          break;
        const double gm = f.subgrad1(m);
        if (gm == 0.0) {
          l = r = m;
          break;
        }
        if ((gm < 0.0) == (gl < 0.0)) {
          l = m;
          gl = gm;
        } else {
          r = m;
        }
      }
      hits.push_back({0.5 * (l + r), false});
    }
    a = b;
    ga = gb;
  }

  if (f.breakpoints)
    for (double x : f.breakpoints(o.lo, o.hi)) {
      const auto [left, right] = f.one_sided1(x);
      const double tol = o.kink_tol * (1.0 + std::abs(left) + std::abs(right) + std::abs(x));
      if (std::min(left, right) <= tol && std::max(left, right) >= -tol)
        hits.push_back({x, true});
    }

  std::sort(hits.begin(), hits.end(), [](const Hit& p, const Hit& q) { return p.x < q.x; });
  std::vector<Hit> merged;
  for (const auto& h : hits) {
    if (!merged.empty() && h.x - merged.back().x <= 2.0 * o.step) {
      if (h.breakpoint && !merged.back().breakpoint)
        merged.back() = h;
      continue;
    }
    merged.push_back(h);
  }
  std::vector<double> out;
  out.reserve(merged.size());
  for (const auto& h : merged)
    out.push_back(h.x);
  return out;
}

Certificate critical_point_certificate(const std::string& name, const CriticalPointBound& bound,
                                       double z, const std::vector<double>& points)
{
  double worst = -bound.radius;
  for (double p : points)
    worst = std::max(worst, std::abs(p - z) - bound.radius);
  return {name,
          fmt::format("all {} scanned critical points lie within {} of {}", points.size(),
                      bound.radius, z),
          points.size(), worst, worst <= 0.0};
}

} // namespace wcreg
