#include "wcreg/diagnostics.hpp"

#include "wcreg/errors.hpp"
#include "wcreg/mnorm.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>

namespace wcreg {

double certificate_nu(const SolverTrace& t)
{
  return std::min(t.mu * t.sigma - 3.0, 1.0 - t.rho * t.tau);
}

Certificate descent_certificate(const SolverTrace& t, double tol)
{
  double worst = std::numeric_limits<double>::infinity();
  std::size_t n = 0;
  for (const auto& r : t.records) {
    if (r.k == 0)
      continue;
    worst = std::min(worst, r.descent_margin);
    ++n;
  }
  if (n == 0)
    worst = 0.0;
  return {"lyapunov_descent",
          fmt::format("descent margin >= -{} at every iteration", tol), n, -worst,
          !std::isnan(worst) && worst >= -tol};
}

ResidualCertificate min_residual_certificate(const SolverTrace& t, double nu)
{
  if (t.theta != 1.0)
    throw CertificateError("residual certificate: only defined for theta_relax = 1");
  if (!(nu > 0.0))
    throw ConfigError(fmt::format("residual certificate: nu must be positive, got {}", nu));
  if (t.records.size() < 2)
    throw ConfigError("residual certificate: trace needs at least 2 iterations");

  ResidualCertificate out;
  const double l1 = t.records[0].lyapunov;
  double min_step = std::numeric_limits<double>::infinity();
  double min_res = std::numeric_limits<double>::infinity();
  // Relative slack for rounding in the Lyapunov differences.
  const double slack = 1e-9;
  for (std::size_t kk = 1; kk < t.records.size(); ++kk) {
    min_step = std::min(min_step, t.records[kk].step_m);
    min_res = std::min(min_res, t.records[kk].residual_m);
    const double drop = std::max(0.0, l1 - t.records[kk].lyapunov);
    const double bound = 2.0 / std::sqrt(nu * static_cast<double>(kk)) * std::sqrt(drop);
    const double ratio = bound > 0.0 ? min_step / bound : (min_step > 0.0 ? INFINITY : 0.0);
    const double ratio_m = bound > 0.0 ? min_res / bound : (min_res > 0.0 ? INFINITY : 0.0);
    out.worst_ratio = std::max(out.worst_ratio, ratio);
    out.worst_ratio_residual_m = std::max(out.worst_ratio_residual_m, ratio_m);
    if (ratio > 1.0 + slack && !out.first_violation)
      out.first_violation = kk;
  }
  out.pass = !out.first_violation.has_value();
  out.certificate = {"min_residual",
                     fmt::format("min_(k<=K) |z^k - z^(k+1)|_M <= 2/sqrt(nu K) sqrt(drop), nu={:.6g}", nu),
                     t.records.size() - 1, out.worst_ratio - 1.0, out.pass};
  return out;
}

SquareSummability square_summability(const SolverTrace& t, std::size_t tail)
{
  SquareSummability s;
  for (const auto& r : t.records) {
    s.sum_dx2 += r.dx_norm * r.dx_norm;
    s.sum_dy2 += r.dy_norm * r.dy_norm;
  }
  const std::size_t n = t.records.size();
  for (std::size_t i = n > tail ? n - tail : 0; i < n; ++i) {
    const auto& r = t.records[i];
    s.tail_max = std::max({s.tail_max, r.dx_norm * r.dx_norm, r.dy_norm * r.dy_norm});
  }
  return s;
}

ErgodicReport ergodic_gap(const SolverTrace& t, const PdProblem& p, const DenseArray& probe_x,
                          const DenseArray& probe_y, const ProductPoint& zhat,
                          std::size_t tail_begin, std::size_t tail_end)
{
  if (t.history.size() < 101)
    throw ConfigError(fmt::format("ergodic_gap: need at least 100 iterations with history, got {}",
                                  t.history.empty() ? 0 : t.history.size() - 1));
  const std::size_t n = t.history.size() - 1;
  if (tail_end == 0 || tail_end > n)
    tail_end = n;
  if (tail_begin < 2 || tail_begin >= tail_end)
    throw ConfigError("ergodic_gap: bad tail window");

  ErgodicReport rep;
  rep.tail_begin = tail_begin;
  rep.tail_end = tail_end;
  rep.offset = 0.5 * (t.rho * squared_norm(probe_x - zhat.x) - t.mu * squared_norm(probe_y - zhat.y));
  rep.limit = lagrangian(zhat.x, probe_y, p.r, p.cf, p.a) - lagrangian(probe_x, zhat.y, p.r, p.cf, p.a);

  DenseArray sx = DenseArray::zeros_like(probe_x);
  DenseArray sy = DenseArray::zeros_like(probe_y);
  rep.raw_gap.reserve(n);
  for (std::size_t k = 1; k <= n; ++k) {
    sx += t.history[k].x;
    sy += t.history[k].y;
    const double inv = 1.0 / static_cast<double>(k);
    const double g = lagrangian(inv * sx, probe_y, p.r, p.cf, p.a) -
                     lagrangian(probe_x, inv * sy, p.r, p.cf, p.a);
    rep.raw_gap.push_back(g);
    rep.corrected_gap.push_back(g - rep.offset);
  }

  double eb = 0.0, bb = 0.0, ee = 0.0;
  for (std::size_t k = tail_begin; k <= tail_end; ++k) {
    const double kd = static_cast<double>(k);
    const double b = std::log(kd) / kd;
    const double e = rep.raw_gap[k - 1] - rep.limit;
    eb += e * b;
    bb += b * b;
    ee += e * e;
    rep.envelope_constant = std::max(rep.envelope_constant, rep.corrected_gap[k - 1] / b);
  }
  rep.fit_c = eb / bb;
  double rr = 0.0;
  for (std::size_t k = tail_begin; k <= tail_end; ++k) {
    const double kd = static_cast<double>(k);
    const double e = rep.raw_gap[k - 1] - rep.limit - rep.fit_c * std::log(kd) / kd;
    rr += e * e;
  }
  rep.fit_relative_residual = ee > 0.0 ? std::sqrt(rr / ee) : 0.0;
  return rep;
}

std::string to_string(RateKind kind)
{
  switch (kind) {
  case RateKind::finite:
    return "finite";
  case RateKind::linear:
    return "linear";
  case RateKind::power:
    return "power";
  case RateKind::inconclusive:
    break;
  }
  return "inconclusive";
}

namespace {
// Least-squares line through (u_i, v_i); returns slope and residual sum of squares.
std::pair<double, double> line_fit(const std::vector<double>& u, const std::vector<double>& v)
{
  const double n = static_cast<double>(u.size());
  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= n;
  mv /= n;
  double suv = 0.0, suu = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    suv += (u[i] - mu) * (v[i] - mv);
    suu += (u[i] - mu) * (u[i] - mu);
  }
  const double slope = suu > 0.0 ? suv / suu : 0.0;
  double rss = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double e = v[i] - (mv + slope * (u[i] - mu));
    rss += e * e;
  }
  return {slope, rss};
}
} // namespace

RateReport rate_classify(const std::vector<double>& d, double floor)
{
  RateReport rep;
  if (d.size() < 3)
    return rep;
  for (double v : d)
    if (!std::isfinite(v) || v < 0.0)
      return rep;
  const auto first_zero = std::find(d.begin(), d.end(), 0.0);
  if (first_zero != d.end() &&
      std::all_of(first_zero, d.end(), [](double v) { return v == 0.0; })) {
    rep.kind = RateKind::finite;
    rep.finite_index = static_cast<std::size_t>(first_zero - d.begin()) + 1;
    return rep;
  }
  if (d.back() > d.front())
    return rep;
  const double cut = floor * d.front();
  std::vector<double> k, logk, logd;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(d[i] > cut))
      break;
    k.push_back(static_cast<double>(i + 1));
    logk.push_back(std::log(static_cast<double>(i + 1)));
    logd.push_back(std::log(d[i]));
  }
  if (k.size() < 3)
    return rep;
  const auto [s_lin, rss_lin] = line_fit(k, logd);
  const auto [s_pow, rss_pow] = line_fit(logk, logd);
  rep.linear_rss = rss_lin;
  rep.power_rss = rss_pow;
  rep.rate = std::exp(s_lin);
  rep.exponent = s_pow;
  if (rss_lin <= rss_pow)
    rep.kind = rep.rate < 1.0 ? RateKind::linear : RateKind::inconclusive;
  else
    rep.kind = s_pow < 0.0 ? RateKind::power : RateKind::inconclusive;
  return rep;
}

RateReport rate_classify(const SolverTrace& t, const LinearOperator& a, const ProductPoint& zhat,
                         double floor)
{
  if (t.history.size() < 2)
    throw ConfigError("rate_classify: trace has no history");
  std::vector<double> d;
  d.reserve(t.history.size() - 1);
  for (std::size_t k = 1; k < t.history.size(); ++k) {
    const ProductPoint diff{t.history[k].x - zhat.x, t.history[k].y - zhat.y};
    d.push_back(std::sqrt(std::max(0.0, m_norm_sq(diff, t.tau, t.sigma, a))));
  }
  return rate_classify(d, floor);
}

} // namespace wcreg
