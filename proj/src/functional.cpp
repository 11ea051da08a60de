#include "wcreg/functional.hpp"

#include "wcreg/errors.hpp"
#include "wcreg/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

namespace wcreg {

nlohmann::json to_json(const Certificate& c)
{
  return {{"name", c.name},
          {"claim", c.claim},
          {"samples", c.samples},
          {"worst_violation", c.worst_violation},
          {"pass", c.pass}};
}

std::optional<double> Functional::lipschitz_in(std::size_t dim) const
{
  if (!lipschitz)
    return std::nullopt;
  return separable ? *lipschitz * std::sqrt(static_cast<double>(dim)) : *lipschitz;
}

double Functional::eval1(double x) const { return eval(DenseArray::vector({x})); }

double Functional::subgrad1(double x) const { return subgrad(DenseArray::vector({x}))[0]; }

std::pair<double, double> Functional::one_sided1(double x) const
{
  if (one_sided)
    return one_sided(x);
  const double g = subgrad1(x);
  return {g, g};
}

namespace {

inline double sgn(double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }

// Separable functional sum_i phi(x_i) with selection dphi.
template <typename Phi, typename DPhi>
Functional separable(std::string name, Phi phi, DPhi dphi)
{
  Functional f;
  f.name = std::move(name);
  f.separable = true;
  f.eval = [phi](const DenseArray& x) {
    double s = 0.0;
    for (double t : x.values())
      s += phi(t);
    return s;
  };
  f.subgrad = [dphi](const DenseArray& x) {
    DenseArray g(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i)
      g[i] = dphi(x[i]);
    return g;
  };
  return f;
}

template <typename Map>
DenseArray map_elements(const DenseArray& v, Map map)
{
  DenseArray out(v.shape());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = map(v[i]);
  return out;
}

inline double soft_threshold(double t, double k)
{
  return t > k ? t - k : (t < -k ? t + k : 0.0);
}

std::vector<double> kink_at_zero(double lo, double hi)
{
  if (lo <= 0.0 && 0.0 <= hi)
    return {0.0};
  return {};
}

} // namespace

Functional zero_functional()
{
  auto f = separable("zero", [](double) { return 0.0; }, [](double) { return 0.0; });
  f.lipschitz = 0.0;
  f.prox_closed_form = [](double, const DenseArray& v) { return v; };
  return f;
}

Functional quadratic(double scale, DenseArray center)
{
  if (!(scale >= 0.0))
    throw ConfigError("quadratic: scale must be nonnegative");
  Functional f;
  f.name = fmt::format("quadratic({})", scale);
  f.mu_sc = scale;
  f.separable = true;
  auto c = std::make_shared<const DenseArray>(std::move(center));
  auto shifted = [c](const DenseArray& x) { return c->empty() ? x : x - *c; };
  f.eval = [scale, shifted](const DenseArray& x) { return 0.5 * scale * squared_norm(shifted(x)); };
  f.subgrad = [scale, shifted](const DenseArray& x) { return scale * shifted(x); };
  f.prox_closed_form = [scale, c](double nu, const DenseArray& v) {
    DenseArray out = v;
    if (!c->empty())
      axpy(nu * scale, *c, out);
    out *= 1.0 / (1.0 + nu * scale);
    return out;
  };
  return f;
}

Functional l1_norm(double weight)
{
  if (!(weight >= 0.0))
    throw ConfigError("l1_norm: weight must be nonnegative");
  auto f = separable(
    fmt::format("l1({})", weight), [weight](double t) { return weight * std::abs(t); },
    [weight](double t) { return weight * sgn(t); });
  f.lipschitz = weight;
  f.l1_weight = weight;
  f.prox_closed_form = [weight](double nu, const DenseArray& v) {
    return map_elements(v, [k = nu * weight](double t) { return soft_threshold(t, k); });
  };
  f.one_sided = [weight](double x) {
    if (x == 0.0)
      return std::pair{-weight, weight};
    return std::pair{weight * sgn(x), weight * sgn(x)};
  };
  f.breakpoints = kink_at_zero;
  return f;
}

Functional mcp(double lambda, double a)
{
  if (!(lambda > 0.0) || !(a > 1.0))
    throw ConfigError("mcp: need lambda > 0 and a > 1");
  const double knee = a * lambda;
  auto f = separable(
    fmt::format("mcp({},{})", lambda, a),
    [=](double t) {
      const double s = std::abs(t);
      return s <= knee ? lambda * s - s * s / (2.0 * a) : 0.5 * a * lambda * lambda;
    },
    [=](double t) {
      const double s = std::abs(t);
      return s <= knee ? sgn(t) * (lambda - s / a) : 0.0;
    });
  f.rho_wc = 1.0 / a;
  f.lipschitz = lambda;
  // mcp - lambda|t| is C^1 with 1/a-Lipschitz derivative
  f.l1_weight = lambda;
  f.prox_closed_form = [=](double nu, const DenseArray& v) {
    if (!(nu < a))
      throw NonproxableError(fmt::format("mcp prox needs nu < a, got nu={} a={}", nu, a));
    // firm thresholding
    return map_elements(v, [=](double t) {
      const double s = std::abs(t);
      if (s <= nu * lambda)
        return 0.0;
      if (s <= knee)
        return sgn(t) * (s - nu * lambda) / (1.0 - nu / a);
      return t;
    });
  };
  // nonsmooth only at the origin
  f.one_sided = [lambda, dphi = f.subgrad](double x) {
    if (x == 0.0)
      return std::pair{-lambda, lambda};
    const double g = dphi(DenseArray::vector({x}))[0];
    return std::pair{g, g};
  };
  f.breakpoints = kink_at_zero;
  return f;
}

Functional abs_plus_cos()
{
  auto f = separable(
    "abs_plus_cos", [](double t) { return std::abs(t) + std::cos(t); },
    [](double t) { return sgn(t) - std::sin(t); });
  f.rho_wc = 1.0;
  f.lipschitz = 2.0;
  f.l1_weight = 1.0;
  f.one_sided = [](double x) {
    const double s = -std::sin(x);
    if (x == 0.0)
      return std::pair{s - 1.0, s + 1.0};
    return std::pair{s + sgn(x), s + sgn(x)};
  };
  f.breakpoints = kink_at_zero;
  return f;
}

Functional cosine_bump(double amplitude)
{
  if (!(amplitude >= 0.0))
    throw ConfigError("cosine_bump: amplitude must be nonnegative");
  auto f = separable(
    fmt::format("cosine_bump({})", amplitude),
    [amplitude](double t) { return amplitude * (1.0 + std::cos(t)); },
    [amplitude](double t) { return -amplitude * std::sin(t); });
  f.rho_wc = amplitude;
  f.lipschitz = amplitude;
  return f;
}

Functional welsch(double lambda, double scale)
{
  if (!(lambda > 0.0) || !(scale > 0.0))
    throw ConfigError("welsch: need lambda > 0 and scale > 0");
  const double s2 = scale * scale;
  auto f = separable(
    fmt::format("welsch({},{})", lambda, scale),
    [=](double t) { return lambda * (1.0 - std::exp(-t * t / (2.0 * s2))); },
    [=](double t) { return lambda * t / s2 * std::exp(-t * t / (2.0 * s2)); });
  // phi'' = lambda/s^2 (1 - t^2/s^2) e^{-t^2/2s^2} is smallest at t^2 = 3 s^2
  f.rho_wc = 2.0 * std::exp(-1.5) * lambda / s2;
  f.lipschitz = lambda / scale * std::exp(-0.5);
  return f;
}

namespace {

struct LadderProfile
{
  double gamma;
  double m;
  double log_m;

  // Segment index n with m^n <= x < m^{n+1}, for x > 0.
  int segment(double x) const
  {
    int n = static_cast<int>(std::floor(std::log(x) / log_m));
    while (std::pow(m, n) > x)
      --n;
    while (std::pow(m, n + 1) <= x)
      ++n;
    return n;
  }
  double slope_on(int n, double x) const
  {
    const double mn = std::pow(m, n);
    return (m + gamma) * mn - gamma * x;
  }
  double value_pos(double x) const
  {
    if (x <= 0.0)
      return 0.0;
    const int n = segment(x);
    const double mn = std::pow(m, n);
    return (m + gamma) * mn * (x - mn) - 0.5 * gamma * (x * x - mn * mn);
  }
  double right_pos(double x) const { return x <= 0.0 ? 0.0 : slope_on(segment(x), x); }
  double left_pos(double x) const
  {
    if (x <= 0.0)
      return 0.0;
    const int n = segment(x);
    return std::pow(m, n) == x ? slope_on(n - 1, x) : slope_on(n, x);
  }
};

} // namespace

Functional appendix_c_functional(double gamma)
{
  if (!(gamma > 2.0))
    throw ConfigError(fmt::format("appendix_c_functional: gamma must exceed 2, got {}", gamma));
  const double m = gamma / (gamma - 2.0);
  const LadderProfile p{gamma, m, std::log(m)};
  // Below this magnitude the segments are finer than double resolution; the
  // function and its derivative vanish there to within rounding.
  constexpr double tiny = 1e-200;
  auto f = separable(
    fmt::format("appendix_c({})", gamma),
    [p](double t) { return std::abs(t) < tiny ? 0.0 : p.value_pos(std::abs(t)); },
    [p](double t) {
      if (std::abs(t) < tiny)
        return 0.0;
      return t > 0.0 ? p.right_pos(t) : -p.right_pos(-t);
    });
  f.rho_wc = gamma;
  f.one_sided = [p](double x) {
    if (std::abs(x) < tiny)
      return std::pair{0.0, 0.0};
    if (x > 0.0)
      return std::pair{p.left_pos(x), p.right_pos(x)};
    return std::pair{-p.right_pos(-x), -p.left_pos(-x)};
  };
  f.breakpoints = [p](double lo, double hi) {
    std::vector<double> out;
    const double reach = std::max(std::abs(lo), std::abs(hi));
    if (reach <= 0.0)
      return out;
    const int n_max = p.segment(reach) + 1;
    const int n_min = p.segment(1e-6);
    for (int n = n_min; n <= n_max; ++n) {
      const double b = std::pow(p.m, n);
      if (-b >= lo && -b <= hi)
        out.push_back(-b);
    }
    for (int n = n_min; n <= n_max; ++n) {
      const double b = std::pow(p.m, n);
      if (b >= lo && b <= hi)
        out.push_back(b);
    }
    std::sort(out.begin(), out.end());
    return out;
  };
  return f;
}

Functional sum(const Functional& f, const Functional& g)
{
  Functional h;
  h.name = f.name + "+" + g.name;
  h.eval = [f, g](const DenseArray& x) { return f.eval(x) + g.eval(x); };
  h.subgrad = [f, g](const DenseArray& x) { return f.subgrad(x) + g.subgrad(x); };
  const double curvature = (f.mu_sc - f.rho_wc) + (g.mu_sc - g.rho_wc);
  h.rho_wc = std::max(0.0, -curvature);
  h.mu_sc = std::max(0.0, curvature);
  if (f.lipschitz && g.lipschitz && f.separable == g.separable) {
    h.lipschitz = *f.lipschitz + *g.lipschitz;
    h.separable = f.separable;
    h.lipschitz_empirical = f.lipschitz_empirical || g.lipschitz_empirical;
  }
  if (f.separable && g.separable)
    h.separable = true;
  h.l1_weight = f.l1_weight + g.l1_weight;
  h.one_sided = [f, g](double x) {
    const auto a = f.one_sided1(x);
    const auto b = g.one_sided1(x);
    return std::pair{a.first + b.first, a.second + b.second};
  };
  if (f.breakpoints || g.breakpoints)
    h.breakpoints = [f, g](double lo, double hi) {
      std::vector<double> out;
      if (f.breakpoints)
        out = f.breakpoints(lo, hi);
      if (g.breakpoints) {
        auto more = g.breakpoints(lo, hi);
        out.insert(out.end(), more.begin(), more.end());
      }
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      return out;
    };
  return h;
}

Functional scaled(const Functional& f, double factor)
{
  if (!(factor >= 0.0))
    throw ConfigError("scaled: factor must be nonnegative");
  Functional h = f;
  h.name = fmt::format("{}*{}", factor, f.name);
  h.eval = [f, factor](const DenseArray& x) { return factor * f.eval(x); };
  h.subgrad = [f, factor](const DenseArray& x) { return factor * f.subgrad(x); };
  h.rho_wc = factor * f.rho_wc;
  h.mu_sc = factor * f.mu_sc;
  if (f.lipschitz)
    h.lipschitz = factor * *f.lipschitz;
  h.l1_weight = factor * f.l1_weight;
  if (f.prox_closed_form)
    h.prox_closed_form = [f, factor](double nu, const DenseArray& v) {
      return factor == 0.0 ? v : f.prox_closed_form(nu * factor, v);
    };
  if (f.one_sided)
    h.one_sided = [f, factor](double x) {
      const auto a = f.one_sided(x);
      return std::pair{factor * a.first, factor * a.second};
    };
  return h;
}

Functional offset(const Functional& f, double constant)
{
  Functional h = f;
  h.name = fmt::format("{}+{}", f.name, constant);
  h.eval = [f, constant](const DenseArray& x) { return f.eval(x) + constant; };
  return h;
}

ProxResult prox_solve(const Functional& f, double nu, const DenseArray& v,
                      const ProxOptions& options)
{
  if (!(nu > 0.0))
    throw ConfigError("prox: nu must be positive");
  if (nu * f.rho_wc >= 1.0)
    throw NonproxableError(fmt::format("prox of {}: nu * rho_wc = {} >= 1, minimiser not unique",
                                       f.name, nu * f.rho_wc));
  if (f.prox_closed_form)
    return {f.prox_closed_form(nu, v), 0.0, 0, true};

  // Proximal gradient on z -> f(z) + |z - v|^2/(2nu) with the l1 part (if any) taken
  // exactly and Armijo backtracking on the gradient mapping. With no l1 part this is
  // plain gradient descent with Armijo line search.
  const double w = f.l1_weight;
  auto objective = [&](const DenseArray& z) { return f.eval(z) + squared_norm(z - v) / (2.0 * nu); };
  auto smooth_grad = [&](const DenseArray& z) {
    DenseArray g = f.subgrad(z);
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (w != 0.0)
        g[i] -= w * sgn(z[i]);
      g[i] += (z[i] - v[i]) / nu;
    }
    return g;
  };
  auto forward_backward = [&](const DenseArray& z, const DenseArray& g, double t) {
    DenseArray out(z.shape());
    for (std::size_t i = 0; i < z.size(); ++i)
      out[i] = soft_threshold(z[i] - t * g[i], t * w);
    return out;
  };

  DenseArray z = v;
  double phi = objective(z);
  double t = nu;
  double residual = 0.0;
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    const DenseArray g = smooth_grad(z);
    DenseArray next = forward_backward(z, g, t);
    residual = distance(z, next) / t;
    if (residual < options.tol)
      return {std::move(z), residual, it, false};
    // Backtrack. Once the decrease drops below double resolution the objective can no
    // longer rank steps; within that slack a step is accepted only if it shrinks the
    // gradient-mapping residual, which rules out roundoff-level 2-cycles.
    const double slack = 1e-14 * (1.0 + std::abs(phi));
    const double residual_here = residual;
    bool strict = false;
    double phi_next = objective(next);
    for (;;) {
      strict = phi_next <= phi - options.armijo_c * t * residual * residual;
      if (strict)
        break;
      if (phi_next <= phi - options.armijo_c * t * residual * residual + slack) {
        const DenseArray gn = smooth_grad(next);
        if (distance(next, forward_backward(next, gn, t)) / t < residual_here)
          break;
      }
      t *= 0.5;
      if (t < 1e-20 * nu)
        throw InnerSolveError(fmt::format("prox of {}: line search failed", f.name), residual);
      next = forward_backward(z, g, t);
      residual = distance(z, next) / t;
      phi_next = objective(next);
    }
    z = std::move(next);
    phi = phi_next;
    if (strict)
      t = std::min(2.0 * t, nu);
  }
  const DenseArray g = smooth_grad(z);
  residual = distance(z, forward_backward(z, g, t)) / t;
  if (residual < options.tol)
    return {std::move(z), residual, options.max_iters, false};
  throw InnerSolveError(fmt::format("prox of {}: no convergence in {} iterations (residual {:.3e})",
                                    f.name, options.max_iters, residual),
                        residual);
}

DenseArray prox(const Functional& f, double nu, const DenseArray& v, const ProxOptions& options)
{
  return prox_solve(f, nu, v, options).point;
}

MoreauResult moreau(const Functional& f, double nu, const DenseArray& x, const ProxOptions& options)
{
  auto p = prox(f, nu, x, options);
  MoreauResult out;
  out.value = f.eval(p) + squared_norm(p - x) / (2.0 * nu);
  out.gradient = (1.0 / nu) * (x - p);
  out.prox_point = std::move(p);
  return out;
}

double power_modulus(double bound, double rho, double q)
{
  if (q < 1.0)
    throw ConfigError(fmt::format("power_modulus: q must be >= 1, got {}", q));
  if (!(bound > 0.0) || !(rho >= 0.0))
    throw ConfigError("power_modulus: need bound > 0 and rho >= 0");
  return q * std::pow(bound, q - 1.0) * rho;
}

double composition_modulus(double lipschitz, double beta)
{
  if (!(lipschitz >= 0.0) || !(beta >= 0.0))
    throw ConfigError("composition_modulus: need L >= 0 and beta >= 0");
  return lipschitz * beta;
}

double check_rho_convexity(const Functional& f, double rho, std::size_t samples, Box box,
                           std::uint64_t seed, std::size_t dim)
{
  Rng rng = Rng(seed).stream("rho_convexity");
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    const auto x1 = rng.uniform_array({dim}, box.lo, box.hi);
    const auto x2 = rng.uniform_array({dim}, box.lo, box.hi);
    const double l = rng.uniform();
    const auto mid = lincomb(l, x1, 1.0 - l, x2);
    const double rhs = l * f.eval(x1) + (1.0 - l) * f.eval(x2) +
                       0.5 * rho * l * (1.0 - l) * squared_norm(x1 - x2);
    worst = std::max(worst, f.eval(mid) - rhs);
  }
  return worst;
}

Certificate rho_convexity_certificate(const Functional& f, double rho, std::size_t samples, Box box,
                                      std::uint64_t seed, std::size_t dim, double tol)
{
  const double worst = check_rho_convexity(f, rho, samples, box, seed, dim);
  return {fmt::format("rho_convexity:{}", f.name),
          fmt::format("{} is {}-weakly convex on [{},{}]^{}", f.name, rho, box.lo, box.hi, dim),
          samples, worst, worst <= tol};
}

} // namespace wcreg
