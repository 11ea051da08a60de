#include "wcreg/regpath.hpp"

#include "wcreg/errors.hpp"
#include "wcreg/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <numbers>

namespace wcreg {

KernelProjector KernelProjector::build(const LinearOperator& a, double rel_tol)
{
  const std::size_t n = shape_size(a.domain_shape());
  const std::size_t m = shape_size(a.range_shape());
  if (n > kMaxColumns)
    throw UnsupportedError(fmt::format("kernel projector: {} columns exceed the limit of {}", n,
                                       kMaxColumns));
  const auto dense = assemble_dense(a);
  Eigen::MatrixXd mat(m, n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      mat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = dense[i * n + j];
  Eigen::BDCSVD<Eigen::MatrixXd> svd(mat, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cut = s.size() > 0 ? rel_tol * s(0) : 0.0;
  KernelProjector p;
  p.dim_ = n;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cut && s(i) > 0.0)
      ++p.rank_;
  p.row_basis_.resize(p.rank_ * n);
  const auto& v = svd.matrixV();
  for (std::size_t r = 0; r < p.rank_; ++r)
    for (std::size_t j = 0; j < n; ++j)
      p.row_basis_[r * n + j] = v(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(r));
  return p;
}

DenseArray KernelProjector::project(const DenseArray& g) const
{
  if (g.size() != dim_)
    throw ShapeError("kernel projector: dimension mismatch");
  DenseArray out = g;
  for (std::size_t r = 0; r < rank_; ++r) {
    const double* row = &row_basis_[r * dim_];
    double c = 0.0;
    for (std::size_t j = 0; j < dim_; ++j)
      c += row[j] * g[j];
    for (std::size_t j = 0; j < dim_; ++j)
      out[j] -= c * row[j];
  }
  return out;
}

CriticalityResidual criticality_residual(const DenseArray& x, const Functional& r,
                                         const LinearOperator& a, const DenseArray& y0,
                                         const KernelProjector& projector)
{
  return {distance(a.apply(x), y0), norm(projector.project(r.subgrad(x)))};
}

CriticalityResidual criticality_residual(const DenseArray& x, const Functional& r,
                                         const LinearOperator& a, const DenseArray& y0)
{
  return criticality_residual(x, r, a, y0, KernelProjector::build(a));
}

AlphaRule alpha_linear(double c)
{
  return {fmt::format("alpha = {} delta", c), [c](double d) { return c * d; }};
}

AlphaRule alpha_constant(double c)
{
  return {fmt::format("alpha = {}", c), [c](double) { return c; }};
}

AlphaRule alpha_power(double c, double q)
{
  return {fmt::format("alpha = {} delta^{}", c, q), [c, q](double d) { return c * std::pow(d, q); }};
}

AlphaAudit alpha_rule_audit(const AlphaRule& rule, double p, std::size_t levels, double delta0,
                            double decay)
{
  if (!(decay > 0.0 && decay < 1.0) || !(delta0 > 0.0))
    throw ConfigError("alpha_rule_audit: need delta0 > 0 and decay in (0,1)");
  // With a handful of levels alpha = c delta only falls by decay^levels, so the limits
  // are judged further out along the same schedule.
  std::size_t horizon = std::max<std::size_t>(levels, 1);
  while (std::pow(decay, static_cast<double>(horizon)) > 1e-8)
    ++horizon;
  const double d0 = delta0;
  const double dk = delta0 * std::pow(decay, static_cast<double>(horizon));
  const double a0 = rule.alpha(d0);
  const double ak = rule.alpha(dk);
  AlphaAudit out;
  out.horizon = horizon;
  out.alpha_ratio = ak / a0;
  out.data_ratio = (std::pow(dk, p) / ak) / (std::pow(d0, p) / a0);
  out.pass = a0 > 0.0 && ak > 0.0 && out.alpha_ratio < 1e-3 && out.data_ratio < 1e-3;
  return out;
}

LevelSolve solve_level(const LinearOperator& a_in, const Functional& r, double alpha,
                       const DenseArray& y, const DenseArray& x_start,
                       const LevelSolveOptions& o)
{
  LinearOperator a = a_in;
  if (!a.norm_estimate() || !a.norm_estimate()->converged)
    certify_norm(a);
  const double norm_a = a.certified_norm();
  const auto cf = make_conjugate_fidelity(alpha, y);
  LevelSolve out;

  if (o.solver == LevelSolver::pdhgm) {
    const auto steps = suggest_steps(r.rho_wc, cf.mu_fid, norm_a, o.step_margin);
    PdConfig cfg;
    cfg.tau = steps.tau;
    cfg.sigma = steps.sigma;
    cfg.max_iters = o.max_iters;
    cfg.tol = o.tol;
    cfg.full_diagnostics = false;
    PdProblem p{a, r, cf, x_start, primal_grad(cf, a.apply(x_start))};
    try {
      auto trace = run_pdhgm(p, cfg);
      out.x = std::move(trace.final_state.x);
      out.iterations = trace.iterations();
      out.converged = trace.converged;
      out.final_residual = trace.final_residual();
    } catch (const DivergenceError&) {
      out.x = x_start;
      out.diverged = true;
    }
    return out;
  }

  // gradient descent with Armijo backtracking on R(x) + |Ax - y|^2 / (2 alpha)
  auto objective = [&](const DenseArray& x) { return r.eval(x) + primal_eval(cf, a.apply(x)); };
  auto gradient = [&](const DenseArray& x) {
    DenseArray g = r.subgrad(x);
    g += a.adjoint(primal_grad(cf, a.apply(x)));
    return g;
  };
  const double t_max = o.gd_step_fraction * alpha / (norm_a * norm_a);
  double t = t_max;
  DenseArray x = x_start;
  double j = objective(x);
  for (std::size_t k = 0; k < o.max_iters; ++k) {
    const DenseArray g = gradient(x);
    const double gn2 = squared_norm(g);
    out.final_residual = std::sqrt(gn2);
    out.iterations = k;
    if (out.final_residual < o.tol) {
      out.converged = true;
      break;
    }
    DenseArray trial = lincomb(1.0, x, -t, g);
    double jt = objective(trial);
    while (jt > j - 1e-4 * t * gn2 + 1e-15 * (1.0 + std::abs(j))) {
      t *= 0.5;
      if (t < 1e-30) {
        out.x = std::move(x);
        return out;
      }
      trial = lincomb(1.0, x, -t, g);
      jt = objective(trial);
    }
    x = std::move(trial);
    j = jt;
    if (!x.all_finite() || norm(x) > 1e8) {
      out.diverged = true;
      out.x = x_start;
      return out;
    }
    t = std::min(2.0 * t, t_max);
  }
  out.x = std::move(x);
  return out;
}

DenseArray scaled_noise(const Shape& shape, double delta, std::uint64_t seed, std::uint64_t level)
{
  DenseArray eta(shape);
  if (delta == 0.0)
    return eta;
  Rng rng = Rng(seed).stream("regpath_noise").stream(level);
  eta = rng.normal_array(shape);
  eta *= delta / norm(eta);
  return eta;
}

RegPathReport run_regpath(const RegPathProblem& problem, const RegPathConfig& cfg)
{
  RegPathReport rep;
  rep.audit = alpha_rule_audit(cfg.alpha_rule, cfg.p, cfg.levels, cfg.delta0 > 0.0 ? cfg.delta0 : 1.0,
                               cfg.decay);
  if (cfg.delta0 > 0.0 && !rep.audit.pass)
    throw ConfigError(fmt::format("regpath: rule '{}' fails the parameter-choice audit "
                                  "(alpha ratio {:.3g}, delta^p/alpha ratio {:.3g})",
                                  cfg.alpha_rule.name, rep.audit.alpha_ratio, rep.audit.data_ratio));
  LinearOperator a = problem.a;
  if (!a.norm_estimate() || !a.norm_estimate()->converged)
    certify_norm(a);
  const auto projector = KernelProjector::build(a);

  DenseArray x = problem.x_init;
  for (std::size_t k = 0; k < cfg.levels; ++k) {
    RegPathLevel lv;
    lv.level = k;
    lv.delta = cfg.delta0 * std::pow(cfg.decay, static_cast<double>(k));
    // with exact data the schedule still needs alpha -> 0
    lv.alpha = cfg.alpha_rule.alpha(cfg.delta0 > 0.0 ? lv.delta : std::pow(cfg.decay, static_cast<double>(k)));
    const DenseArray y = problem.y_clean + scaled_noise(problem.y_clean.shape(), lv.delta, cfg.noise_seed, k);
    auto sol = solve_level(a, problem.r, lv.alpha, y, x, cfg.solve);
    lv.iterations = sol.iterations;
    lv.converged = sol.converged;
    lv.diverged = sol.diverged;
    lv.dist_prev_level = distance(sol.x, x);
    lv.criticality = criticality_residual(sol.x, problem.r, a, problem.y_clean, projector);
    lv.data_residual = lv.criticality.feasibility;
    lv.distance_to_truth = problem.x_true.empty() ? 0.0 : distance(sol.x, problem.x_true);
    if (!sol.diverged)
      x = sol.x;
    lv.x = std::move(sol.x);
    rep.levels.push_back(std::move(lv));
  }
  rep.data_residual_monotone = true;
  for (std::size_t k = 1; k < rep.levels.size(); ++k)
    if (rep.levels[k].data_residual > 1.1 * rep.levels[k - 1].data_residual)
      rep.data_residual_monotone = false;
  return rep;
}

std::string regpath_csv(const RegPathReport& rep)
{
  std::string out = "level,delta,alpha,data_residual,criticality_feasibility,criticality_tangential,"
                    "dist_prev_level\n";
  for (const auto& l : rep.levels)
    out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", l.level, l.delta,
                       l.alpha, l.data_residual, l.criticality.feasibility,
                       l.criticality.tangential, l.dist_prev_level);
  return out;
}

StabilityReport stability_probe(const LinearOperator& a, const Functional& r, double alpha,
                                const DenseArray& y, const DenseArray& x_start,
                                const std::vector<double>& sizes, std::uint64_t seed,
                                const LevelSolveOptions& options)
{
  if (!(alpha > 0.0))
    throw ConfigError("stability_probe: alpha must be positive");
  const auto base = solve_level(a, r, alpha, y, x_start, options);
  Rng rng = Rng(seed).stream("stability");
  DenseArray dir = rng.normal_array(y.shape());
  dir *= 1.0 / norm(dir);
  StabilityReport rep;
  for (double s : sizes) {
    const auto sol = solve_level(a, r, alpha, lincomb(1.0, y, s, dir), x_start, options);
    rep.rows.push_back({s, distance(sol.x, base.x)});
    if (s > 0.0)
      rep.lipschitz_fit = std::max(rep.lipschitz_fit, rep.rows.back().deviation / s);
  }
  auto sorted = rep.rows;
  std::sort(sorted.begin(), sorted.end(),
            [](const StabilityRow& p, const StabilityRow& q) { return p.size < q.size; });
  rep.monotone = true;
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i].deviation < sorted[i - 1].deviation / 1.1)
      rep.monotone = false;
  return rep;
}

std::vector<ProximalPointRow> unbounded_critical_control(int count, double nu, std::size_t iters,
                                                         double offset)
{
  const Functional r = abs_plus_cos();
  std::vector<ProximalPointRow> rows;
  for (int k = 1; k <= count; ++k) {
    const double xk = 2.0 * std::numbers::pi * k + 0.5 * std::numbers::pi;
    DenseArray x = DenseArray::vector({xk + offset});
    for (std::size_t i = 0; i < iters; ++i)
      x = prox(r, nu, x, ProxOptions{1e-12, 500, 1e-4});
    rows.push_back({k, xk + offset, x[0], xk});
  }
  return rows;
}

} // namespace wcreg
