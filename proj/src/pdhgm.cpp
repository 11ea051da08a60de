#include "wcreg/pdhgm.hpp"

#include "wcreg/errors.hpp"
#include "wcreg/mnorm.hpp"

#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <sstream>

namespace wcreg {

std::vector<std::string> ConstraintReport::violations() const
{
  std::vector<std::string> out;
  if (!(tau_sigma_norm2 < 1.0))
    out.push_back(fmt::format("tau*sigma*|A|^2 < 1 (got {:.6g})", tau_sigma_norm2));
  if (!(tau_rho < 1.0))
    out.push_back(fmt::format("tau*rho < 1 (got {:.6g})", tau_rho));
  if (!(mu_sigma > 3.0))
    out.push_back(fmt::format("mu*sigma > 3 (got {:.6g})", mu_sigma));
  return out;
}

ConstraintReport check_constraints(double tau, double sigma, double norm_a, double rho, double mu)
{
  return {tau * sigma * norm_a * norm_a, tau * rho, mu * sigma};
}

StepSizes suggest_steps(double rho, double mu_fid, double norm_a, double margin)
{
  if (!(mu_fid > 0.0) || !(norm_a > 0.0))
    throw ConfigError("suggest_steps: need mu_fid > 0 and |A| > 0");
  if (!(margin > 0.0 && margin < 1.0))
    throw ConfigError(fmt::format("suggest_steps: margin must lie in (0,1), got {}", margin));
  if (!(rho >= 0.0))
    throw ConfigError("suggest_steps: rho must be nonnegative");
  const double n2 = norm_a * norm_a;
  const double cap_rho = rho > 0.0 ? 1.0 / rho : std::numeric_limits<double>::infinity();
  const double tau = margin * std::min(cap_rho, mu_fid / (3.0 * n2));
  const double sigma_lo = 3.0 / mu_fid;
  const double sigma_hi = 1.0 / (tau * n2);
  if (!(sigma_lo < sigma_hi))
    throw ConfigError("suggest_steps: empty sigma interval");
  StepSizes s{tau, std::sqrt(sigma_lo * sigma_hi)};
  const auto report = check_constraints(s.tau, s.sigma, norm_a, rho, mu_fid);
  if (!report.ok())
    throw ConfigError(fmt::format("suggest_steps: suggested pair violates {}", report.violations().front()));
  return s;
}

ProductPoint pdhgm_step(const ProductPoint& z, const Functional& r, const ConjugateFidelity& cf,
                        const LinearOperator& a, const PdConfig& cfg)
{
  DenseArray v = z.x;
  axpy(-cfg.tau, a.adjoint(z.y), v);
  DenseArray x_next = prox(r, cfg.tau, v, ProxOptions{cfg.inner_tol});
  DenseArray x_bar = lincomb(1.0 + cfg.theta_relax, x_next, -cfg.theta_relax, z.x);
  DenseArray w = z.y;
  axpy(cfg.sigma, a.apply(x_bar), w);
  return {std::move(x_next), conj_prox(cf, cfg.sigma, w)};
}

double lagrangian(const DenseArray& x, const DenseArray& y, const Functional& r,
                  const ConjugateFidelity& cf, const LinearOperator& a)
{
  return r.eval(x) + inner(a.apply(x), y) - conj_eval(cf, y);
}

double primal_objective(const DenseArray& x, const Functional& r, const ConjugateFidelity& cf,
                        const LinearOperator& a)
{
  return r.eval(x) + primal_eval(cf, a.apply(x));
}

SolverTrace run_pdhgm(const PdProblem& p, const PdConfig& cfg)
{
  const double norm_a = p.a.certified_norm();
  if (!(cfg.tau > 0.0) || !(cfg.sigma > 0.0))
    throw ConfigError("pdhgm: step sizes tau and sigma must be positive");
  const double rho = p.r.rho_wc;
  const double mu = p.cf.mu_fid;
  const auto report = check_constraints(cfg.tau, cfg.sigma, norm_a, rho, mu);
  if (!report.ok() && !cfg.override_constraints) {
    std::string msg = "pdhgm: step sizes violate the descent conditions:";
    for (const auto& v : report.violations())
      msg += " " + v + ";";
    throw ConfigError(msg);
  }
  if (p.x0.shape() != p.a.domain_shape() || p.y0.shape() != p.a.range_shape())
    throw ShapeError("pdhgm: initial point does not match the operator shapes");

  SolverTrace trace;
  trace.tau = cfg.tau;
  trace.sigma = cfg.sigma;
  trace.theta = cfg.theta_relax;
  trace.rho = rho;
  trace.mu = mu;
  trace.norm_a = norm_a;
  trace.constraints_ok = report.ok();
  trace.initial = {p.x0, p.y0};
  trace.records.reserve(cfg.max_iters);
  if (cfg.keep_history)
    trace.history.push_back(trace.initial);

  ProductPoint z = trace.initial;
  DenseArray sum_x = DenseArray::zeros_like(p.x0);
  DenseArray sum_y = DenseArray::zeros_like(p.y0);
  double prev_lyapunov = std::numeric_limits<double>::quiet_NaN();
  const double c_y = 0.5 * (mu * cfg.sigma - 3.0) / cfg.sigma;
  const double c_x = 0.5 * (1.0 - rho * cfg.tau) / cfg.tau;

  for (std::size_t k = 0; k < cfg.max_iters; ++k) {
    ProductPoint next = pdhgm_step(z, p.r, p.cf, p.a, cfg);
    if (!next.x.all_finite() || !next.y.all_finite() ||
        std::sqrt(squared_norm(next.x) + squared_norm(next.y)) > cfg.divergence_bound)
      throw DivergenceError(fmt::format("pdhgm: iterates left the ball of radius {} at k={}",
                                        cfg.divergence_bound, k + 1));
    const ProductPoint back{z.x - next.x, z.y - next.y};

    TraceRecord rec;
    rec.k = k;
    rec.lagrangian = lagrangian(next.x, next.y, p.r, p.cf, p.a);
    const double step_sq = m_norm_sq(back, cfg.tau, cfg.sigma, p.a);
    rec.step_m = std::sqrt(std::max(0.0, step_sq));
    rec.lyapunov = rec.lagrangian + 0.5 * step_sq;
    rec.dx_norm = norm(back.x);
    rec.dy_norm = norm(back.y);
    rec.descent_margin = k == 0 ? std::numeric_limits<double>::quiet_NaN()
                                : prev_lyapunov - rec.lyapunov - c_y * rec.dy_norm * rec.dy_norm -
                                    c_x * rec.dx_norm * rec.dx_norm;
    prev_lyapunov = rec.lyapunov;

    const ProductPoint mz = apply_m(back, cfg.tau, cfg.sigma, cfg.theta_relax, p.a);
    rec.residual_m = std::sqrt(squared_norm(mz.x) + squared_norm(mz.y));
    if (cfg.full_diagnostics) {
      // prox optimality: (x^k - tau A*y^k - x^{k+1})/tau is in dR(x^{k+1}); dF*(y) is explicit
      DenseArray tx = (1.0 / cfg.tau) * back.x;
      axpy(-1.0, p.a.adjoint(z.y), tx);
      tx += p.a.adjoint(next.y);
      DenseArray ty = conj_grad(p.cf, next.y);
      axpy(-1.0, p.a.apply(next.x), ty);
      rec.residual_t = std::sqrt(squared_norm(tx) + squared_norm(ty));
    }

    if (cfg.full_diagnostics) {
      sum_x += next.x;
      sum_y += next.y;
      const double inv = 1.0 / static_cast<double>(k + 1);
      rec.gap = lagrangian(inv * sum_x, p.y0, p.r, p.cf, p.a) -
                lagrangian(p.x0, inv * sum_y, p.r, p.cf, p.a);
    }

    trace.records.push_back(rec);
    z = std::move(next);
    if (cfg.keep_history)
      trace.history.push_back(z);
    if (cfg.tol > 0.0 && rec.residual_m < cfg.tol) {
      trace.converged = true;
      break;
    }
  }
  trace.final_state = std::move(z);
  return trace;
}

namespace {
constexpr const char* kTraceHeader = "k,L,lyapunov,descent_margin,residual_M,dx_norm,dy_norm,gap,step_m";
}

std::string trace_csv(const SolverTrace& trace)
{
  std::string out = kTraceHeader;
  out += '\n';
  for (const auto& r : trace.records)
    out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.k,
                       r.lagrangian, r.lyapunov, r.descent_margin, r.residual_m, r.dx_norm,
                       r.dy_norm, r.gap, r.step_m);
  return out;
}

SolverTrace read_trace_csv(const std::string& text)
{
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader)
    throw ConfigError("trace csv: unexpected header");
  SolverTrace trace;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    std::vector<double> v;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const auto comma = line.find(',', pos);
      const auto field = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      char* end = nullptr;
      v.push_back(std::strtod(field.c_str(), &end));
      if (field.empty() || *end != '\0')
        throw ConfigError(fmt::format("trace csv line {}: bad field '{}'", lineno, field));
      if (comma == std::string::npos)
        break;
      pos = comma + 1;
    }
    if (v.size() != 9)
      throw ConfigError(fmt::format("trace csv line {}: expected 9 fields, got {}", lineno, v.size()));
    TraceRecord r;
    r.k = static_cast<std::size_t>(v[0]);
    r.lagrangian = v[1];
    r.lyapunov = v[2];
    r.descent_margin = v[3];
    r.residual_m = v[4];
    r.dx_norm = v[5];
    r.dy_norm = v[6];
    r.gap = v[7];
    r.step_m = v[8];
    trace.records.push_back(r);
  }
  return trace;
}

nlohmann::json trace_parameters(const SolverTrace& t)
{
  return {{"tau", t.tau},       {"sigma", t.sigma},   {"theta_relax", t.theta},
          {"rho", t.rho},       {"mu", t.mu},         {"norm_a", t.norm_a},
          {"constraints_ok", t.constraints_ok}};
}

void apply_trace_parameters(const nlohmann::json& params, SolverTrace& t)
{
  try {
    t.tau = params.at("tau").get<double>();
    t.sigma = params.at("sigma").get<double>();
    t.theta = params.at("theta_relax").get<double>();
    t.rho = params.at("rho").get<double>();
    t.mu = params.at("mu").get<double>();
    t.norm_a = params.at("norm_a").get<double>();
    t.constraints_ok = params.at("constraints_ok").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("trace parameters: {}", e.what()));
  }
}

SubgradientTrace subgradient_solve(const Functional& r, const ConjugateFidelity& cf,
                                   const LinearOperator& a, const DenseArray& x0, double step,
                                   std::size_t iters)
{
  if (!(step > 0.0))
    throw ConfigError("subgradient_solve: step must be positive");
  SubgradientTrace t;
  DenseArray x = x0;
  t.best_x = x;
  t.best_objective = primal_objective(x, r, cf, a);
  t.objective.push_back(t.best_objective);
  for (std::size_t k = 1; k <= iters; ++k) {
    DenseArray g = r.subgrad(x);
    g += a.adjoint(primal_grad(cf, a.apply(x)));
    axpy(-step, g, x);
    const double j = primal_objective(x, r, cf, a);
    t.objective.push_back(j);
    if (j < t.best_objective) {
      t.best_objective = j;
      t.best_x = x;
      t.best_k = k;
    }
  }
  t.final_x = std::move(x);
  return t;
}

} // namespace wcreg
