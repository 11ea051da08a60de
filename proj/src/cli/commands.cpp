#include "wcreg/cli/commands.hpp"

#include "wcreg/array_io.hpp"
#include "wcreg/cli/phantom.hpp"
#include "wcreg/critical_points.hpp"
#include "wcreg/diagnostics.hpp"
#include "wcreg/errors.hpp"
#include "wcreg/learn/spiral.hpp"
#include "wcreg/metrics.hpp"
#include "wcreg/pdhgm.hpp"
#include "wcreg/radon.hpp"
#include "wcreg/regpath.hpp"
#include "wcreg/rng.hpp"

#include <cmath>
#include <fmt/format.h>
#include <iostream>
#include <json.hpp>
#include <optional>

namespace wcreg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint64_t global_seed(const Config& c)
{
  const std::int64_t s = c.get_int("", "seed", 0);
  if (s < 0)
    throw ConfigError(fmt::format("{}: seed must be nonnegative", c.where("", "seed")));
  return static_cast<std::uint64_t>(s);
}

void write_json(const fs::path& path, const json& j) { io::write_file_atomic(path, j.dump(2) + "\n"); }

void write_array(const fs::path& stem, const DenseArray& x)
{
  io::write_raw(fs::path(stem).replace_extension(".raw"), x);
  if (x.rank() == 2)
    io::write_pgm(fs::path(stem).replace_extension(".pgm"), x);
}

// spikes at fixed fractions of the signal length
DenseArray spike_signal(std::size_t n)
{
  static const double where[] = {10.0 / 64.0, 25.0 / 64.0, 40.0 / 64.0, 52.0 / 64.0};
  static const double value[] = {1.0, -0.7, 0.5, 1.2};
  DenseArray x({n});
  for (int i = 0; i < 4; ++i)
    x[static_cast<std::size_t>(std::lround(where[i] * static_cast<double>(n))) % n] = value[i];
  return x;
}

DenseArray bump_signal(std::size_t n)
{
  DenseArray x({n});
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n);
    x[i] = std::exp(-std::pow((t - 0.3) / 0.08, 2)) + 0.6 * std::exp(-std::pow((t - 0.7) / 0.05, 2));
  }
  return x;
}

Boundary parse_boundary(const Config& c, const std::string& section)
{
  const std::string b = c.get_string(section, "boundary", "zero");
  if (b == "zero")
    return Boundary::zero;
  if (b == "periodic")
    return Boundary::periodic;
  throw ConfigError(fmt::format("{}: boundary must be zero or periodic, got '{}'", c.where(section, "boundary"), b));
}

json certificate_json(const Certificate& c) { return to_json(c); }

} // namespace

InverseProblem build_problem(const Config& c, std::uint64_t seed)
{
  std::optional<LinearOperator> op;
  DenseArray x_true;
  std::string description;
  const std::string kind = c.get_string("problem", "kind", "deconv1d");
  Rng noise_rng = Rng(seed).stream("problem_noise");
  if (kind == "deconv1d") {
    const std::size_t n = c.get_size("problem", "n", 64);
    if (n < 8)
      throw ConfigError(fmt::format("{}: n must be at least 8", c.where("problem", "n")));
    const std::string signal = c.get_string("problem", "signal", "spikes");
    if (signal == "spikes")
      x_true = spike_signal(n);
    else if (signal == "bumps")
      x_true = bump_signal(n);
    else
      throw ConfigError(fmt::format("{}: signal must be spikes or bumps, got '{}'", c.where("problem", "signal"), signal));
    const std::size_t taps = c.get_size("operator", "taps", 5);
    const double width = c.get_double("operator", "kernel_sigma", 1.0);
    if (taps % 2 == 0 || taps > n)
      throw ConfigError(fmt::format("{}: taps must be odd and at most n", c.where("operator", "taps")));
    if (!(width > 0.0))
      throw ConfigError(fmt::format("{}: kernel_sigma must be positive", c.where("operator", "kernel_sigma")));
    op = make_convolution(gaussian_kernel_1d(taps, width), parse_boundary(c, "operator"), {n});
    description = fmt::format("1-D deconvolution, {} signal, n={}", signal, n);
  } else if (kind == "ct") {
    const std::size_t n = c.get_size("problem", "n", 64);
    const std::string phantom = c.get_string("problem", "phantom", "mini-shepp");
    x_true = make_phantom(phantom, n).image;
    const std::size_t angles = c.get_size("operator", "angles", 20);
    std::size_t detectors = c.get_size("operator", "detectors", 0);
    if (angles == 0)
      throw ConfigError(fmt::format("{}: need at least one angle", c.where("operator", "angles")));
    if (detectors == 0)
      detectors = static_cast<std::size_t>(std::ceil(std::sqrt(2.0) * static_cast<double>(n)));
    op = make_radon(n, uniform_angles(angles), detectors);
    description = fmt::format("toy CT, {} phantom n={}, {} angles", phantom, n, angles);
  } else {
    throw ConfigError(fmt::format("{}: problem kind must be deconv1d or ct, got '{}'", c.where("problem", "kind"), kind));
  }
  const NormEstimate ne = certify_norm(*op, PowerMethodOptions{2000, 1e-10, seed});
  if (!ne.converged)
    throw ConfigError("operator norm estimate did not converge");
  InverseProblem p{std::move(*op), std::move(x_true), {}, {}, std::move(description)};
  p.y_clean = p.a.apply(p.x_true);

  // deconv: absolute noise level; ct: relative to |y|
  const double noise = c.get_double("problem", "noise", kind == "ct" ? 0.02 : 0.01);
  if (!(noise >= 0.0))
    throw ConfigError(fmt::format("{}: noise must be nonnegative", c.where("problem", "noise")));
  DenseArray e = noise_rng.normal_array(p.y_clean.shape(), 1.0);
  const double scale = kind == "ct" ? noise * norm(p.y_clean) / norm(e) : noise;
  p.y_noisy = p.y_clean;
  axpy(scale, e, p.y_noisy);
  return p;
}

Functional build_regulariser(const Config& c)
{
  const std::string kind = c.get_string("regulariser", "kind", "mcp");
  Functional r;
  if (kind == "mcp")
    r = mcp(c.get_double("regulariser", "lambda", 0.05), c.get_double("regulariser", "a", 3.0));
  else if (kind == "l1")
    r = l1_norm(c.get_double("regulariser", "weight", 0.05));
  else if (kind == "quadratic")
    r = quadratic(c.get_double("regulariser", "scale", 1.0));
  else if (kind == "welsch")
    r = welsch(c.get_double("regulariser", "lambda", 0.01), c.get_double("regulariser", "scale", 0.5));
  else if (kind == "zero")
    r = zero_functional();
  else
    throw ConfigError(fmt::format("{}: regulariser kind must be mcp, l1, quadratic, welsch or zero, got '{}'",
                                  c.where("regulariser", "kind"), kind));
  const double extra = c.get_double("regulariser", "plus_quadratic", 0.0);
  if (extra < 0.0)
    throw ConfigError(fmt::format("{}: plus_quadratic must be nonnegative", c.where("regulariser", "plus_quadratic")));
  if (extra > 0.0)
    r = sum(r, quadratic(extra));
  return r;
}

// --- solve ------------------------------------------------------------------------

int cmd_solve(const Config& c, const fs::path& out, bool override_constraints)
{
  const std::uint64_t seed = global_seed(c);
  const InverseProblem prob = build_problem(c, seed);
  const Functional r = build_regulariser(c);
  const double alpha = c.get_double("solver", "alpha", 1.0);
  if (!(alpha > 0.0))
    throw ConfigError(fmt::format("{}: alpha must be positive", c.where("solver", "alpha")));
  const ConjugateFidelity cf = make_conjugate_fidelity(alpha, prob.y_noisy);
  const std::string solver = c.get_string("solver", "kind", "pdhgm");
  const std::size_t iters = c.get_size("solver", "iters", 1000);
  const double norm_a = prob.a.certified_norm();

  json summary = {{"command", "solve"}, {"problem", prob.description}, {"regulariser", r.name},
                  {"alpha", alpha},     {"solver", solver},            {"seed", seed}};
  int code = kExitOk;
  DenseArray x;
  if (solver == "pdhgm") {
    PdConfig cfg;
    const bool has_tau = c.has("solver", "tau"), has_sigma = c.has("solver", "sigma");
    if (has_tau != has_sigma)
      throw ConfigError(fmt::format("{}: give both tau and sigma or neither", c.where("solver", has_tau ? "tau" : "sigma")));
    if (has_tau) {
      cfg.tau = c.get_double("solver", "tau");
      cfg.sigma = c.get_double("solver", "sigma");
    } else {
      const StepSizes s = suggest_steps(r.rho_wc, cf.mu_fid, norm_a, c.get_double("solver", "margin", 0.9));
      cfg.tau = s.tau;
      cfg.sigma = s.sigma;
    }
    cfg.theta_relax = c.get_double("solver", "theta", 1.0);
    cfg.max_iters = iters;
    cfg.tol = c.get_double("solver", "tol", 0.0);
    cfg.inner_tol = c.get_double("solver", "inner_tol", 1e-8);
    cfg.divergence_bound = c.get_double("solver", "divergence_bound", 1e8);
    cfg.seed = seed;
    cfg.override_constraints = override_constraints;
    c.check_all_used();

    // guard before any iteration; the message names each violated condition
    const ConstraintReport report = check_constraints(cfg.tau, cfg.sigma, norm_a, r.rho_wc, cf.mu_fid);
    if (!report.ok() && !override_constraints) {
      std::string msg = "step sizes violate the descent conditions:";
      for (const auto& v : report.violations())
        msg += " " + v + ";";
      throw ConfigError(fmt::format("{}: {}", c.where("solver", has_tau ? "tau" : "alpha"), msg));
    }

    const PdProblem pd{prob.a, r, cf, DenseArray::zeros_like(prob.x_true), DenseArray::zeros_like(prob.y_noisy)};
    const SolverTrace trace = run_pdhgm(pd, cfg);
    x = trace.final_state.x;
    io::write_file_atomic(out / "trace.csv", trace_csv(trace));

    const Certificate descent = descent_certificate(trace);
    json certs = {{"descent", certificate_json(descent)}};
    bool pass = descent.pass;
    if (trace.theta == 1.0 && trace.records.size() >= 2 && certificate_nu(trace) > 0.0) {
      const ResidualCertificate rc = min_residual_certificate(trace, certificate_nu(trace));
      certs["residual"] = certificate_json(rc.certificate);
      certs["residual"]["worst_ratio_residual_m"] = rc.worst_ratio_residual_m;
      pass = pass && rc.pass;
    }
    const SquareSummability ss = square_summability(trace);
    certs["square_summability"] = {{"sum_dx2", ss.sum_dx2}, {"sum_dy2", ss.sum_dy2}, {"tail_max", ss.tail_max}};
    summary["parameters"] = trace_parameters(trace);
    summary["iterations"] = trace.iterations();
    summary["converged"] = trace.converged;
    summary["final_residual_m"] = trace.final_residual();
    summary["certificates"] = certs;
    summary["constraints"] = {{"tau_sigma_norm2", report.tau_sigma_norm2},
                              {"tau_rho", report.tau_rho},
                              {"mu_sigma", report.mu_sigma},
                              {"ok", report.ok()}};
    // outside the constraint regime the run is a data point, not a claim
    if (report.ok() && !pass)
      code = kExitCertificate;
  } else if (solver == "subgradient") {
    const double step = c.get_double("solver", "step", 0.9 * alpha / (norm_a * norm_a));
    c.check_all_used();
    const SubgradientTrace t = subgradient_solve(r, cf, prob.a, DenseArray::zeros_like(prob.x_true), step, iters);
    x = t.best_x;
    std::string csv = "k,objective\n";
    for (std::size_t k = 0; k < t.objective.size(); ++k)
      csv += fmt::format("{},{:.17g}\n", k, t.objective[k]);
    io::write_file_atomic(out / "trace.csv", csv);
    summary["iterations"] = iters;
    summary["best_k"] = t.best_k;
    summary["best_objective"] = t.best_objective;
  } else {
    throw ConfigError(fmt::format("{}: solver kind must be pdhgm or subgradient, got '{}'", c.where("solver", "kind"), solver));
  }

  summary["objective"] = primal_objective(x, r, cf, prob.a);
  summary["relative_error"] = distance(x, prob.x_true) / std::max(norm(prob.x_true), 1e-300);
  if (x.rank() == 2)
    summary["psnr"] = psnr(prob.x_true, x);
  write_array(out / "reconstruction", x);
  write_json(out / "summary.json", summary);
  return code;
}

// --- regpath ------------------------------------------------------------------------

int cmd_regpath(const Config& c, const fs::path& out)
{
  const std::uint64_t seed = global_seed(c);
  const InverseProblem prob = build_problem(c, seed);
  const Functional r = build_regulariser(c);
  RegPathConfig cfg;
  cfg.delta0 = c.get_double("regpath", "delta0", 0.1);
  cfg.decay = c.get_double("regpath", "decay", 0.5);
  cfg.levels = c.get_size("regpath", "levels", 7);
  cfg.p = c.get_double("regpath", "p", 2.0);
  const std::string rule = c.get_string("regpath", "rule", "linear");
  const double rc = c.get_double("regpath", "c", 1.0);
  if (rule == "linear")
    cfg.alpha_rule = alpha_linear(rc);
  else if (rule == "constant")
    cfg.alpha_rule = alpha_constant(rc);
  else if (rule == "power")
    cfg.alpha_rule = alpha_power(rc, c.get_double("regpath", "q", 1.0));
  else
    throw ConfigError(fmt::format("{}: rule must be linear, constant or power, got '{}'", c.where("regpath", "rule"), rule));
  const std::string solver = c.get_string("regpath", "solver", "subgradient");
  if (solver == "pdhgm")
    cfg.solve.solver = LevelSolver::pdhgm;
  else if (solver == "subgradient")
    cfg.solve.solver = LevelSolver::subgradient;
  else
    throw ConfigError(fmt::format("{}: solver must be pdhgm or subgradient", c.where("regpath", "solver")));
  cfg.solve.max_iters = c.get_size("regpath", "max_iters", 20000);
  cfg.solve.tol = c.get_double("regpath", "tol", 1e-9);
  cfg.solve.step_margin = c.get_double("regpath", "step_margin", 0.9);
  cfg.noise_seed = seed;
  c.check_all_used();
  if (cfg.levels == 0)
    throw ConfigError(fmt::format("{}: need at least one level", c.where("regpath", "levels")));

  const RegPathProblem rp{prob.a, r, prob.x_true, prob.y_clean, DenseArray::zeros_like(prob.x_true)};
  const RegPathReport rep = run_regpath(rp, cfg);
  io::write_file_atomic(out / "regpath.csv", regpath_csv(rep));
  const auto& last = rep.levels.back();
  json summary = {{"command", "regpath"},
                  {"problem", prob.description},
                  {"regulariser", r.name},
                  {"alpha_rule", cfg.alpha_rule.name},
                  {"audit",
                   {{"pass", rep.audit.pass},
                    {"horizon", rep.audit.horizon},
                    {"alpha_ratio", rep.audit.alpha_ratio},
                    {"data_ratio", rep.audit.data_ratio}}},
                  {"levels", rep.levels.size()},
                  {"data_residual_monotone", rep.data_residual_monotone},
                  {"final_feasibility", last.criticality.feasibility},
                  {"final_tangential", last.criticality.tangential}};
  write_json(out / "summary.json", summary);
  for (const auto& l : rep.levels)
    if (l.diverged)
      throw DivergenceError(fmt::format("regpath: level {} diverged", l.level));
  return kExitOk;
}

// --- train-toy ----------------------------------------------------------------------

namespace {
std::vector<std::size_t> widths(const Config& c, const std::string& key, std::vector<double> fallback)
{
  std::vector<std::size_t> out;
  for (double v : c.get_list("train", key, fallback)) {
    if (!(v >= 1.0) || v != std::floor(v))
      throw ConfigError(fmt::format("{}: widths must be positive integers", c.where("train", key)));
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}
} // namespace

int cmd_train_toy(const Config& c, const fs::path& out)
{
  using namespace learn;
  const std::uint64_t seed = global_seed(c);
  const std::size_t n_per_arm = c.get_size("train", "n_per_arm", 500);
  const double noise_sigma = c.get_double("train", "noise_sigma", 0.3);
  TrainSchedule s;
  s.epochs_phase1 = c.get_size("train", "epochs_phase1", 20);
  s.epochs_phase2 = c.get_size("train", "epochs_phase2", 380);
  s.lambda_phase1 = c.get_double("train", "lambda_phase1", 0.1);
  s.lambda_phase2 = c.get_double("train", "lambda_phase2", 10.0);
  s.learning_rate = c.get_double("train", "learning_rate", 1e-2);
  s.batch_size = c.get_size("train", "batch_size", 64);
  s.validation_size = c.get_size("train", "validation_size", 256);
  s.seed = seed;
  AwcrArch arch;
  arch.smooth_widths = widths(c, "smooth_widths", {16, 16});
  arch.icnn_hidden = widths(c, "icnn_hidden", {8});
  arch.slope = c.get_double("train", "slope", 0.2);
  const bool baseline = c.get_bool("train", "baseline", false);
  AwcrArch base_arch = arch;
  base_arch.smooth_widths.clear();
  base_arch.icnn_hidden = widths(c, "baseline_hidden", {19, 19});
  const std::size_t grid_n = c.get_size("train", "grid_n", 64);
  const double box = c.get_double("train", "box", 3.0);
  c.check_all_used();
  if (!(box > 0.0))
    throw ConfigError(fmt::format("{}: box must be positive", c.where("train", "box")));

  const SpiralFixture fx = spiral_fixture(n_per_arm, noise_sigma, seed);
  const GridBox gb{-box, box, -box, box};
  json summary = {{"command", "train-toy"}, {"seed", seed}, {"n_per_arm", n_per_arm}, {"noise_sigma", noise_sigma}};

  auto train_one = [&](const AwcrArch& a, const std::string& tag) {
    const AwcrParams init = init_awcr(a, seed);
    TrainResult res;
    try {
      res = train_awcr(init, fx.real, fx.noisy, s);
    } catch (const TrainingDiverged& e) {
      save_checkpoint(out / (tag + ".ckpt"), e.last_checkpoint(), {{"seed", seed}, {"diverged", true}});
      throw;
    }
    const AlignmentReport al = distance_alignment(
      [&](const Vec& x) { return awcr_eval(res.params, x); }, fx.oracle, gb, grid_n);
    json align = {{"correlation", al.correlation}, {"sup_error", al.sup_error}, {"a", al.a},
                  {"b", al.b},                     {"points", al.points}};
    save_checkpoint(out / (tag + ".ckpt"), res.params,
                    {{"seed", seed}, {"epochs", res.log.size()}, {"alignment", align}});
    io::write_file_atomic(out / (tag + "_log.csv"), training_log_csv(res.log));
    summary[tag] = {{"parameters", res.params.parameter_count()},
                    {"modulus", modulus_bound(res.params).to_json()},
                    {"initial_validation", res.initial_validation},
                    {"alignment", align}};
  };
  train_one(arch, "awcr");
  if (baseline)
    train_one(base_arch, "icnn");
  write_json(out / "summary.json", summary);
  return kExitOk;
}

// --- counterexample -------------------------------------------------------------

int cmd_counterexample(const Config& c, const fs::path& out)
{
  const std::vector<double> gammas = c.get_list("counterexample", "gammas", std::vector<double>{3.0, 4.0, 6.0});
  const std::size_t levels = c.get_size("counterexample", "levels", 6);
  const double step = c.get_double("counterexample", "step", 1e-3);
  const int control = static_cast<int>(c.get_size("counterexample", "control_count", 5));
  c.check_all_used();
  if (!(step > 0.0))
    throw ConfigError(fmt::format("{}: step must be positive", c.where("counterexample", "step")));

  std::string csv = "gamma,n,expected,found,rel_error\n";
  json summary = {{"command", "counterexample"}};
  json per_gamma = json::array();
  for (double g : gammas) {
    if (!(g > 2.0))
      throw ConfigError(fmt::format("{}: every gamma must exceed 2", c.where("counterexample", "gammas")));
    const double m = g / (g - 2.0);
    const double top = std::pow(m, static_cast<double>(levels));
    const Functional f = sum(quadratic(1.0), appendix_c_functional(g));
    const auto pts = scan_critical_points_1d(f, ScanOptions{0.9, top * 1.01, step, 1e-9});
    std::size_t matched = 0;
    double worst = 0.0;
    for (std::size_t k = 0; k <= levels; ++k) {
      const double expect = std::pow(m, static_cast<double>(k));
      double best = NAN, err = INFINITY;
      for (double p : pts)
        if (std::abs(p - expect) / expect < err) {
          err = std::abs(p - expect) / expect;
          best = p;
        }
      if (err <= 1e-6)
        ++matched;
      worst = std::max(worst, err);
      csv += fmt::format("{:.17g},{},{:.17g},{:.17g},{:.17g}\n", g, k, expect, best, err);
    }
    const SplitRegulariser reg{appendix_c_functional(g), quadratic(1.0), g, 1.0};
    per_gamma.push_back({{"gamma", g},
                         {"m", m},
                         {"points_found", pts.size()},
                         {"matched", matched},
                         {"expected", levels + 1},
                         {"worst_rel_error", worst},
                         {"largest_point", pts.empty() ? 0.0 : pts.back()},
                         // neither radius applies: gamma >= 2 mu and the weakly convex part is not Lipschitz
                         {"bound_applies", reg.sqrt_case_applies() || reg.lipschitz_case_applies()}});
  }
  summary["ladder"] = per_gamma;

  // bounded reference: |x| + cos x + x^2/2 with the Lipschitz radius
  {
    const SplitRegulariser reg = SplitRegulariser::from_parts(abs_plus_cos(), quadratic(1.0));
    const CriticalPointBound b = critical_point_bound(reg, DenseArray::vector({0.0}));
    const auto pts = scan_critical_points_1d(reg.combined(), ScanOptions{-100.0, 100.0, 1e-3, 1e-9});
    const Certificate cert = critical_point_certificate("abs_plus_cos_bound", b, 0.0, pts);
    summary["bounded_reference"] = {{"radius", b.radius}, {"points", pts}, {"certificate", to_json(cert)}};
  }

  std::string pp = "k,start,limit,critical_point\n";
  for (const auto& row : unbounded_critical_control(control)) {
    pp += fmt::format("{},{:.17g},{:.17g},{:.17g}\n", row.k, row.start, row.limit, row.critical_point);
  }
  io::write_file_atomic(out / "counterexample.csv", csv);
  io::write_file_atomic(out / "proximal_point.csv", pp);
  write_json(out / "summary.json", summary);
  return kExitOk;
}

// --- diagnose -------------------------------------------------------------------

int cmd_diagnose(const fs::path& trace_path, const fs::path& out)
{
  SolverTrace trace;
  try {
    trace = read_trace_csv(io::read_file(trace_path));
  } catch (const IoError& e) {
    throw ConfigError(fmt::format("diagnose: {}", e.what()));
  }
  const fs::path summary_path = trace_path.parent_path() / "summary.json";
  json params;
  try {
    params = json::parse(io::read_file(summary_path)).at("parameters");
  } catch (const std::exception& e) {
    throw ConfigError(fmt::format("diagnose: cannot read step parameters from {}: {}", summary_path.string(), e.what()));
  }
  apply_trace_parameters(params, trace);
  if (trace.records.size() < 2)
    throw ConfigError("diagnose: trace needs at least 2 iterations");

  json certs;
  bool pass = true;
  const Certificate d = descent_certificate(trace);
  certs["descent"] = to_json(d);
  pass = pass && d.pass;
  const double nu = certificate_nu(trace);
  if (trace.theta == 1.0 && nu > 0.0) {
    const ResidualCertificate rc = min_residual_certificate(trace, nu);
    certs["residual"] = to_json(rc.certificate);
    pass = pass && rc.pass;
  } else {
    certs["residual"] = {{"skipped", "needs theta_relax = 1 and nu > 0"}};
  }
  const SquareSummability ss = square_summability(trace);
  certs["square_summability"] = {{"sum_dx2", ss.sum_dx2}, {"sum_dy2", ss.sum_dy2}, {"tail_max", ss.tail_max}};
  certs["constraints_ok"] = trace.constraints_ok;
  certs["nu"] = nu;
  write_json(out / "certificates.json", certs);
  return trace.constraints_ok && !pass ? kExitCertificate : kExitOk;
}

// --- phantom ------------------------------------------------------------------

int cmd_phantom(const Config& c, const fs::path& out)
{
  const std::string kind = c.get_string("phantom", "kind", "mini-shepp");
  const std::size_t n = c.get_size("phantom", "n", 64);
  c.check_all_used();
  const Phantom p = make_phantom(kind, n);
  write_array(out / "phantom", p.image);
  write_json(out / "phantom.json", {{"kind", kind}, {"n", n}, {"description", p.description}});
  return kExitOk;
}

// --- dispatch -------------------------------------------------------------------

int run(const RunOptions& o)
{
  try {
    Config c = o.config ? Config::load(*o.config) : Config::parse("", "<defaults>");
    if (o.seed)
      c.set("", "seed", std::to_string(*o.seed));
    if (o.phantom_kind)
      c.set("phantom", "kind", *o.phantom_kind);
    if (o.phantom_n)
      c.set("phantom", "n", std::to_string(*o.phantom_n));
    if (o.override_constraints && o.command != "solve")
      throw ConfigError("--override-constraints only applies to solve");
    std::error_code ec;
    fs::create_directories(o.out, ec);
    if (ec)
      throw ConfigError(fmt::format("cannot create output directory {}: {}", o.out.string(), ec.message()));

    if (o.command == "solve")
      return cmd_solve(c, o.out, o.override_constraints);
    if (o.command == "regpath")
      return cmd_regpath(c, o.out);
    if (o.command == "train-toy")
      return cmd_train_toy(c, o.out);
    if (o.command == "counterexample")
      return cmd_counterexample(c, o.out);
    if (o.command == "diagnose")
      return cmd_diagnose(o.trace, o.out);
    if (o.command == "phantom")
      return cmd_phantom(c, o.out);
    throw ConfigError(fmt::format("unknown command '{}'", o.command));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ShapeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NonproxableError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const learn::TrainingDiverged& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const CertificateError& e) {
    std::cerr << "certificate: " << e.what() << "\n";
    return kExitCertificate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

} // namespace wcreg::cli
