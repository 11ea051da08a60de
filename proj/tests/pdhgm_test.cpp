#include "fixtures.hpp"

#include "wcreg/diagnostics.hpp"
#include "wcreg/errors.hpp"
#include "wcreg/mnorm.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

using namespace wcreg;

namespace {
LinearOperator scalar_op(double v)
{
  LinearOperator a = make_matrix(1, 1, {v});
  certify_norm(a);
  return a;
}

DenseArray vec1(double v) { return DenseArray::vector({v}); }
} // namespace

TEST_CASE("step size suggestion")
{
  const StepSizes a = suggest_steps(0.0, 6.0, 1.0, 0.9);
  CHECK(a.tau == doctest::Approx(1.8));
  CHECK(a.sigma == doctest::Approx(std::sqrt(0.5 / 1.8)));
  CHECK(check_constraints(a.tau, a.sigma, 1.0, 0.0, 6.0).ok());
  CHECK(suggest_steps(1.0, 6.0, 1.0, 0.99).tau == doctest::Approx(0.99));
  const StepSizes c = suggest_steps(0.0, 1.0, 10.0);
  CHECK(c.tau <= 1.0 / 300.0);
  CHECK(check_constraints(c.tau, c.sigma, 10.0, 0.0, 1.0).ok());
  CHECK_THROWS_AS(suggest_steps(0.0, 1.0, 1.0, 1.5), ConfigError);
  CHECK_THROWS_AS(suggest_steps(0.0, 0.0, 1.0), ConfigError);

  const ConstraintReport bad = check_constraints(5.0, 1.0, 1.0, 1.0, 1.0);
  CHECK_FALSE(bad.ok());
  CHECK(bad.violations().size() == 3);
}

TEST_CASE("single step")
{
  PdConfig cfg;
  cfg.tau = 0.5;
  cfg.sigma = 0.5;
  SUBCASE("decoupled dual contraction")
  {
    const ConjugateFidelity cf = make_conjugate_fidelity(1.0, vec1(0.4));
    const ProductPoint z{vec1(0.7), vec1(-1.0)};
    const ProductPoint n = pdhgm_step(z, zero_functional(), cf, make_zero({1}, {1}), cfg);
    CHECK(n.x == z.x);
    CHECK(n.y[0] == doctest::Approx(conj_prox(cf, 0.5, z.y)[0]));
  }
  SUBCASE("one-dimensional chain")
  {
    const ConjugateFidelity cf = make_conjugate_fidelity(1.0, vec1(1.0));
    const ProductPoint n = pdhgm_step({vec1(1.0), vec1(1.0)}, quadratic(1.0), cf, scalar_op(1.0), cfg);
    // x+ = argmin x^2/2 + (x - 0.5)^2, xbar = 2 x+ - 1, y+ = argmin y^2/2 + y + (y - (1 + xbar/2))^2
    double bx = 0, by = 0, vx = INFINITY, vy = INFINITY;
    for (double x = -2; x <= 2; x += 1e-5)
      if (double v = 0.5 * x * x + (x - 0.5) * (x - 0.5); v < vx) {
        vx = v;
        bx = x;
      }
    const double xbar = 2 * bx - 1;
    for (double y = -2; y <= 2; y += 1e-5)
      if (double v = 0.5 * y * y + y + (y - (1 + 0.5 * xbar)) * (y - (1 + 0.5 * xbar)); v < vy) {
        vy = v;
        by = y;
      }
    CHECK(n.x[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(n.y[0] == doctest::Approx(2.0 / 9.0).epsilon(1e-12));
    CHECK(std::abs(n.x[0] - bx) <= 2e-5);
    CHECK(std::abs(n.y[0] - by) <= 2e-5);
  }
  SUBCASE("saddle point is a fixed point")
  {
    // R = |x|^2/2, F* = alpha/2 |y|^2 + <y, b>: x = -A^T y, (A A^T + alpha I) y = -b
    Rng rng(6);
    const std::vector<double> m = rng.normal_array({6}).storage();
    const DenseArray b = rng.normal_array({3});
    const double alpha = 0.5;
    Eigen::Matrix<double, 3, 2, Eigen::RowMajor> am(m.data());
    const Eigen::Vector3d ye = (am * am.transpose() + alpha * Eigen::Matrix3d::Identity())
                                 .ldlt()
                                 .solve(-Eigen::Vector3d(b[0], b[1], b[2]));
    const Eigen::Vector2d xe = -am.transpose() * ye;
    const ProductPoint z{DenseArray::vector({xe(0), xe(1)}), DenseArray::vector({ye(0), ye(1), ye(2)})};
    cfg.tau = 0.3;
    cfg.sigma = 0.7;
    const ProductPoint n =
      pdhgm_step(z, quadratic(1.0), make_conjugate_fidelity(alpha, b), make_matrix(3, 2, m), cfg);
    CHECK(distance(n.x, z.x) <= 1e-10);
    CHECK(distance(n.y, z.y) <= 1e-10);
  }
}

TEST_CASE("lagrangian")
{
  const ConjugateFidelity cf = make_conjugate_fidelity(1.5, vec1(0.3));
  CHECK(lagrangian(vec1(0), vec1(0), mcp(1, 2), cf, scalar_op(2.0)) == 0.0);
  const double r = 0.7 - 0.49 / 4.0, coupling = 1.4 * -0.2, fstar = 0.75 * 0.04 - 0.2 * 0.3;
  CHECK(std::abs(lagrangian(vec1(0.7), vec1(-0.2), mcp(1, 2), cf, scalar_op(2.0)) - (r + coupling - fstar)) <= 1e-12);
}

TEST_CASE("solver runs")
{
  SUBCASE("convex quadratic reaches the saddle point")
  {
    const PdProblem p{scalar_op(1.0), quadratic(1.0), make_conjugate_fidelity(1.0, vec1(1.0)), vec1(0), vec1(0)};
    PdConfig cfg = fixtures::suggested(p, 2000);
    cfg.tol = 1e-9;
    const SolverTrace t = run_pdhgm(p, cfg);
    CHECK(t.final_residual() < 1e-8);
    CHECK(t.final_state.x[0] == doctest::Approx(0.5).epsilon(1e-7));
    CHECK(t.final_state.y[0] == doctest::Approx(-0.5).epsilon(1e-7));
  }
  SUBCASE("MCP deconvolution descends")
  {
    const auto d = fixtures::spike_deconvolution();
    const PdProblem p = fixtures::mcp_problem(d);
    const SolverTrace t = run_pdhgm(p, fixtures::suggested(p, 1000));
    REQUIRE(t.records.size() == 1000);
    CHECK(t.constraints_ok);
    for (std::size_t k = 1; k < t.records.size(); ++k)
      CHECK(t.records[k].descent_margin >= -1e-10);
    CHECK(std::isnan(t.records[0].descent_margin));
    // two assemblies of the same element of T(z^{k+1})
    for (const auto& r : t.records)
      CHECK(std::abs(r.residual_m - r.residual_t) <= 1e-9 + 1e-6 * r.residual_m);
    CHECK(descent_certificate(t).pass);
  }
  SUBCASE("A = 0 leaves x in place, y contracts")
  {
    LinearOperator z = make_zero({1}, {1});
    certify_norm(z);
    const PdProblem p{z, zero_functional(), make_conjugate_fidelity(4.0, vec1(1.0)), vec1(0.3), vec1(0)};
    PdConfig cfg;
    cfg.tau = 1.0;
    cfg.sigma = 1.0;
    cfg.max_iters = 30;
    cfg.keep_history = true;
    const SolverTrace t = run_pdhgm(p, cfg);
    CHECK(t.final_state.x[0] == 0.3);
    for (std::size_t k = 1; k + 1 < t.history.size() && k < 15; ++k) {
      const double ratio = std::abs(t.history[k + 1].y[0] + 0.25) / std::abs(t.history[k].y[0] + 0.25);
      CHECK(ratio == doctest::Approx(0.2).epsilon(1e-6));
    }
  }
  SUBCASE("guards")
  {
    const PdProblem p{scalar_op(1.0), quadratic(1.0), make_conjugate_fidelity(1.0, vec1(1.0)), vec1(0), vec1(0)};
    PdConfig cfg;
    cfg.tau = 2.0;
    cfg.sigma = 2.0;
    CHECK_THROWS_AS(run_pdhgm(p, cfg), ConfigError);
    const PdProblem unnormed{make_matrix(1, 1, {1.0}), quadratic(1.0), p.cf, vec1(0), vec1(0)};
    CHECK_THROWS_AS(run_pdhgm(unnormed, fixtures::suggested(p, 10)), ConfigError);
    PdConfig tight = fixtures::suggested(p, 10);
    tight.divergence_bound = 1e-3;
    const PdProblem far{p.a, p.r, p.cf, vec1(5.0), vec1(0)};
    CHECK_THROWS_AS(run_pdhgm(far, tight), DivergenceError);
  }
}

TEST_CASE("trace csv round trip")
{
  const auto d = fixtures::spike_deconvolution();
  const PdProblem p = fixtures::mcp_problem(d);
  const SolverTrace t = run_pdhgm(p, fixtures::suggested(p, 50));
  const std::string csv = trace_csv(t);
  CHECK(csv.rfind("k,L,lyapunov,descent_margin,residual_M,dx_norm,dy_norm,gap,step_m\n", 0) == 0);
  SolverTrace back = read_trace_csv(csv);
  apply_trace_parameters(trace_parameters(t), back);
  REQUIRE(back.records.size() == t.records.size());
  for (std::size_t k = 0; k < t.records.size(); ++k) {
    CHECK(back.records[k].lyapunov == t.records[k].lyapunov);
    CHECK(back.records[k].step_m == t.records[k].step_m);
    CHECK(back.records[k].gap == t.records[k].gap);
  }
  CHECK(back.tau == t.tau);
  CHECK(back.sigma == t.sigma);
  CHECK(certificate_nu(back) == certificate_nu(t));
  CHECK(trace_csv(back) == csv);
}

TEST_CASE("residual certificate")
{
  const auto d = fixtures::spike_deconvolution();
  const PdProblem p = fixtures::mcp_problem(d);
  const SolverTrace t = run_pdhgm(p, fixtures::suggested(p, 500));
  const double nu = certificate_nu(t);
  CHECK(nu > 0.0);
  const ResidualCertificate rc = min_residual_certificate(t, nu);
  CHECK(rc.pass);
  CHECK(rc.worst_ratio <= 1.0);

  SUBCASE("single term")
  {
    SolverTrace s;
    s.theta = 1.0;
    s.records.resize(2);
    s.records[0].lyapunov = 3.0;
    s.records[1].lyapunov = 2.0;
    const double bound = 2.0 / std::sqrt(0.5) * std::sqrt(1.0);
    s.records[1].step_m = 0.999 * bound;
    CHECK(min_residual_certificate(s, 0.5).pass);
    s.records[1].step_m = 1.001 * bound;
    const ResidualCertificate f = min_residual_certificate(s, 0.5);
    CHECK_FALSE(f.pass);
    CHECK(f.first_violation == 1);
  }
  SUBCASE("refusals")
  {
    SolverTrace s = t;
    s.theta = 0.5;
    CHECK_THROWS_AS(min_residual_certificate(s, nu), CertificateError);
    CHECK_THROWS_AS(min_residual_certificate(t, 0.0), ConfigError);
  }
  SUBCASE("override run is only recorded")
  {
    PdConfig cfg = fixtures::suggested(p, 300);
    cfg.sigma = 2.5 / p.cf.mu_fid; // mu sigma below 3
    cfg.override_constraints = true;
    const SolverTrace o = run_pdhgm(p, cfg);
    CHECK_FALSE(o.constraints_ok);
    MESSAGE("override run descent pass: " << descent_certificate(o).pass);
  }
}

TEST_CASE("square summability")
{
  const auto d = fixtures::spike_deconvolution();
  const PdProblem p = fixtures::mcp_problem(d);
  const SolverTrace t = run_pdhgm(p, fixtures::suggested(p, 3000));
  const SquareSummability s = square_summability(t);
  CHECK(std::isfinite(s.sum_dx2));
  CHECK(std::isfinite(s.sum_dy2));
  CHECK(s.tail_max < 1e-12);
}

TEST_CASE("ergodic gap")
{
  const std::size_t n = 16;
  LinearOperator a = make_convolution(gaussian_kernel_1d(5, 1.0), Boundary::zero, {n});
  certify_norm(a);
  Rng rng(2);
  const PdProblem p{a, sum(mcp(0.05, 3.0), quadratic(1.0)), make_conjugate_fidelity(1.0, rng.normal_array({n})),
                    DenseArray({n}), DenseArray({n})};
  PdConfig cfg = fixtures::suggested(p, 200);
  cfg.keep_history = true;
  const SolverTrace t = run_pdhgm(p, cfg);
  PdConfig ref = fixtures::suggested(p, 20000);
  ref.tol = 1e-13;
  const ProductPoint zhat = run_pdhgm(p, ref).final_state;

  const ErgodicReport at_hat = ergodic_gap(t, p, zhat.x, zhat.y, zhat);
  CHECK(std::abs(at_hat.limit) <= 1e-14);
  CHECK(std::abs(at_hat.raw_gap.back()) < std::abs(at_hat.raw_gap.front()));
  CHECK(std::abs(at_hat.raw_gap.back()) < 0.05);

  // convex case
  const PdProblem q{a, quadratic(1.0), p.cf, p.x0, p.y0};
  const SolverTrace tq = run_pdhgm(q, cfg);
  ref.max_iters = 20000;
  const ProductPoint qhat = run_pdhgm(q, ref).final_state;
  const ErgodicReport cq = ergodic_gap(tq, q, DenseArray({n}), qhat.y, qhat);
  CHECK(cq.offset <= 0.0);

  PdConfig shorter = cfg;
  shorter.max_iters = 50;
  CHECK_THROWS_AS(ergodic_gap(run_pdhgm(p, shorter), p, zhat.x, zhat.y, zhat), ConfigError);
}

TEST_CASE("rate classification")
{
  SUBCASE("strongly convex instance is linear")
  {
    const PdProblem p{scalar_op(1.0), quadratic(1.0), make_conjugate_fidelity(1.0, vec1(1.0)), vec1(0), vec1(0)};
    PdConfig cfg = fixtures::suggested(p, 200);
    cfg.keep_history = true;
    const SolverTrace t = run_pdhgm(p, cfg);
    const RateReport r = rate_classify(t, p.a, {vec1(0.5), vec1(-0.5)});
    CHECK(r.kind == RateKind::linear);
    CHECK(r.rate > 0.0);
    CHECK(r.rate < 1.0);
  }
  SUBCASE("soft thresholding terminates")
  {
    LinearOperator z = make_zero({1}, {1});
    certify_norm(z);
    const PdProblem p{z, l1_norm(1.0), make_conjugate_fidelity(1.0, vec1(0.0)), vec1(1.0), vec1(0)};
    PdConfig cfg;
    cfg.tau = 0.3;
    cfg.sigma = 4.0;
    cfg.max_iters = 10;
    cfg.keep_history = true;
    const RateReport r = rate_classify(run_pdhgm(p, cfg), z, {vec1(0), vec1(0)});
    CHECK(r.kind == RateKind::finite);
    CHECK(r.finite_index == 4);
  }
  SUBCASE("synthetic power law")
  {
    std::vector<double> d;
    for (int k = 1; k <= 200; ++k)
      d.push_back(std::pow(k, -2.0));
    const RateReport r = rate_classify(d);
    CHECK(r.kind == RateKind::power);
    CHECK(r.exponent == doctest::Approx(-2.0).epsilon(0.025));
  }
  SUBCASE("divergent sequence")
  {
    CHECK(rate_classify({1.0, 2.0, 4.0, 8.0}).kind == RateKind::inconclusive);
    CHECK(to_string(RateKind::inconclusive) == "inconclusive");
  }
}

TEST_CASE("subgradient baseline")
{
  const LinearOperator one = scalar_op(1.0);
  const ConjugateFidelity cf = make_conjugate_fidelity(1.0, vec1(1.0));
  const SubgradientTrace s = subgradient_solve(quadratic(1.0), cf, one, vec1(0), 0.5, 200);
  CHECK(std::abs(s.final_x[0] - 0.5) <= 1e-6);
  const SubgradientTrace still = subgradient_solve(quadratic(1.0), cf, one, vec1(0.5), 0.5, 20);
  for (double v : still.objective)
    CHECK(v == still.objective.front());

  const auto d = fixtures::spike_deconvolution();
  const PdProblem p = fixtures::mcp_problem(d);
  const SolverTrace t = run_pdhgm(p, fixtures::suggested(p, 3000));
  const double jp = primal_objective(t.final_state.x, p.r, p.cf, p.a);
  // fixed steps near 1/|A|^2 stall on the l1 kinks; a small step needs a long run
  const SubgradientTrace g = subgradient_solve(p.r, p.cf, p.a, DenseArray({64}), 1e-3, 200000);
  CHECK(std::abs(g.best_objective - jp) <= 0.01 * std::abs(jp));
}
