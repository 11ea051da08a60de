#pragma once

#include "wcreg/certificate.hpp"
#include "wcreg/fidelity.hpp"
#include "wcreg/functional.hpp"
#include "wcreg/linear_operator.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace wcreg {

struct PdConfig
{
  double tau = 0.0;
  double sigma = 0.0;
  /// Primal overrelaxation; the descent theory needs 1, 0 gives Arrow-Hurwicz.
  double theta_relax = 1.0;
  std::size_t max_iters = 1000;
  /// Stop once residual_M drops below this (0 runs all iterations).
  double tol = 0.0;
  double inner_tol = 1e-8;
  std::uint64_t seed = 0;
  bool override_constraints = false;
  double divergence_bound = 1e8;
  /// Keep every iterate (needed by ergodic_gap with arbitrary probes and rate_classify).
  bool keep_history = false;
  /// Off skips the gap column and the second residual route (both left at 0).
  bool full_diagnostics = true;
};

/// The three step-size conditions of the descent theorem.
struct ConstraintReport
{
  double tau_sigma_norm2 = 0.0; // tau sigma |A|^2, must be < 1
  double tau_rho = 0.0;         // must be < 1
  double mu_sigma = 0.0;        // must be > 3
  bool ok() const { return tau_sigma_norm2 < 1.0 && tau_rho < 1.0 && mu_sigma > 3.0; }
  /// Human-readable names of the violated conditions.
  std::vector<std::string> violations() const;
};

ConstraintReport check_constraints(double tau, double sigma, double norm_a, double rho, double mu);

struct StepSizes
{
  double tau = 0.0;
  double sigma = 0.0;
};

/// tau = margin min{1/rho, mu/(3|A|^2)}, sigma = sqrt((3/mu) / (tau |A|^2)).
StepSizes suggest_steps(double rho, double mu_fid, double norm_a, double margin = 0.9);

/// min R(x) + F(Ax) in saddle form R(x) + <Ax, y> - F*(y).
struct PdProblem
{
  LinearOperator a;
  Functional r;
  ConjugateFidelity cf;
  DenseArray x0;
  DenseArray y0;
};

/// x+ = prox_{tau R}(x - tau A*y), y+ = prox_{sigma F*}(y + sigma A(x+ + theta (x+ - x))).
ProductPoint pdhgm_step(const ProductPoint& z, const Functional& r, const ConjugateFidelity& cf,
                        const LinearOperator& a, const PdConfig& cfg);

/// R(x) + <Ax, y> - F*(y)
double lagrangian(const DenseArray& x, const DenseArray& y, const Functional& r,
                  const ConjugateFidelity& cf, const LinearOperator& a);

/// R(x) + F(Ax)
double primal_objective(const DenseArray& x, const Functional& r, const ConjugateFidelity& cf,
                        const LinearOperator& a);

/// Iteration k maps z^k to z^{k+1}.
struct TraceRecord
{
  std::size_t k = 0;
  /// L(z^{k+1})
  double lagrangian = 0.0;
  /// Lyapunov value at (z^{k+1}, z^k)
  double lyapunov = 0.0;
  /// Slack in the descent inequality between iterations k-1 and k; NaN for k = 0.
  double descent_margin = 0.0;
  /// Euclidean norm of M(z^k - z^{k+1})
  double residual_m = 0.0;
  /// Same element of T(z^{k+1}) assembled from the prox optimality conditions
  double residual_t = 0.0;
  /// |z^k - z^{k+1}|_M
  double step_m = 0.0;
  double dx_norm = 0.0;
  double dy_norm = 0.0;
  /// L(xbar^{k+1}, y^0) - L(x^0, ybar^{k+1}) with running means over z^1..z^{k+1}
  double gap = 0.0;
};

struct SolverTrace
{
  std::vector<TraceRecord> records;
  ProductPoint initial;
  ProductPoint final_state;
  /// z^0, z^1, ... when PdConfig::keep_history is set.
  std::vector<ProductPoint> history;
  double tau = 0.0;
  double sigma = 0.0;
  double theta = 1.0;
  double rho = 0.0;
  double mu = 0.0;
  double norm_a = 0.0;
  bool constraints_ok = false;
  bool converged = false;
  std::size_t iterations() const { return records.size(); }
  double final_residual() const { return records.empty() ? 0.0 : records.back().residual_m; }
};

/// Runs the modified primal-dual hybrid gradient method. Requires a converged norm
/// estimate on the operator; refuses step sizes that violate the descent conditions
/// unless override_constraints is set. Throws DivergenceError when |z^k| > divergence_bound.
SolverTrace run_pdhgm(const PdProblem& problem, const PdConfig& cfg);

/// Trace CSV: k, L, lyapunov, descent_margin, residual_M, dx_norm, dy_norm, gap, step_m.
std::string trace_csv(const SolverTrace& trace);

/// Parsed trace CSV plus the step parameters needed to recompute certificates.
SolverTrace read_trace_csv(const std::string& text);

nlohmann::json trace_parameters(const SolverTrace& trace);
void apply_trace_parameters(const nlohmann::json& params, SolverTrace& trace);

struct SubgradientTrace
{
  std::vector<double> objective;
  DenseArray final_x;
  DenseArray best_x;
  double best_objective = 0.0;
  std::size_t best_k = 0;
};

/// x_{k+1} = x_k - step (g_R(x_k) + A* grad F(A x_k)); tracks the best-objective iterate.
SubgradientTrace subgradient_solve(const Functional& r, const ConjugateFidelity& cf,
                                   const LinearOperator& a, const DenseArray& x0, double step,
                                   std::size_t iters);

} // namespace wcreg
