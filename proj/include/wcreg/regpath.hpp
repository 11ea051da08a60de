#pragma once

#include "wcreg/fidelity.hpp"
#include "wcreg/functional.hpp"
#include "wcreg/linear_operator.hpp"
#include "wcreg/pdhgm.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace wcreg {

/// Orthogonal projector onto ker(A), built from a dense SVD of A. Only for operators
/// with at most kMaxColumns domain entries.
class KernelProjector
{
public:
  static constexpr std::size_t kMaxColumns = 4096;

  /// Singular values below rel_tol * s_max count as zero.
  static KernelProjector build(const LinearOperator& a, double rel_tol = 1e-10);

  DenseArray project(const DenseArray& g) const;
  std::size_t rank() const { return rank_; }
  std::size_t dim() const { return dim_; }

private:
  std::size_t dim_ = 0;
  std::size_t rank_ = 0;
  std::vector<double> row_basis_; // rank x dim, orthonormal rows spanning range(A*)
};

struct CriticalityResidual
{
  /// |Ax - y0|
  double feasibility = 0.0;
  /// |P_ker(A) g| for the selection g of dR(x)
  double tangential = 0.0;
};

CriticalityResidual criticality_residual(const DenseArray& x, const Functional& r,
                                         const LinearOperator& a, const DenseArray& y0,
                                         const KernelProjector& projector);
CriticalityResidual criticality_residual(const DenseArray& x, const Functional& r,
                                         const LinearOperator& a, const DenseArray& y0);

struct AlphaRule
{
  std::string name;
  std::function<double(double delta)> alpha;
};

AlphaRule alpha_linear(double c);
AlphaRule alpha_constant(double c);
/// alpha = c delta^q
AlphaRule alpha_power(double c, double q);

struct AlphaAudit
{
  bool pass = false;
  std::size_t horizon = 0;
  double alpha_ratio = 0.0;
  double data_ratio = 0.0;
};

/// Evaluates alpha_k and delta_k^p / alpha_k along delta_k = delta0 decay^k out to the
/// first k >= levels with decay^k <= 1e-8; passes iff both end/start ratios are below 1e-3.
AlphaAudit alpha_rule_audit(const AlphaRule& rule, double p, std::size_t levels,
                            double delta0 = 0.1, double decay = 0.5);

enum class LevelSolver
{
  pdhgm,
  subgradient
};

/// Settings for one regularised solve of min R(x) + |Ax - y|^2 / (2 alpha).
struct LevelSolveOptions
{
  LevelSolver solver = LevelSolver::pdhgm;
  double step_margin = 0.9;
  std::size_t max_iters = 20000;
  /// pdhgm: residual_M below this; subgradient: gradient norm below this
  double tol = 1e-9;
  /// subgradient step as a fraction of 1/L for the data term
  double gd_step_fraction = 0.9;
};

struct LevelSolve
{
  DenseArray x;
  std::size_t iterations = 0;
  bool converged = false;
  bool diverged = false;
  double final_residual = 0.0;
};

/// Critical point of R + |Ax - y|^2/(2 alpha) starting from x_start. Divergence is
/// reported in the result rather than thrown.
LevelSolve solve_level(const LinearOperator& a, const Functional& r, double alpha,
                       const DenseArray& y, const DenseArray& x_start,
                       const LevelSolveOptions& options);

struct RegPathConfig
{
  double delta0 = 0.1;
  double decay = 0.5;
  std::size_t levels = 7;
  AlphaRule alpha_rule = alpha_linear(1.0);
  double p = 2.0;
  std::uint64_t noise_seed = 0;
  LevelSolveOptions solve;
};

struct RegPathProblem
{
  LinearOperator a;
  Functional r;
  DenseArray x_true;
  DenseArray y_clean;
  DenseArray x_init;
};

struct RegPathLevel
{
  std::size_t level = 0;
  double delta = 0.0;
  double alpha = 0.0;
  double data_residual = 0.0;
  CriticalityResidual criticality;
  double dist_prev_level = 0.0;
  double distance_to_truth = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  bool diverged = false;
  DenseArray x;
};

struct RegPathReport
{
  std::vector<RegPathLevel> levels;
  AlphaAudit audit;
  /// data_residual[k+1] <= 1.1 data_residual[k] for every k
  bool data_residual_monotone = false;
};

/// Gaussian noise rescaled to norm exactly delta (zero for delta = 0).
DenseArray scaled_noise(const Shape& shape, double delta, std::uint64_t seed, std::uint64_t level);

/// Solves along delta_k = delta0 decay^k with warm starts. Throws ConfigError when the
/// alpha rule fails its audit.
RegPathReport run_regpath(const RegPathProblem& problem, const RegPathConfig& cfg);

std::string regpath_csv(const RegPathReport& report);

struct StabilityRow
{
  double size = 0.0;
  double deviation = 0.0;
};

struct StabilityReport
{
  std::vector<StabilityRow> rows;
  /// deviation at size s_{i+1} >= deviation at s_i / 1.1 for increasing sizes
  bool monotone = false;
  /// max deviation / size over the positive sizes
  double lipschitz_fit = 0.0;
};

/// Reconstructions from y and y + e with |e| in sizes along one seeded direction.
StabilityReport stability_probe(const LinearOperator& a, const Functional& r, double alpha,
                                const DenseArray& y, const DenseArray& x_start,
                                const std::vector<double>& sizes, std::uint64_t seed,
                                const LevelSolveOptions& options);

struct ProximalPointRow
{
  int k = 0;
  double start = 0.0;
  double limit = 0.0;
  double critical_point = 0.0;
};

/// Proximal-point runs on |x| + cos x started at 2 pi k + pi/2 + offset for k = 1..count;
/// each run settles on the critical point 2 pi k + pi/2, so the limits are unbounded.
std::vector<ProximalPointRow> unbounded_critical_control(int count, double nu = 0.9,
                                                         std::size_t iters = 2000,
                                                         double offset = 0.3);

} // namespace wcreg
