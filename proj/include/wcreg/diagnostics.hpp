#pragma once

#include "wcreg/certificate.hpp"
#include "wcreg/pdhgm.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wcreg {

/// nu = min{mu sigma - 3, 1 - rho tau} from the trace's own parameters.
double certificate_nu(const SolverTrace& trace);

/// Every recorded descent margin (k >= 1) is at least -tol.
Certificate descent_certificate(const SolverTrace& trace, double tol = 1e-10);

struct ResidualCertificate
{
  bool pass = false;
  std::optional<std::size_t> first_violation;
  /// max over K of min_{1<=k<=K} step_M[k] / bound(K); <= 1 on a pass
  double worst_ratio = 0.0;
  /// Same comparison made with the Euclidean |M dz| column, for information only.
  double worst_ratio_residual_m = 0.0;
  Certificate certificate;
};

/// For each K >= 1 compares min_{1<=k<=K} |z^k - z^{k+1}|_M with
/// 2 / sqrt(nu K) * sqrt(lyapunov(z^1, z^0) - lyapunov(z^{K+1}, z^K)).
/// Refuses traces with theta_relax != 1 (CertificateError) and nu <= 0 (ConfigError).
ResidualCertificate min_residual_certificate(const SolverTrace& trace, double nu);

/// sum of dx^2, dy^2 and the largest of the final `tail` terms.
struct SquareSummability
{
  double sum_dx2 = 0.0;
  double sum_dy2 = 0.0;
  double tail_max = 0.0;
};
SquareSummability square_summability(const SolverTrace& trace, std::size_t tail = 10);

struct ErgodicReport
{
  /// k = 1..N, k-th entry is L(xbar^k, y) - L(x, ybar^k)
  std::vector<double> raw_gap;
  /// raw_gap minus 1/2 (rho |x - xhat|^2 - mu |y - yhat|^2)
  std::vector<double> corrected_gap;
  double offset = 0.0;
  /// L(xhat, y) - L(x, yhat), the limit of raw_gap
  double limit = 0.0;
  /// fit of raw_gap - limit against c log k / k on the tail
  double fit_c = 0.0;
  double fit_relative_residual = 0.0;
  /// smallest C with corrected_gap_k <= C log k / k over the tail
  double envelope_constant = 0.0;
  std::size_t tail_begin = 0;
  std::size_t tail_end = 0;
};

/// Needs a trace with history. The fit runs over k in [tail_begin, tail_end]
/// (tail_end 0 means the last iterate). Throws ConfigError for fewer than 100 iterations.
ErgodicReport ergodic_gap(const SolverTrace& trace, const PdProblem& problem,
                          const DenseArray& probe_x, const DenseArray& probe_y,
                          const ProductPoint& zhat, std::size_t tail_begin = 100,
                          std::size_t tail_end = 0);

enum class RateKind
{
  finite,
  linear,
  power,
  inconclusive
};

std::string to_string(RateKind kind);

struct RateReport
{
  RateKind kind = RateKind::inconclusive;
  /// contraction factor for the linear regime
  double rate = 0.0;
  /// slope of log d against log k for the power regime
  double exponent = 0.0;
  double linear_rss = 0.0;
  double power_rss = 0.0;
  std::size_t finite_index = 0;
};

/// Classifies a distance sequence d_k (k = 1, 2, ...) by least-squares fits of log d_k
/// against k and against log k. Entries below floor * d_1 are excluded from the fits;
/// a sequence that reaches exactly zero and stays there is finite.
RateReport rate_classify(const std::vector<double>& distances, double floor = 1e-12);

/// d_k = |z^k - zhat|_M over the trace history.
RateReport rate_classify(const SolverTrace& trace, const LinearOperator& a, const ProductPoint& zhat,
                         double floor = 1e-12);

} // namespace wcreg
