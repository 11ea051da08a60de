#pragma once

#include "wcreg/certificate.hpp"
#include "wcreg/tensor.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace wcreg {

/// A real-valued functional on arrays, with a deterministic subgradient selection
/// and declared curvature moduli.
///
/// rho_wc is the certified weak-convexity modulus (f + rho_wc/2 |.|^2 is convex) and
/// mu_sc the certified strong-convexity modulus (f - mu_sc/2 |.|^2 is convex); at most
/// one of them is nonzero. A nonzero l1_weight declares f = h + l1_weight |.|_1 with
/// h differentiable; the generic prox solver then treats the l1 part exactly.
///
/// At kinks the selection uses sign(0) = 0.
struct Functional
{
  using Eval = std::function<double(const DenseArray&)>;
  using Subgrad = std::function<DenseArray(const DenseArray&)>;
  using Prox = std::function<DenseArray(double nu, const DenseArray& v)>;
  using OneSided = std::function<std::pair<double, double>(double x)>;
  using Breakpoints = std::function<std::vector<double>(double lo, double hi)>;

  std::string name;
  Eval eval;
  Subgrad subgrad;
  double rho_wc = 0.0;
  double mu_sc = 0.0;
  /// Lipschitz constant; per coordinate when `separable`.
  std::optional<double> lipschitz;
  bool separable = false;
  /// Set when `lipschitz` was estimated from samples rather than derived.
  bool lipschitz_empirical = false;
  Prox prox_closed_form;
  double l1_weight = 0.0;
  /// Scalar functionals only: left and right derivative at x.
  OneSided one_sided;
  /// Scalar functionals only: kink locations inside [lo, hi].
  Breakpoints breakpoints;

  /// Lipschitz constant with respect to the Euclidean norm on `dim` coordinates.
  std::optional<double> lipschitz_in(std::size_t dim) const;
  bool has_closed_form_prox() const { return static_cast<bool>(prox_closed_form); }

  /// Scalar convenience wrappers for rank-1, length-1 inputs.
  double eval1(double x) const;
  double subgrad1(double x) const;
  std::pair<double, double> one_sided1(double x) const;
};

// --- instances -------------------------------------------------------------

Functional zero_functional();
/// (scale/2) |x - center|^2; center empty means the origin.
Functional quadratic(double scale = 1.0, DenseArray center = {});
/// weight * |x|_1
Functional l1_norm(double weight = 1.0);
/// Separable minimax concave penalty: lambda|t| - t^2/(2a) for |t| <= a lambda, else
/// a lambda^2/2. Weakly convex with modulus 1/a; closed-form (firm threshold) prox.
Functional mcp(double lambda, double a);
/// R(x) = |x| + cos(x) on the real line: modulus 1, Lipschitz 2.
Functional abs_plus_cos();
/// Separable amplitude * (1 + cos t): nonnegative, bounded by 2 amplitude, modulus amplitude.
Functional cosine_bump(double amplitude);
/// Separable lambda (1 - exp(-t^2 / (2 s^2))): smooth, bounded, modulus 2 e^{-3/2} lambda / s^2.
Functional welsch(double lambda, double scale);
/// Scalar function on the real line whose derivative on [m^n, m^{n+1}), n in Z, is
/// (m + gamma) m^n - gamma x with m = gamma/(gamma - 2); value 0 at every m^n,
/// extended evenly to x < 0. gamma-weakly convex, nonnegative, stationary points of
/// x^2/2 + R at every m^n.
Functional appendix_c_functional(double gamma);

// --- combinators -----------------------------------------------------------

Functional sum(const Functional& f, const Functional& g);
Functional scaled(const Functional& f, double factor);
Functional offset(const Functional& f, double constant);

// --- prox and envelope -------------------------------------------------------

struct ProxOptions
{
  double tol = 1e-8;
  std::size_t max_iters = 500;
  double armijo_c = 1e-4;
};

struct ProxResult
{
  DenseArray point;
  double residual = 0.0;
  std::size_t iterations = 0;
  bool closed_form = false;
};

/// argmin_z f(z) + |z - v|^2 / (2 nu). Requires nu * rho_wc < 1.
ProxResult prox_solve(const Functional& f, double nu, const DenseArray& v,
                      const ProxOptions& options = {});
DenseArray prox(const Functional& f, double nu, const DenseArray& v,
                const ProxOptions& options = {});

struct MoreauResult
{
  double value = 0.0;
  DenseArray gradient;
  DenseArray prox_point;
};

/// Moreau envelope value f(p) + |p - x|^2/(2 nu) and gradient (x - p)/nu, p = prox(x).
MoreauResult moreau(const Functional& f, double nu, const DenseArray& x,
                    const ProxOptions& options = {});

// --- modulus calculus --------------------------------------------------------

/// Modulus of f^q for a rho-weakly convex f with values in [0, B]: q B^{q-1} rho.
double power_modulus(double bound, double rho, double q);
/// Modulus of a convex L-Lipschitz map composed with a map whose Jacobian is beta-Lipschitz.
double composition_modulus(double lipschitz, double beta);

struct Box
{
  double lo = -1.0;
  double hi = 1.0;
};

/// Largest sampled violation of the secant inequality
///   f(l x1 + (1-l) x2) <= l f(x1) + (1-l) f(x2) + rho/2 l (1-l) |x1 - x2|^2
/// over uniform x1, x2 in box^dim and l in [0,1].
double check_rho_convexity(const Functional& f, double rho, std::size_t samples, Box box,
                           std::uint64_t seed, std::size_t dim = 1);

/// Same scan wrapped as a certificate; passes when the violation is at most tol.
Certificate rho_convexity_certificate(const Functional& f, double rho, std::size_t samples, Box box,
                                      std::uint64_t seed, std::size_t dim = 1, double tol = 1e-9);

} // namespace wcreg
