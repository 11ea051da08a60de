#pragma once

#include "wcreg/certificate.hpp"
#include "wcreg/functional.hpp"

#include <optional>
#include <vector>

namespace wcreg {

/// R = r_wc + r_sc with r_wc nonnegative and gamma-weakly convex, r_sc mu_sc-strongly convex.
struct SplitRegulariser
{
  Functional r_wc;
  Functional r_sc;
  double gamma = 0.0;
  double mu_sc = 0.0;

  /// Takes the moduli from the parts' declarations and validates the split.
  static SplitRegulariser from_parts(Functional r_wc, Functional r_sc);

  Functional combined() const { return sum(r_wc, r_sc); }
  bool sqrt_case_applies() const { return gamma < 2.0 * mu_sc; }
  bool lipschitz_case_applies() const { return r_wc.lipschitz.has_value(); }
};

struct CriticalPointBound
{
  /// (L_R + |dR_sc(z)|) / mu, when r_wc is Lipschitz.
  std::optional<double> lipschitz_radius;
  /// |dR_sc(z)| / (mu - gamma/2) + sqrt(R_wc(z) / (mu - gamma/2)), when gamma < 2 mu.
  std::optional<double> sqrt_radius;
  double radius = 0.0;
};

/// Radius of a ball around z that contains every critical point of R. Both bounds are
/// computed when both apply; `radius` is the smaller. The subgradient norm uses the
/// selection of r_sc at z.
CriticalPointBound critical_point_bound(const SplitRegulariser& reg, const DenseArray& z);

struct ScanOptions
{
  double lo = -100.0;
  double hi = 100.0;
  double step = 1e-4;
  /// Relative slack when testing 0 against a one-sided derivative interval.
  double kink_tol = 1e-9;
};

/// Critical points of a scalar functional on [lo, hi]: sign changes of the derivative
/// selection on the grid (refined by bisection), grid points where it vanishes, and
/// declared breakpoints whose one-sided derivative interval contains 0. Points closer
/// than two grid steps are merged, keeping a breakpoint when one is involved.
std::vector<double> scan_critical_points_1d(const Functional& f, const ScanOptions& options = {});

/// Checks that every scanned point lies within the bound radius of z.
Certificate critical_point_certificate(const std::string& name, const CriticalPointBound& bound,
                                       double z, const std::vector<double>& points);

} // namespace wcreg
