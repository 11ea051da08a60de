#pragma once

#include "wcreg/certificate.hpp"
#include "wcreg/tensor.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace wcreg {

/// Data discrepancy D(y, y_ref) with the constants (C, p) of the quasi-triangle bound
/// D(y1, y2) <= C (D(y1, y3) + |y2 - y3|^p).
struct Fidelity
{
  std::string name;
  std::function<double(const DenseArray& y, const DenseArray& y_ref)> eval;
  double p = 2.0;
  double c = 2.0;
  bool convex_in_first = true;
};

/// 0.5 |y - y_ref|^2
double sq_l2(const DenseArray& y, const DenseArray& y_ref);
Fidelity squared_l2_fidelity();

/// F*(w) for F(y) = |y - y_delta|^2 / (2 alpha): F*(w) = alpha/2 |w|^2 + <w, y_delta>.
struct ConjugateFidelity
{
  double alpha = 1.0;
  DenseArray y_delta;
  /// Strong-convexity modulus of F*; equals alpha.
  double mu_fid = 1.0;
};

ConjugateFidelity make_conjugate_fidelity(double alpha, DenseArray y_delta);

/// argmin_w F*(w) + |w - v|^2 / (2 sigma) = (v - sigma y_delta) / (1 + sigma alpha).
DenseArray conj_prox(const ConjugateFidelity& cf, double sigma, const DenseArray& v);
double conj_eval(const ConjugateFidelity& cf, const DenseArray& w);
/// alpha w + y_delta
DenseArray conj_grad(const ConjugateFidelity& cf, const DenseArray& w);
/// F(y) = |y - y_delta|^2 / (2 alpha)
double primal_eval(const ConjugateFidelity& cf, const DenseArray& y);
/// (y - y_delta) / alpha
DenseArray primal_grad(const ConjugateFidelity& cf, const DenseArray& y);

struct Assumption5Report
{
  double worst_ratio = 0.0;
  bool pass = false;
  Certificate certificate;
};

/// Worst D(y1,y2) / (D(y1,y3) + |y2-y3|^p) over random Gaussian triples in R^dim.
Assumption5Report assumption5_audit(const Fidelity& fid, std::size_t samples, std::uint64_t seed,
                                    std::size_t dim = 4);

} // namespace wcreg
