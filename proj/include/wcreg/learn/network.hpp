#pragma once

#include "wcreg/certificate.hpp"
#include "wcreg/critical_points.hpp"
#include "wcreg/functional.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

namespace wcreg::learn {

/// log(1 + e^-9)
inline const double kMu0 = std::log1p(std::exp(-9.0));

using Vec = std::vector<double>;

/// Affine map with row-major out x in weights.
struct DenseLayer
{
  std::size_t in = 0;
  std::size_t out = 0;
  Vec w;
  Vec b;
};

/// Affine layers each followed by x sigmoid(x); with linear_output the last layer is
/// affine only. No layers means the identity map.
struct SmoothNetParams
{
  std::vector<DenseLayer> layers;
  bool linear_output = false;
  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out; }
};

struct IcnnLayer
{
  std::size_t out = 0;
  /// out x (previous width); empty for the first layer
  Vec wz;
  /// out x input_dim passthrough weights
  Vec wx;
  Vec b;
};

/// z1 = act(Wx0 u + b0), z_{j+1} = act(Wz_j z_j + Wx_j u + b_j); the last layer has
/// width 1 and no activation. act is the leaky rectifier with the given slope.
struct IcnnParams
{
  std::size_t input_dim = 0;
  std::vector<IcnnLayer> layers;
  double slope = 0.2;
};

/// IWCNN = icnn o smooth; the AWCR adds (mu0/2)|x|^2.
struct AwcrParams
{
  SmoothNetParams smooth;
  IcnnParams icnn;
  double mu0 = kMu0;

  std::size_t input_dim() const { return smooth.layers.empty() ? icnn.input_dim : smooth.input_dim(); }
  std::size_t parameter_count() const;
};

struct AwcrArch
{
  std::size_t input_dim = 2;
  /// widths of the smooth layers; empty gives a pure ICNN on the input
  std::vector<std::size_t> smooth_widths{16, 16};
  bool smooth_linear_output = false;
  std::vector<std::size_t> icnn_hidden{8};
  double slope = 0.2;
  double mu0 = kMu0;

  nlohmann::json to_json() const;
  static AwcrArch from_json(const nlohmann::json& j);
};

/// Scaled Gaussian initialisation; propagation weights start nonnegative.
AwcrParams init_awcr(const AwcrArch& arch, std::uint64_t seed);
AwcrArch arch_of(const AwcrParams& p);

/// Visits every parameter block in a fixed order; the flag marks propagation weights.
template <class P, class F>
void for_each_block(P& p, F&& f)
{
  for (auto& l : p.smooth.layers) {
    f(l.w, false);
    f(l.b, false);
  }
  for (auto& l : p.icnn.layers) {
    f(l.wz, true);
    f(l.wx, false);
    f(l.b, false);
  }
}

Vec flatten(const AwcrParams& p);
void unflatten(const Vec& flat, AwcrParams& p);
/// Same structure, all zeros.
AwcrParams zeros_like(const AwcrParams& p);
/// Clamps propagation weights at 0.
void project_nonnegative(AwcrParams& p);
/// Throws StructureError on a negative propagation weight.
void check_structure(const AwcrParams& p);
void check_structure(const IcnnParams& p);

/// One forward evaluation of the IWCNN (no mu0 term) with an optional forward tangent,
/// followed by reverse passes. Seeding the tangent output differentiates the directional
/// derivative <v, grad_x f(x)> with respect to the weights, which is how the gradient
/// penalty is backpropagated.
class NetworkTape
{
public:
  explicit NetworkTape(const AwcrParams& p);

  double forward(const double* x, const double* v = nullptr);
  double value() const { return value_; }
  double tangent() const { return tangent_; }
  /// True when some rectifier input was exactly 0 in the last forward pass.
  bool hit_kink() const { return kink_; }
  /// Adds seed_value d(value) + seed_tangent d(tangent) into grad (if given) and writes
  /// the input adjoint into gx (if given).
  void backward(double seed_value, double seed_tangent, AwcrParams* grad, double* gx);

private:
  const AwcrParams& p_;
  bool has_tangent_ = false;
  bool kink_ = false;
  double value_ = 0.0;
  double tangent_ = 0.0;
  Vec x_, xdot_;
  std::vector<Vec> s_pre_, s_out_, s_pre_dot_, s_out_dot_;
  std::vector<Vec> z_pre_, z_out_, z_pre_dot_, z_out_dot_;
  Vec bar_, dbar_, bar2_, dbar2_, ubar_, udbar_;
};

double icnn_forward(const IcnnParams& p, const Vec& x);
Vec icnn_grad(const IcnnParams& p, const Vec& x);
double iwcnn_forward(const AwcrParams& p, const Vec& x);
Vec iwcnn_grad(const AwcrParams& p, const Vec& x);
double awcr_eval(const AwcrParams& p, const Vec& x);
Vec awcr_grad(const AwcrParams& p, const Vec& x);

/// Upper bounds behind the declared modulus rho_hat = L_icnn beta_smooth. All are
/// products of spectral norms and activation bounds.
struct ModulusBound
{
  double lipschitz_icnn = 0.0;
  double lipschitz_smooth = 1.0;
  double beta_smooth = 0.0;
  double rho_hat = 0.0;
  nlohmann::json to_json() const;
};

ModulusBound modulus_bound(const AwcrParams& p);

/// IWCNN as a Functional: rho_wc = rho_hat, Lipschitz bound L_icnn L_smooth.
Functional iwcnn_functional(const AwcrParams& p);
/// IWCNN + (mu0/2)|x|^2 with the net curvature rho_hat - mu0 declared.
Functional awcr_functional(const AwcrParams& p);

/// (IWCNN + c, (mu0/2)|.|^2) with c from the minimum over `samples` uniform points of
/// the box, lowered by `margin`; nonnegativity of the first part holds on the box only.
SplitRegulariser awcr_split(const AwcrParams& p, Box box, std::size_t samples, std::uint64_t seed,
                            double margin = 1e-3);

} // namespace wcreg::learn
