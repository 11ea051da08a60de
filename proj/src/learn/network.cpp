#include "wcreg/learn/network.hpp"

#include "wcreg/errors.hpp"
#include "wcreg/rng.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <fmt/format.h>
#include <limits>

namespace wcreg::learn {

namespace {

// |silu'| and |silu''| over the real line
constexpr double kSiluSlope = 1.0998393201285284;
constexpr double kSiluCurvature = 0.5;

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

struct Silu
{
  double h, d1, d2;
};

Silu silu(double a)
{
  const double s = sigmoid(a);
  return {a * s, s + a * s * (1.0 - s), s * (1.0 - s) * (2.0 + a * (1.0 - 2.0 * s))};
}

// y += W x, W row-major out x in
void matvec_add(const Vec& w, std::size_t out, std::size_t in, const double* x, double* y)
{
  for (std::size_t i = 0; i < out; ++i) {
    const double* row = w.data() + i * in;
    double acc = 0.0;
    for (std::size_t j = 0; j < in; ++j)
      acc += row[j] * x[j];
    y[i] += acc;
  }
}

// y += W^T x
void matvec_t_add(const Vec& w, std::size_t out, std::size_t in, const double* x, double* y)
{
  for (std::size_t i = 0; i < out; ++i) {
    const double* row = w.data() + i * in;
    const double xi = x[i];
    if (xi == 0.0)
      continue;
    for (std::size_t j = 0; j < in; ++j)
      y[j] += row[j] * xi;
  }
}

// G += a b^T
void outer_add(Vec& g, std::size_t out, std::size_t in, const double* a, const double* b)
{
  for (std::size_t i = 0; i < out; ++i) {
    const double ai = a[i];
    if (ai == 0.0)
      continue;
    double* row = g.data() + i * in;
    for (std::size_t j = 0; j < in; ++j)
      row[j] += ai * b[j];
  }
}

double spectral_norm(const Vec& w, std::size_t out, std::size_t in)
{
  if (w.empty())
    return 0.0;
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
    w.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

Vec gaussian(Rng& rng, std::size_t n, double scale)
{
  Vec v(n);
  for (auto& x : v)
    x = scale * rng.normal();
  return v;
}

} // namespace

std::size_t AwcrParams::parameter_count() const
{
  std::size_t n = 0;
  for_each_block(*this, [&](const Vec& b, bool) { n += b.size(); });
  return n;
}

nlohmann::json AwcrArch::to_json() const
{
  return {{"input_dim", input_dim},
          {"smooth_widths", smooth_widths},
          {"smooth_linear_output", smooth_linear_output},
          {"icnn_hidden", icnn_hidden},
          {"slope", slope},
          {"mu0", mu0}};
}

AwcrArch AwcrArch::from_json(const nlohmann::json& j)
{
  AwcrArch a;
  try {
    a.input_dim = j.at("input_dim").get<std::size_t>();
    a.smooth_widths = j.at("smooth_widths").get<std::vector<std::size_t>>();
    a.smooth_linear_output = j.value("smooth_linear_output", false);
    a.icnn_hidden = j.at("icnn_hidden").get<std::vector<std::size_t>>();
    a.slope = j.at("slope").get<double>();
    a.mu0 = j.at("mu0").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("architecture: {}", e.what()));
  }
  return a;
}

AwcrParams init_awcr(const AwcrArch& arch, std::uint64_t seed)
{
  if (arch.input_dim == 0)
    throw ConfigError("init_awcr: input_dim must be positive");
  if (!(arch.slope >= 0.0 && arch.slope <= 1.0))
    throw ConfigError("init_awcr: rectifier slope must lie in [0,1]");
  if (!(arch.mu0 >= 0.0))
    throw ConfigError("init_awcr: mu0 must be nonnegative");
  Rng rng = Rng(seed).stream("init_awcr");
  AwcrParams p;
  p.mu0 = arch.mu0;
  p.smooth.linear_output = arch.smooth_linear_output;
  std::size_t in = arch.input_dim;
  for (std::size_t w : arch.smooth_widths) {
    if (w == 0)
      throw ConfigError("init_awcr: zero layer width");
    DenseLayer l{in, w, gaussian(rng, w * in, std::sqrt(2.0 / static_cast<double>(in))),
                 Vec(w, 0.0)};
    p.smooth.layers.push_back(std::move(l));
    in = w;
  }
  p.icnn.input_dim = in;
  p.icnn.slope = arch.slope;
  std::size_t prev = 0;
  auto widths = arch.icnn_hidden;
  widths.push_back(1);
  for (std::size_t w : widths) {
    if (w == 0)
      throw ConfigError("init_awcr: zero layer width");
    IcnnLayer l;
    l.out = w;
    const double fan = static_cast<double>(in + prev);
    l.wx = gaussian(rng, w * in, std::sqrt(1.0 / fan));
    if (prev > 0) {
      l.wz = gaussian(rng, w * prev, std::sqrt(1.0 / fan));
      for (auto& v : l.wz)
        v = std::abs(v);
    }
    l.b = gaussian(rng, w, 0.01);
    p.icnn.layers.push_back(std::move(l));
    prev = w;
  }
  return p;
}

AwcrArch arch_of(const AwcrParams& p)
{
  AwcrArch a;
  a.input_dim = p.input_dim();
  a.smooth_widths.clear();
  for (const auto& l : p.smooth.layers)
    a.smooth_widths.push_back(l.out);
  a.smooth_linear_output = p.smooth.linear_output;
  a.icnn_hidden.clear();
  for (std::size_t j = 0; j + 1 < p.icnn.layers.size(); ++j)
    a.icnn_hidden.push_back(p.icnn.layers[j].out);
  a.slope = p.icnn.slope;
  a.mu0 = p.mu0;
  return a;
}

Vec flatten(const AwcrParams& p)
{
  Vec out;
  out.reserve(p.parameter_count());
  for_each_block(p, [&](const Vec& b, bool) { out.insert(out.end(), b.begin(), b.end()); });
  return out;
}

void unflatten(const Vec& flat, AwcrParams& p)
{
  if (flat.size() != p.parameter_count())
    throw ShapeError(fmt::format("unflatten: expected {} values, got {}", p.parameter_count(), flat.size()));
  std::size_t pos = 0;
  for_each_block(p, [&](Vec& b, bool) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
              flat.begin() + static_cast<std::ptrdiff_t>(pos + b.size()), b.begin());
    pos += b.size();
  });
}

AwcrParams zeros_like(const AwcrParams& p)
{
  AwcrParams z = p;
  for_each_block(z, [](Vec& b, bool) { std::fill(b.begin(), b.end(), 0.0); });
  return z;
}

void project_nonnegative(AwcrParams& p)
{
  for_each_block(p, [](Vec& b, bool nonneg) {
    if (nonneg)
      for (auto& v : b)
        v = std::max(v, 0.0);
  });
}

void check_structure(const IcnnParams& p)
{
  if (p.layers.empty() || p.layers.back().out != 1)
    throw StructureError("icnn: last layer must have width 1");
  std::size_t prev = 0;
  for (std::size_t j = 0; j < p.layers.size(); ++j) {
    const auto& l = p.layers[j];
    if (l.wx.size() != l.out * p.input_dim || l.b.size() != l.out || l.wz.size() != l.out * prev)
      throw StructureError(fmt::format("icnn: layer {} has inconsistent sizes", j));
    for (double v : l.wz)
      if (v < 0.0)
        throw StructureError(fmt::format("icnn: negative propagation weight {} in layer {}", v, j));
    prev = l.out;
  }
}

void check_structure(const AwcrParams& p)
{
  std::size_t in = p.smooth.layers.empty() ? p.icnn.input_dim : p.smooth.input_dim();
  for (const auto& l : p.smooth.layers) {
    if (l.in != in || l.w.size() != l.in * l.out || l.b.size() != l.out)
      throw StructureError("smooth net: inconsistent layer sizes");
    in = l.out;
  }
  if (p.icnn.input_dim != in)
    throw StructureError("iwcnn: smooth output width does not match the icnn input");
  check_structure(p.icnn);
}

// --- tape ---------------------------------------------------------------------

NetworkTape::NetworkTape(const AwcrParams& p) : p_(p)
{
  check_structure(p);
  const std::size_t ns = p.smooth.layers.size();
  s_pre_.resize(ns);
  s_out_.resize(ns);
  s_pre_dot_.resize(ns);
  s_out_dot_.resize(ns);
  std::size_t widest = p.input_dim();
  for (std::size_t k = 0; k < ns; ++k) {
    const std::size_t w = p.smooth.layers[k].out;
    s_pre_[k].assign(w, 0.0);
    s_out_[k].assign(w, 0.0);
    s_pre_dot_[k].assign(w, 0.0);
    s_out_dot_[k].assign(w, 0.0);
    widest = std::max(widest, w);
  }
  const std::size_t ni = p.icnn.layers.size();
  z_pre_.resize(ni);
  z_out_.resize(ni);
  z_pre_dot_.resize(ni);
  z_out_dot_.resize(ni);
  for (std::size_t j = 0; j < ni; ++j) {
    const std::size_t w = p.icnn.layers[j].out;
    z_pre_[j].assign(w, 0.0);
    z_out_[j].assign(w, 0.0);
    z_pre_dot_[j].assign(w, 0.0);
    z_out_dot_[j].assign(w, 0.0);
    widest = std::max(widest, w);
  }
  x_.assign(p.input_dim(), 0.0);
  xdot_.assign(p.input_dim(), 0.0);
  for (Vec* v : {&bar_, &dbar_, &bar2_, &dbar2_})
    v->assign(widest, 0.0);
  ubar_.assign(p.icnn.input_dim, 0.0);
  udbar_.assign(p.icnn.input_dim, 0.0);
}

double NetworkTape::forward(const double* x, const double* v)
{
  has_tangent_ = v != nullptr;
  kink_ = false;
  std::copy(x, x + x_.size(), x_.begin());
  if (has_tangent_)
    std::copy(v, v + xdot_.size(), xdot_.begin());
  else
    std::fill(xdot_.begin(), xdot_.end(), 0.0);

  const double* in = x_.data();
  const double* in_dot = xdot_.data();
  const std::size_t ns = p_.smooth.layers.size();
  for (std::size_t k = 0; k < ns; ++k) {
    const auto& l = p_.smooth.layers[k];
    Vec& a = s_pre_[k];
    Vec& ad = s_pre_dot_[k];
    Vec& h = s_out_[k];
    Vec& hd = s_out_dot_[k];
    std::copy(l.b.begin(), l.b.end(), a.begin());
    matvec_add(l.w, l.out, l.in, in, a.data());
    std::fill(ad.begin(), ad.end(), 0.0);
    if (has_tangent_)
      matvec_add(l.w, l.out, l.in, in_dot, ad.data());
    const bool last = k + 1 == ns && p_.smooth.linear_output;
    for (std::size_t i = 0; i < l.out; ++i) {
      if (last) {
        h[i] = a[i];
        hd[i] = ad[i];
      } else {
        const Silu s = silu(a[i]);
        h[i] = s.h;
        hd[i] = s.d1 * ad[i];
      }
    }
    in = h.data();
    in_dot = hd.data();
  }

  const double* u = in;
  const double* udot = in_dot;
  const std::size_t m = p_.icnn.input_dim;
  const std::size_t ni = p_.icnn.layers.size();
  const double slope = p_.icnn.slope;
  std::size_t prev = 0;
  for (std::size_t j = 0; j < ni; ++j) {
    const auto& l = p_.icnn.layers[j];
    Vec& a = z_pre_[j];
    Vec& ad = z_pre_dot_[j];
    std::copy(l.b.begin(), l.b.end(), a.begin());
    matvec_add(l.wx, l.out, m, u, a.data());
    std::fill(ad.begin(), ad.end(), 0.0);
    if (has_tangent_)
      matvec_add(l.wx, l.out, m, udot, ad.data());
    if (j > 0) {
      matvec_add(l.wz, l.out, prev, z_out_[j - 1].data(), a.data());
      if (has_tangent_)
        matvec_add(l.wz, l.out, prev, z_out_dot_[j - 1].data(), ad.data());
    }
    const bool last = j + 1 == ni;
    for (std::size_t i = 0; i < l.out; ++i) {
      if (last) {
        z_out_[j][i] = a[i];
        z_out_dot_[j][i] = ad[i];
      } else {
        if (a[i] == 0.0)
          kink_ = true;
        const double d = a[i] > 0.0 ? 1.0 : slope;
        z_out_[j][i] = d * a[i];
        z_out_dot_[j][i] = d * ad[i];
      }
    }
    prev = l.out;
  }
  value_ = z_out_.back()[0];
  tangent_ = z_out_dot_.back()[0];
  return value_;
}

void NetworkTape::backward(double seed_value, double seed_tangent, AwcrParams* grad, double* gx)
{
  const std::size_t m = p_.icnn.input_dim;
  const std::size_t ni = p_.icnn.layers.size();
  const std::size_t ns = p_.smooth.layers.size();
  const double slope = p_.icnn.slope;
  const double* u = ns == 0 ? x_.data() : s_out_.back().data();
  const double* udot = ns == 0 ? xdot_.data() : s_out_dot_.back().data();
  const bool tangent_seeded = seed_tangent != 0.0;

  std::fill(ubar_.begin(), ubar_.end(), 0.0);
  std::fill(udbar_.begin(), udbar_.end(), 0.0);
  // bar_/dbar_ hold adjoints of the current layer output and its tangent
  bar_[0] = seed_value;
  dbar_[0] = seed_tangent;
  for (std::size_t jj = ni; jj-- > 0;) {
    const auto& l = p_.icnn.layers[jj];
    const Vec& a = z_pre_[jj];
    const bool last = jj + 1 == ni;
    for (std::size_t i = 0; i < l.out; ++i) {
      const double d = last ? 1.0 : (a[i] > 0.0 ? 1.0 : slope);
      bar_[i] *= d;
      dbar_[i] *= d;
    }
    if (grad) {
      auto& g = grad->icnn.layers[jj];
      for (std::size_t i = 0; i < l.out; ++i)
        g.b[i] += bar_[i];
      outer_add(g.wx, l.out, m, bar_.data(), u);
      if (has_tangent_ && tangent_seeded)
        outer_add(g.wx, l.out, m, dbar_.data(), udot);
      if (jj > 0) {
        const std::size_t prev = p_.icnn.layers[jj - 1].out;
        outer_add(g.wz, l.out, prev, bar_.data(), z_out_[jj - 1].data());
        if (has_tangent_ && tangent_seeded)
          outer_add(g.wz, l.out, prev, dbar_.data(), z_out_dot_[jj - 1].data());
      }
    }
    matvec_t_add(l.wx, l.out, m, bar_.data(), ubar_.data());
    if (tangent_seeded)
      matvec_t_add(l.wx, l.out, m, dbar_.data(), udbar_.data());
    if (jj > 0) {
      const std::size_t prev = p_.icnn.layers[jj - 1].out;
      std::fill(bar2_.begin(), bar2_.begin() + static_cast<std::ptrdiff_t>(prev), 0.0);
      std::fill(dbar2_.begin(), dbar2_.begin() + static_cast<std::ptrdiff_t>(prev), 0.0);
      matvec_t_add(l.wz, l.out, prev, bar_.data(), bar2_.data());
      if (tangent_seeded)
        matvec_t_add(l.wz, l.out, prev, dbar_.data(), dbar2_.data());
      std::swap(bar_, bar2_);
      std::swap(dbar_, dbar2_);
    }
  }

  std::copy(ubar_.begin(), ubar_.end(), bar_.begin());
  std::copy(udbar_.begin(), udbar_.end(), dbar_.begin());
  for (std::size_t kk = ns; kk-- > 0;) {
    const auto& l = p_.smooth.layers[kk];
    const Vec& a = s_pre_[kk];
    const Vec& ad = s_pre_dot_[kk];
    const bool last = kk + 1 == ns && p_.smooth.linear_output;
    if (!last) {
      for (std::size_t i = 0; i < l.out; ++i) {
        const Silu s = silu(a[i]);
        bar_[i] = s.d1 * bar_[i] + (has_tangent_ ? s.d2 * ad[i] * dbar_[i] : 0.0);
        dbar_[i] = s.d1 * dbar_[i];
      }
    }
    const double* in = kk == 0 ? x_.data() : s_out_[kk - 1].data();
    const double* in_dot = kk == 0 ? xdot_.data() : s_out_dot_[kk - 1].data();
    if (grad) {
      auto& g = grad->smooth.layers[kk];
      for (std::size_t i = 0; i < l.out; ++i)
        g.b[i] += bar_[i];
      outer_add(g.w, l.out, l.in, bar_.data(), in);
      if (has_tangent_ && tangent_seeded)
        outer_add(g.w, l.out, l.in, dbar_.data(), in_dot);
    }
    std::fill(bar2_.begin(), bar2_.begin() + static_cast<std::ptrdiff_t>(l.in), 0.0);
    std::fill(dbar2_.begin(), dbar2_.begin() + static_cast<std::ptrdiff_t>(l.in), 0.0);
    matvec_t_add(l.w, l.out, l.in, bar_.data(), bar2_.data());
    if (tangent_seeded)
      matvec_t_add(l.w, l.out, l.in, dbar_.data(), dbar2_.data());
    std::swap(bar_, bar2_);
    std::swap(dbar_, dbar2_);
  }
  if (gx)
    std::copy(bar_.begin(), bar_.begin() + static_cast<std::ptrdiff_t>(x_.size()), gx);
}

// --- evaluation wrappers ----------------------------------------------------------

namespace {
AwcrParams wrap_icnn(const IcnnParams& p)
{
  AwcrParams a;
  a.icnn = p;
  a.mu0 = 0.0;
  return a;
}

void check_input(const AwcrParams& p, const Vec& x)
{
  if (x.size() != p.input_dim())
    throw ShapeError(fmt::format("network input has {} entries, expected {}", x.size(), p.input_dim()));
}
} // namespace

double icnn_forward(const IcnnParams& p, const Vec& x) { return iwcnn_forward(wrap_icnn(p), x); }
Vec icnn_grad(const IcnnParams& p, const Vec& x) { return iwcnn_grad(wrap_icnn(p), x); }

double iwcnn_forward(const AwcrParams& p, const Vec& x)
{
  check_input(p, x);
  NetworkTape t(p);
  return t.forward(x.data());
}

Vec iwcnn_grad(const AwcrParams& p, const Vec& x)
{
  check_input(p, x);
  NetworkTape t(p);
  t.forward(x.data());
  Vec g(x.size());
  t.backward(1.0, 0.0, nullptr, g.data());
  return g;
}

double awcr_eval(const AwcrParams& p, const Vec& x)
{
  double sq = 0.0;
  for (double v : x)
    sq += v * v;
  return iwcnn_forward(p, x) + 0.5 * p.mu0 * sq;
}

Vec awcr_grad(const AwcrParams& p, const Vec& x)
{
  Vec g = iwcnn_grad(p, x);
  for (std::size_t i = 0; i < x.size(); ++i)
    g[i] += p.mu0 * x[i];
  return g;
}

// --- moduli ---------------------------------------------------------------------

nlohmann::json ModulusBound::to_json() const
{
  return {{"lipschitz_icnn", lipschitz_icnn},
          {"lipschitz_smooth", lipschitz_smooth},
          {"beta_smooth", beta_smooth},
          {"rho_hat", rho_hat},
          {"kind", "upper bound"}};
}

ModulusBound modulus_bound(const AwcrParams& p)
{
  ModulusBound out;
  double lip = 1.0, beta = 0.0;
  const std::size_t ns = p.smooth.layers.size();
  for (std::size_t k = 0; k < ns; ++k) {
    const auto& l = p.smooth.layers[k];
    const double w = spectral_norm(l.w, l.out, l.in);
    const bool last = k + 1 == ns && p.smooth.linear_output;
    const double c1 = last ? 1.0 : kSiluSlope;
    const double c2 = last ? 0.0 : kSiluCurvature;
    beta = c2 * (w * lip) * (w * lip) + c1 * w * beta;
    lip = c1 * w * lip;
  }
  out.lipschitz_smooth = lip;
  out.beta_smooth = beta;
  double li = 0.0;
  for (std::size_t j = 0; j < p.icnn.layers.size(); ++j) {
    const auto& l = p.icnn.layers[j];
    const std::size_t prev = j == 0 ? 0 : p.icnn.layers[j - 1].out;
    li = spectral_norm(l.wz, l.out, prev) * li + spectral_norm(l.wx, l.out, p.icnn.input_dim);
  }
  out.lipschitz_icnn = li;
  out.rho_hat = composition_modulus(li, beta);
  return out;
}

namespace {
Vec to_vec(const DenseArray& x) { return {x.values().begin(), x.values().end()}; }
} // namespace

Functional iwcnn_functional(const AwcrParams& p)
{
  check_structure(p);
  auto shared = std::make_shared<const AwcrParams>(p);
  const ModulusBound mb = modulus_bound(p);
  Functional f;
  f.name = "iwcnn";
  f.eval = [shared](const DenseArray& x) { return iwcnn_forward(*shared, to_vec(x)); };
  f.subgrad = [shared](const DenseArray& x) {
    return DenseArray(x.shape(), iwcnn_grad(*shared, to_vec(x)));
  };
  f.rho_wc = mb.rho_hat;
  f.lipschitz = mb.lipschitz_icnn * mb.lipschitz_smooth;
  return f;
}

Functional awcr_functional(const AwcrParams& p)
{
  check_structure(p);
  auto shared = std::make_shared<const AwcrParams>(p);
  const ModulusBound mb = modulus_bound(p);
  Functional f;
  f.name = "awcr";
  f.eval = [shared](const DenseArray& x) { return awcr_eval(*shared, to_vec(x)); };
  f.subgrad = [shared](const DenseArray& x) {
    return DenseArray(x.shape(), awcr_grad(*shared, to_vec(x)));
  };
  if (mb.rho_hat >= p.mu0)
    f.rho_wc = mb.rho_hat - p.mu0;
  else
    f.mu_sc = p.mu0 - mb.rho_hat;
  return f;
}

SplitRegulariser awcr_split(const AwcrParams& p, Box box, std::size_t samples, std::uint64_t seed,
                            double margin)
{
  if (samples == 0)
    throw ConfigError("awcr_split: need at least one sample");
  Functional net = iwcnn_functional(p);
  Rng rng = Rng(seed).stream("awcr_split");
  const std::size_t d = p.input_dim();
  std::vector<std::pair<double, Vec>> pts;
  Vec x(d);
  for (std::size_t s = 0; s < samples; ++s) {
    for (auto& v : x)
      v = rng.uniform(box.lo, box.hi);
    pts.emplace_back(iwcnn_forward(p, x), x);
  }
  // polish the best samples by projected gradient descent with backtracking
  const std::size_t keep = std::min<std::size_t>(pts.size(), 16);
  std::partial_sort(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(keep), pts.end(),
                    [](const auto& a, const auto& b) { return a.first < b.first; });
  double lo = pts.front().first;
  for (std::size_t c = 0; c < keep; ++c) {
    auto [f, z] = pts[c];
    double step = 0.1 * (box.hi - box.lo);
    for (int it = 0; it < 400 && step > 1e-12; ++it) {
      const Vec g = iwcnn_grad(p, z);
      Vec trial = z;
      for (std::size_t i = 0; i < d; ++i)
        trial[i] = std::clamp(z[i] - step * g[i], box.lo, box.hi);
      const double ft = iwcnn_forward(p, trial);
      if (ft < f) {
        f = ft;
        z = trial;
        step *= 1.5;
      } else {
        step *= 0.5;
      }
    }
    lo = std::min(lo, f);
  }
  Functional wc = offset(net, margin - lo);
  wc.name = "iwcnn_shifted";
  return SplitRegulariser::from_parts(std::move(wc), quadratic(p.mu0));
}

} // namespace wcreg::learn
