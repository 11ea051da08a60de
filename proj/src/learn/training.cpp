#include "wcreg/learn/training.hpp"

#include "wcreg/array_io.hpp"
#include "wcreg/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fmt/format.h>
#include <numbers>

namespace wcreg::learn {

namespace {

void check_batch(const Batch& b, std::size_t dim, const char* what)
{
  if (b.empty())
    throw ShapeError(fmt::format("adversarial_loss: empty {} batch", what));
  for (const auto& x : b)
    if (x.size() != dim)
      throw ShapeError(fmt::format("adversarial_loss: {} sample has {} entries, expected {}", what,
                                   x.size(), dim));
}

double half_sq(const Vec& x)
{
  double s = 0.0;
  for (double v : x)
    s += v * v;
  return 0.5 * s;
}

} // namespace

AdversarialLoss adversarial_loss(const AwcrParams& p, const Batch& real, const Batch& noisy,
                                 double lambda_gp, std::uint64_t seed)
{
  const std::size_t d = p.input_dim();
  check_batch(real, d, "real");
  check_batch(noisy, d, "noisy");
  if (!(lambda_gp >= 0.0))
    throw ConfigError("adversarial_loss: lambda must be nonnegative");

  AdversarialLoss out;
  out.grad = zeros_like(p);
  NetworkTape tape(p);

  const double wr = 1.0 / static_cast<double>(real.size());
  for (const auto& x : real) {
    out.loss_real += wr * (tape.forward(x.data()) + p.mu0 * half_sq(x));
    tape.backward(wr, 0.0, &out.grad, nullptr);
  }
  const double wn = 1.0 / static_cast<double>(noisy.size());
  for (const auto& x : noisy) {
    out.loss_noisy += wn * (tape.forward(x.data()) + p.mu0 * half_sq(x));
    tape.backward(-wn, 0.0, &out.grad, nullptr);
  }

  Rng rng = Rng(seed).stream("adversarial_loss");
  const auto perm = rng.permutation(noisy.size());
  const std::size_t pairs = std::min(real.size(), noisy.size());
  const double wp = 1.0 / static_cast<double>(pairs);
  Vec xt(d), g(d), v(d);
  for (std::size_t i = 0; i < pairs; ++i) {
    const Vec& a = real[i];
    const Vec& b = noisy[perm[i]];
    // redraw t on an exact rectifier kink, where the second-order rule does not apply
    for (int attempt = 0; attempt < 16; ++attempt) {
      const double t = rng.uniform();
      for (std::size_t k = 0; k < d; ++k)
        xt[k] = t * a[k] + (1.0 - t) * b[k];
      tape.forward(xt.data());
      if (!tape.hit_kink())
        break;
    }
    tape.backward(1.0, 0.0, nullptr, g.data());
    double n2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      g[k] += p.mu0 * xt[k];
      n2 += g[k] * g[k];
    }
    const double n = std::sqrt(n2);
    if (n <= 1.0)
      continue;
    out.penalty += wp * (n - 1.0) * (n - 1.0);
    if (lambda_gp == 0.0)
      continue;
    for (std::size_t k = 0; k < d; ++k)
      v[k] = g[k] / n;
    // d|g|/dtheta = d<v, grad_x net>/dtheta with v held fixed
    tape.forward(xt.data(), v.data());
    tape.backward(0.0, lambda_gp * wp * 2.0 * (n - 1.0), &out.grad, nullptr);
  }
  out.loss = out.loss_real - out.loss_noisy + lambda_gp * out.penalty;
  return out;
}

TrainResult train_awcr(const AwcrParams& init, const Batch& real, const Batch& noisy,
                       const TrainSchedule& s)
{
  if (real.empty() || noisy.empty())
    throw ConfigError("train_awcr: datasets must be nonempty");
  if (s.batch_size == 0)
    throw ConfigError("train_awcr: batch_size must be positive");
  if (!(s.learning_rate > 0.0) || !(s.decay > 0.0 && s.decay < 1.0) || !(s.epsilon > 0.0))
    throw ConfigError("train_awcr: need learning_rate > 0, decay in (0,1), epsilon > 0");
  check_structure(init);

  TrainResult res;
  res.params = init;
  const Rng root(s.seed);

  // frozen validation batch: fixed pairing and interpolation seed
  Batch val_real, val_noisy;
  {
    Rng vr = root.stream("validation");
    const auto pr = vr.permutation(real.size());
    const auto pn = vr.permutation(noisy.size());
    const std::size_t nv = std::min({s.validation_size, real.size(), noisy.size()});
    for (std::size_t i = 0; i < std::max<std::size_t>(nv, 1); ++i) {
      val_real.push_back(real[pr[i]]);
      val_noisy.push_back(noisy[pn[i]]);
    }
  }
  const std::uint64_t val_seed = root.stream("validation_seed").next_u64();
  res.initial_validation =
    adversarial_loss(res.params, val_real, val_noisy, s.lambda_phase1, val_seed).loss;

  const std::size_t n = std::max(real.size(), noisy.size());
  const std::size_t steps = (n + s.batch_size - 1) / s.batch_size;
  Vec theta = flatten(res.params);
  Vec sq(theta.size(), 0.0);
  AwcrParams last = res.params;
  std::size_t step = 0;
  const std::size_t epochs = s.epochs_phase1 + s.epochs_phase2;
  Batch br, bn;
  for (std::size_t e = 0; e < epochs; ++e) {
    const double lambda = e < s.epochs_phase1 ? s.lambda_phase1 : s.lambda_phase2;
    Rng er = root.stream("epoch").stream(e);
    const auto pr = er.permutation(real.size());
    const auto pn = er.permutation(noisy.size());
    EpochLog log;
    log.epoch = e + 1;
    log.lambda = lambda;
    for (std::size_t b = 0; b < steps; ++b, ++step) {
      br.clear();
      bn.clear();
      for (std::size_t i = 0; i < s.batch_size; ++i) {
        const std::size_t idx = b * s.batch_size + i;
        br.push_back(real[pr[idx % real.size()]]);
        bn.push_back(noisy[pn[idx % noisy.size()]]);
      }
      const std::uint64_t step_seed = root.stream("step").stream(step).next_u64();
      const AdversarialLoss l = adversarial_loss(res.params, br, bn, lambda, step_seed);
      if (!std::isfinite(l.loss))
        throw TrainingDiverged(
          fmt::format("train_awcr: non-finite loss at epoch {} step {}", e + 1, b + 1), last);
      log.loss_real += l.loss_real / static_cast<double>(steps);
      log.loss_noisy += l.loss_noisy / static_cast<double>(steps);
      log.penalty += l.penalty / static_cast<double>(steps);

      const Vec g = flatten(l.grad);
      for (std::size_t k = 0; k < theta.size(); ++k) {
        sq[k] = s.decay * sq[k] + (1.0 - s.decay) * g[k] * g[k];
        theta[k] -= s.learning_rate * g[k] / (std::sqrt(sq[k]) + s.epsilon);
      }
      unflatten(theta, res.params);
      project_nonnegative(res.params);
      theta = flatten(res.params);
    }
    log.validation = adversarial_loss(res.params, val_real, val_noisy, lambda, val_seed).loss;
    if (!std::isfinite(log.validation))
      throw TrainingDiverged(fmt::format("train_awcr: non-finite validation loss at epoch {}", e + 1),
                             last);
    res.log.push_back(log);
    last = res.params;
  }
  return res;
}

std::string training_log_csv(const std::vector<EpochLog>& log)
{
  std::string out = "epoch,loss_real,loss_noisy,penalty,lambda,validation\n";
  for (const auto& l : log)
    out += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", l.epoch, l.loss_real,
                       l.loss_noisy, l.penalty, l.lambda, l.validation);
  return out;
}

DemoResult universal_demo(const std::function<double(double)>& target, const DemoBudget& budget)
{
  if (budget.arch.input_dim != 1)
    throw ConfigError("universal_demo: the network must take one input");
  if (budget.train_points < 2 || budget.test_points < 1)
    throw ConfigError("universal_demo: need at least 2 training and 1 test point");
  DemoResult res;
  res.params = init_awcr(budget.arch, budget.seed);
  res.params.mu0 = 0.0;

  const std::size_t n = budget.train_points;
  Vec xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    ys[i] = target(xs[i]);
    if (!std::isfinite(ys[i]))
      throw ConfigError("universal_demo: target is not finite on [-1,1]");
  }

  Vec theta = flatten(res.params);
  Vec m1(theta.size(), 0.0), m2(theta.size(), 0.0);
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  double p1 = 1.0, p2 = 1.0;
  for (std::size_t e = 0; e < budget.epochs; ++e) {
    // cosine annealing to 0
    const double lr = 0.5 * budget.learning_rate *
                      (1.0 + std::cos(std::numbers::pi * static_cast<double>(e) /
                                      static_cast<double>(budget.epochs)));
    AwcrParams grad = zeros_like(res.params);
    NetworkTape tape(res.params);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = tape.forward(&xs[i]) - ys[i];
      tape.backward(2.0 * r / static_cast<double>(n), 0.0, &grad, nullptr);
    }
    const Vec g = flatten(grad);
    p1 *= b1;
    p2 *= b2;
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m1[k] = b1 * m1[k] + (1.0 - b1) * g[k];
      m2[k] = b2 * m2[k] + (1.0 - b2) * g[k] * g[k];
      theta[k] -= lr * (m1[k] / (1.0 - p1)) / (std::sqrt(m2[k] / (1.0 - p2)) + eps);
    }
    unflatten(theta, res.params);
    project_nonnegative(res.params);
    theta = flatten(res.params);
  }

  NetworkTape tape(res.params);
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = tape.forward(&xs[i]) - ys[i];
    sse += r * r;
  }
  res.train_rmse = std::sqrt(sse / static_cast<double>(n));
  // held-out points sit strictly between training nodes
  const std::size_t nt = budget.test_points;
  for (std::size_t j = 0; j < nt; ++j) {
    const double x = -1.0 + (2.0 * static_cast<double>(j) + 1.0) / static_cast<double>(nt);
    res.sup_error = std::max(res.sup_error, std::abs(tape.forward(&x) - target(x)));
  }
  return res;
}

// --- checkpoints ------------------------------------------------------------------

namespace {
constexpr const char* kFormat = "wcreg-awcr-checkpoint";

void put_le(std::string& out, double v)
{
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

double get_le(const char* p)
{
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}
} // namespace

void save_checkpoint(const std::filesystem::path& path, const AwcrParams& p, const nlohmann::json& extra)
{
  check_structure(p);
  const Vec flat = flatten(p);
  nlohmann::json header = {{"format", kFormat},
                           {"version", 1},
                           {"architecture", arch_of(p).to_json()},
                           {"parameter_count", flat.size()},
                           {"mu0", p.mu0},
                           {"modulus", modulus_bound(p).to_json()},
                           {"extra", extra}};
  std::string out = header.dump();
  out += '\n';
  out.reserve(out.size() + 8 * flat.size());
  for (double v : flat)
    put_le(out, v);
  io::write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
  const std::string bytes = io::read_file(path);
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos)
    throw IoError(fmt::format("checkpoint {}: missing header line", path.string()));
  Checkpoint c;
  try {
    c.header = nlohmann::json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("checkpoint {}: bad header: {}", path.string(), e.what()));
  }
  if (c.header.value("format", "") != kFormat)
    throw IoError(fmt::format("checkpoint {}: unknown format", path.string()));
  const AwcrArch arch = AwcrArch::from_json(c.header.at("architecture"));
  c.params = init_awcr(arch, 0);
  const std::size_t count = c.params.parameter_count();
  if (bytes.size() - nl - 1 != 8 * count)
    throw IoError(fmt::format("checkpoint {}: expected {} weights", path.string(), count));
  Vec flat(count);
  for (std::size_t i = 0; i < count; ++i)
    flat[i] = get_le(bytes.data() + nl + 1 + 8 * i);
  unflatten(flat, c.params);
  check_structure(c.params);
  return c;
}

} // namespace wcreg::learn
