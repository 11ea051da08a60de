#include "wcreg/errors.hpp"
#include "wcreg/learn/spiral.hpp"
#include "wcreg/learn/training.hpp"
#include "wcreg/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

using namespace wcreg;
using namespace wcreg::learn;

namespace {
double silu(double a) { return a / (1.0 + std::exp(-a)); }
double leaky(double a) { return a > 0 ? a : 0.2 * a; }

// max relative error of an analytic gradient against central differences
template <class F>
double fd_error(F&& f, const Vec& x, const Vec& g, double h = 1e-6)
{
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Vec p = x, m = x;
    p[i] += h;
    m[i] -= h;
    const double fd = (f(p) - f(m)) / (2 * h);
    worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(fd)));
  }
  return worst;
}

IcnnParams single_affine(const Vec& a)
{
  IcnnParams p;
  p.input_dim = a.size();
  p.layers.push_back({1, {}, a, {0.0}});
  return p;
}
} // namespace

TEST_CASE("icnn")
{
  const IcnnParams lin = single_affine({0.6, -0.8});
  CHECK(icnn_forward(lin, {2.0, 1.0}) == doctest::Approx(0.4));

  // max(x, 0) through one hidden rectifier
  IcnnParams relu;
  relu.input_dim = 1;
  relu.slope = 0.0;
  relu.layers.push_back({1, {}, {1.0}, {0.0}});
  relu.layers.push_back({1, {1.0}, {0.0}, {0.0}});
  CHECK(icnn_forward(relu, {-0.5}) == 0.0);
  CHECK(icnn_forward(relu, {0.7}) == doctest::Approx(0.7));
  AwcrParams wrapped;
  wrapped.icnn = relu;
  wrapped.mu0 = 0.0;
  CHECK(check_rho_convexity(iwcnn_functional(wrapped), 0.0, 10000, {-3, 3}, 1) <= 1e-12);

  AwcrArch arch;
  arch.smooth_widths.clear();
  arch.icnn_hidden = {6, 5};
  arch.input_dim = 3;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const AwcrParams p = init_awcr(arch, seed);
    const Vec x{0.3, -1.1, 0.8};
    CHECK(fd_error([&](const Vec& u) { return icnn_forward(p.icnn, u); }, x, icnn_grad(p.icnn, x)) < 1e-5);
    CHECK(check_rho_convexity(iwcnn_functional(p), 0.0, 2000, {-2, 2}, seed, 3) <= 1e-12);
  }

  IcnnParams bad = relu;
  bad.layers[1].wz[0] = -0.1;
  CHECK_THROWS_AS(check_structure(bad), StructureError);
  AwcrParams badw;
  badw.icnn = bad;
  CHECK_THROWS_AS(iwcnn_functional(badw), StructureError);
  AwcrParams projected = badw;
  project_nonnegative(projected);
  CHECK(projected.icnn.layers[1].wz[0] == 0.0);
}

TEST_CASE("iwcnn")
{
  SUBCASE("empty smooth net reduces to the icnn")
  {
    AwcrArch arch;
    arch.smooth_widths.clear();
    const AwcrParams p = init_awcr(arch, 3);
    CHECK(iwcnn_forward(p, {0.2, 0.9}) == icnn_forward(p.icnn, {0.2, 0.9}));
  }
  SUBCASE("hand-set weights")
  {
    AwcrParams p;
    p.mu0 = 0.0;
    p.smooth.layers.push_back({1, 1, {2.0}, {0.5}});
    p.icnn.input_dim = 1;
    p.icnn.layers.push_back({1, {}, {1.5}, {-0.1}});
    p.icnn.layers.push_back({1, {0.7}, {0.3}, {0.2}});
    for (double x : {-1.3, -0.2, 0.4, 1.7}) {
      const double s = silu(2 * x + 0.5);
      const double z = leaky(1.5 * s - 0.1);
      CHECK(iwcnn_forward(p, {x}) == doctest::Approx(0.7 * z + 0.3 * s + 0.2).epsilon(1e-14));
    }
  }
  SUBCASE("zero biases at the origin")
  {
    AwcrParams p = init_awcr(AwcrArch{}, 2);
    for (auto& l : p.smooth.layers)
      std::fill(l.b.begin(), l.b.end(), 0.0);
    for (auto& l : p.icnn.layers)
      std::fill(l.b.begin(), l.b.end(), 0.0);
    CHECK(awcr_eval(p, {0.0, 0.0}) == iwcnn_forward(p, {0.0, 0.0}));
    CHECK(iwcnn_forward(p, {0.0, 0.0}) == 0.0);
  }
  SUBCASE("gradients")
  {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const AwcrParams p = init_awcr(AwcrArch{}, seed);
      const Vec x{0.37 * seed - 0.4, 0.81 - 0.2 * seed};
      CHECK(fd_error([&](const Vec& u) { return iwcnn_forward(p, u); }, x, iwcnn_grad(p, x)) < 1e-5);
      CHECK(fd_error([&](const Vec& u) { return awcr_eval(p, u); }, x, awcr_grad(p, x)) < 1e-5);
    }
  }
  SUBCASE("declared modulus holds")
  {
    const AwcrParams p = init_awcr(AwcrArch{}, 1);
    const ModulusBound mb = modulus_bound(p);
    CHECK(mb.rho_hat == doctest::Approx(mb.lipschitz_icnn * mb.beta_smooth));
    CHECK(check_rho_convexity(iwcnn_functional(p), mb.rho_hat, 5000, {-3, 3}, 4, 2) <= 1e-9);
    const Functional a = awcr_functional(p);
    CHECK(a.rho_wc == doctest::Approx(mb.rho_hat - p.mu0));
  }
  SUBCASE("split keeps the weakly convex part nonnegative on the box")
  {
    const AwcrParams p = init_awcr(AwcrArch{}, 1);
    const SplitRegulariser s = awcr_split(p, {-3, 3}, 2000, 5);
    Rng rng(9);
    for (int i = 0; i < 500; ++i)
      CHECK(s.r_wc.eval(rng.uniform_array({2}, -3, 3)) >= 0.0);
    CHECK(s.mu_sc == doctest::Approx(p.mu0));
  }
  CHECK_THROWS_AS(iwcnn_forward(init_awcr(AwcrArch{}, 0), {1.0}), ShapeError);
}

TEST_CASE("adversarial loss")
{
  SUBCASE("constant regulariser")
  {
    AwcrParams p = zeros_like(init_awcr(AwcrArch{}, 0));
    p.icnn.layers.back().b[0] = 3.0;
    p.mu0 = 0.0;
    const AdversarialLoss l = adversarial_loss(p, {{1, 2}, {0, 1}}, {{-1, 0}, {3, 3}}, 0.0, 1);
    CHECK(l.loss == 0.0);
    for (double g : flatten(l.grad))
      CHECK(g == 0.0);
  }
  SUBCASE("unit-gradient linear regulariser")
  {
    AwcrParams p;
    p.icnn = single_affine({0.6, 0.8});
    p.mu0 = 0.0;
    const AdversarialLoss l = adversarial_loss(p, {{1, 2}, {0, 1}}, {{-1, 0}, {3, 3}}, 10.0, 1);
    CHECK(l.penalty == 0.0);
  }
  SUBCASE("finite differences through everything")
  {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      AwcrArch arch{2, {1}, false, {1}, 0.2, 0.1};
      AwcrParams p = init_awcr(arch, seed);
      Vec th = flatten(p);
      for (auto& v : th)
        v *= 3.0; // keeps the penalty active
      unflatten(th, p);
      const Batch r{{0.3, -0.2}, {1.1, 0.4}}, n{{-0.5, 0.9}, {0.2, 0.1}};
      const AdversarialLoss l = adversarial_loss(p, r, n, 2.0, 7);
      const Vec g = flatten(l.grad);
      const double err = fd_error(
        [&](const Vec& t) {
          AwcrParams q = p;
          unflatten(t, q);
          return adversarial_loss(q, r, n, 2.0, 7).loss;
        },
        th, g);
      CHECK(err < 1e-4);
    }
  }
  CHECK_THROWS_AS(adversarial_loss(init_awcr(AwcrArch{}, 0), {{1, 2, 3}}, {{1, 2}}, 1.0, 0), ShapeError);
}

TEST_CASE("training loop")
{
  const SpiralFixture fx = spiral_fixture(40, 0.3, 0);
  const AwcrParams init = init_awcr(AwcrArch{}, 0);
  TrainSchedule s;
  s.epochs_phase1 = 0;
  s.epochs_phase2 = 0;
  const TrainResult r0 = train_awcr(init, fx.real, fx.noisy, s);
  CHECK(flatten(r0.params) == flatten(init));
  CHECK(r0.log.empty());

  s.epochs_phase1 = 2;
  s.epochs_phase2 = 2;
  s.learning_rate = 1e-2;
  const TrainResult r1 = train_awcr(init, fx.real, fx.noisy, s);
  REQUIRE(r1.log.size() == 4);
  CHECK(r1.log[0].lambda == s.lambda_phase1);
  CHECK(r1.log[3].lambda == s.lambda_phase2);
  check_structure(r1.params);
  const TrainResult r2 = train_awcr(init, fx.real, fx.noisy, s);
  CHECK(flatten(r1.params) == flatten(r2.params));
  const std::string csv = training_log_csv(r1.log);
  CHECK(csv.rfind("epoch,loss_real,loss_noisy,penalty,lambda,validation\n", 0) == 0);

  Batch poisoned = fx.real;
  poisoned[0][0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(train_awcr(init, poisoned, fx.noisy, s), TrainingDiverged);
}

TEST_CASE("checkpoint round trip")
{
  const AwcrParams p = init_awcr(AwcrArch{}, 4);
  const auto path = std::filesystem::temp_directory_path() / "wcreg_ckpt_test.bin";
  save_checkpoint(path, p, {{"note", "x"}});
  const Checkpoint c = load_checkpoint(path);
  CHECK(flatten(c.params) == flatten(p));
  CHECK(c.params.mu0 == p.mu0);
  CHECK(c.header["parameter_count"] == p.parameter_count());
  CHECK(c.header["extra"]["note"] == "x");
  std::filesystem::remove(path);
  CHECK(p.parameter_count() == 481);
  AwcrArch icnn;
  icnn.smooth_widths.clear();
  icnn.icnn_hidden = {19, 19};
  CHECK(init_awcr(icnn, 0).parameter_count() == 497);
}

TEST_CASE("spiral oracle")
{
  const SpiralFixture fx = spiral_fixture(50, 0.0, 3);
  CHECK(fx.real == fx.noisy);
  const SpiralShape shape;
  for (double t : {2.0, 4.4, 7.1}) {
    const auto q = shape.point(1, t);
    CHECK(fx.oracle.distance(q[0], q[1]) <= fx.oracle.pitch());
  }
  double brute = INFINITY;
  for (const auto& q : fx.oracle.points())
    brute = std::min(brute, std::hypot(q[0], q[1]));
  CHECK(fx.oracle.distance(0.0, 0.0) == brute);
  CHECK(brute == doctest::Approx(shape.a + shape.b * shape.t_min).epsilon(1e-9));
}

TEST_CASE("distance alignment")
{
  const SpiralFixture fx = spiral_fixture(10, 0.1, 0);
  const GridBox box;
  const auto d = [&](const Vec& x) { return fx.oracle.distance(x[0], x[1]); };
  const AlignmentReport self = distance_alignment(d, fx.oracle, box, 24);
  CHECK(self.correlation == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(self.sup_error <= fx.oracle.pitch());
  const AlignmentReport affine = distance_alignment([&](const Vec& x) { return 2 * d(x) + 5; }, fx.oracle, box, 24);
  CHECK(affine.correlation == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(affine.sup_error <= 1e-9);
  const AlignmentReport neg = distance_alignment([&](const Vec& x) { return -d(x); }, fx.oracle, box, 24);
  CHECK(neg.b == 0.0);
  CHECK(neg.correlation <= 0.0);
  const AlignmentReport flat = distance_alignment([](const Vec&) { return 1.0; }, fx.oracle, box, 24);
  CHECK(flat.correlation == 0.0);
}

TEST_CASE("universal demo on an affine target")
{
  DemoBudget b;
  b.arch.smooth_widths.clear();
  const DemoResult r = universal_demo([](double x) { return 0.3 * x - 0.2; }, b);
  CHECK(r.sup_error < 1e-3);
}
