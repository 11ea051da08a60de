#include "wcreg/errors.hpp"
#include "wcreg/fidelity.hpp"

#include <doctest.h>

#include <cmath>

using namespace wcreg;

TEST_CASE("squared l2 discrepancy")
{
  const DenseArray y = DenseArray::vector({1, -2});
  CHECK(sq_l2(y, y) == 0.0);
  CHECK(sq_l2(DenseArray::vector({3, 4}), DenseArray::vector({0, 0})) == 12.5);
  CHECK_THROWS_AS(sq_l2(y, DenseArray::vector({1})), ShapeError);
  const Fidelity f = squared_l2_fidelity();
  CHECK(f.p == 2.0);
  CHECK(f.c == 2.0);
  CHECK(f.convex_in_first);
}

TEST_CASE("conjugate prox")
{
  CHECK(conj_prox(make_conjugate_fidelity(1.0, DenseArray::vector({0})), 1.0, DenseArray::vector({2}))[0] ==
        doctest::Approx(1.0));
  // grid minimiser of w^2/2 + 2w + (w - 4)^2/2
  double best = 0.0, best_val = INFINITY;
  for (double w = -10; w <= 10; w += 1e-4) {
    const double v = 0.5 * w * w + 2 * w + 0.5 * (w - 4) * (w - 4);
    if (v < best_val) {
      best_val = v;
      best = w;
    }
  }
  const ConjugateFidelity cf = make_conjugate_fidelity(1.0, DenseArray::vector({2}));
  CHECK(conj_prox(cf, 1.0, DenseArray::vector({4}))[0] == doctest::Approx(1.0));
  CHECK(std::abs(conj_prox(cf, 1.0, DenseArray::vector({4}))[0] - best) <= 1e-4);
  CHECK(std::abs(conj_prox(cf, 1e-8, DenseArray::vector({4}))[0] - 4.0) < 1e-6);
  CHECK(cf.mu_fid == 1.0);
  CHECK(make_conjugate_fidelity(2.5, DenseArray::vector({0})).mu_fid == 2.5);
  CHECK_THROWS_AS(make_conjugate_fidelity(0.0, DenseArray::vector({0})), ConfigError);
}

TEST_CASE("conjugate value")
{
  CHECK(conj_eval(make_conjugate_fidelity(1.0, DenseArray::vector({0})), DenseArray::vector({0})) == 0.0);
  CHECK(conj_eval(make_conjugate_fidelity(1.0, DenseArray::vector({0})), DenseArray::vector({2})) == 2.0);
  const ConjugateFidelity cf = make_conjugate_fidelity(2.0, DenseArray::vector({1}));
  CHECK(conj_eval(cf, DenseArray::vector({3})) == doctest::Approx(12.0));
  // sup_y <w, y> - F(y) on a grid
  double sup = -INFINITY;
  for (double y = -50; y <= 50; y += 1e-3)
    sup = std::max(sup, 3 * y - primal_eval(cf, DenseArray::vector({y})));
  CHECK(std::abs(sup - 12.0) <= 1e-3);
  CHECK(conj_grad(cf, DenseArray::vector({3}))[0] == doctest::Approx(7.0));
  CHECK(primal_grad(cf, DenseArray::vector({3}))[0] == doctest::Approx(1.0));
}

TEST_CASE("quasi-triangle audit")
{
  const DenseArray y1 = DenseArray::vector({1, 2}), y2 = DenseArray::vector({-1, 0.5});
  // y2 = y3 reduces to D/D
  CHECK(sq_l2(y1, y2) / (sq_l2(y1, y2) + 0.0) <= 1.0);
  // y1 = y3: D(y1,y2) / |y2 - y1|^2 = 1/2
  CHECK(sq_l2(y1, y2) / (0.0 + std::pow(distance(y2, y1), 2)) == doctest::Approx(0.5));
  const Assumption5Report r = assumption5_audit(squared_l2_fidelity(), 10000, 3);
  CHECK(r.worst_ratio <= 2.0);
  CHECK(r.pass);
  CHECK(r.certificate.pass);
}
