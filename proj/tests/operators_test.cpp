#include "wcreg/errors.hpp"
#include "wcreg/linear_operator.hpp"
#include "wcreg/radon.hpp"
#include "wcreg/rng.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

using namespace wcreg;

namespace {
double largest_singular_value(std::size_t rows, std::size_t cols, const std::vector<double>& m)
{
  Eigen::MatrixXd a(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      a(i, j) = m[i * cols + j];
  return Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues()(0);
}
} // namespace

TEST_CASE("adjoint test")
{
  CHECK(adjoint_test(make_identity({6}), 10, 0) <= 1e-15);
  Rng rng(1);
  const std::vector<double> m = rng.normal_array({12}).storage();
  CHECK(adjoint_test(make_matrix(4, 3, m), 20, 1) < 1e-12);

  // adjoint taken from a different matrix
  const std::vector<double> other = rng.normal_array({12}).storage();
  const LinearOperator good = make_matrix(4, 3, m), bad_t = make_matrix(4, 3, other);
  const LinearOperator wrong("wrong", {3}, {4}, [good](const DenseArray& x) { return good.apply(x); },
                             [bad_t](const DenseArray& y) { return bad_t.adjoint(y); });
  CHECK(adjoint_test(wrong, 20, 2) > 0.1);
}

TEST_CASE("operator norm")
{
  CHECK(operator_norm(make_identity({5})).value == doctest::Approx(1.0));
  const NormEstimate d = operator_norm(make_matrix(3, 3, {1, 0, 0, 0, 2, 0, 0, 0, 3}));
  CHECK(d.converged);
  CHECK(d.value == doctest::Approx(3.0).epsilon(1e-9));
  Rng rng(7);
  const std::vector<double> m = rng.normal_array({300}).storage();
  const NormEstimate e = operator_norm(make_matrix(20, 15, m), {5000, 1e-14, 3});
  CHECK(std::abs(e.value - largest_singular_value(20, 15, m)) <= 1e-6 * e.value);
  const NormEstimate z = operator_norm(make_zero({4}, {3}));
  CHECK(z.value == 0.0);
  CHECK(z.converged);
}

TEST_CASE("convolution")
{
  const DenseArray x = DenseArray::vector({1, 2, 3});
  CHECK(make_convolution(DenseArray::vector({1}), Boundary::zero, {3}).apply(x) == x);
  const LinearOperator shift = make_convolution(DenseArray::vector({0, 0, 1}), Boundary::periodic, {3});
  CHECK(shift.apply(x) == DenseArray::vector({3, 1, 2}));
  CHECK(shift.adjoint(DenseArray::vector({3, 1, 2})) == x);
  for (Boundary b : {Boundary::zero, Boundary::periodic}) {
    const LinearOperator g = make_convolution(gaussian_kernel_1d(5, 1.0), b, {64});
    CHECK(adjoint_test(g, 20, 4) < 1e-12);
    // against the assembled matrix
    const std::vector<double> dense = assemble_dense(g);
    Rng rng(9);
    const DenseArray u = rng.normal_array({64});
    const DenseArray gu = g.apply(u);
    for (std::size_t i = 0; i < 64; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 64; ++j)
        s += dense[i * 64 + j] * u[j];
      CHECK(gu[i] == doctest::Approx(s).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(make_convolution(DenseArray::vector({1, 1}), Boundary::zero, {8}), ConfigError);
  CHECK(adjoint_test(make_convolution(DenseArray({3, 5}, 0.1), Boundary::periodic, {8, 9}), 10, 1) < 1e-12);
}

TEST_CASE("subsampling")
{
  const DenseArray ones({4}, 1.0);
  CHECK(make_subsample(ones).apply(DenseArray::vector({1, 2, 3, 4})) == DenseArray::vector({1, 2, 3, 4}));
  const LinearOperator s = make_subsample(DenseArray::vector({1, 0, 0}));
  CHECK(s.apply(DenseArray::vector({5, 6, 7})) == DenseArray::vector({5}));
  CHECK(s.adjoint(DenseArray::vector({5})) == DenseArray::vector({5, 0, 0}));
  Rng rng(3);
  DenseArray mask = rng.uniform_array({40}, 0, 1);
  for (auto& v : mask.values())
    v = v < 0.5 ? 1.0 : 0.0;
  mask[0] = 1.0;
  const LinearOperator r = make_subsample(mask);
  CHECK(adjoint_test(r, 20, 5) < 1e-15);
  const double n = operator_norm(r).value;
  CHECK(n >= 1.0 - 1e-9);
  CHECK(n <= 1.0 + 1e-9);
  CHECK_THROWS_AS(make_subsample(DenseArray({3})), ConfigError);
}

TEST_CASE("composition norm is submultiplicative")
{
  Rng rng(12);
  const LinearOperator a = make_matrix(6, 5, rng.normal_array({30}).storage());
  const LinearOperator b = make_matrix(4, 6, rng.normal_array({24}).storage());
  const PowerMethodOptions o{5000, 1e-13, 1};
  const double nab = operator_norm(compose(b, a), o).value;
  CHECK(nab <= operator_norm(a, o).value * operator_norm(b, o).value + 1e-9);
  CHECK(adjoint_test(compose(b, a), 10, 3) < 1e-12);
}

TEST_CASE("radon")
{
  const std::size_t n = 64;
  const LinearOperator r = make_radon(n, uniform_angles(20), 91);
  CHECK(max_abs(r.apply(DenseArray({n, n}))) == 0.0);
  CHECK(adjoint_test(r, 10, 2) < 1e-13);

  SUBCASE("row profile equals weight-table sums")
  {
    const RadonGeometry g{n, {0.0}, 91};
    const SparseWeights w = build_radon_weights(g);
    DenseArray img({n, n});
    const std::size_t mid = n / 2;
    for (std::size_t j = 0; j < n; ++j)
      img.at(mid, j) = 1.0;
    const DenseArray sino = make_radon(n, {0.0}, 91).apply(img);
    for (std::size_t d = 0; d < 91; ++d) {
      double s = 0.0;
      for (std::size_t k = w.row_start[d]; k < w.row_start[d + 1]; ++k)
        if (w.col_index[k] / n == mid)
          s += w.weight[k];
      CHECK(sino[d] == doctest::Approx(s).epsilon(1e-12));
    }
  }

  SUBCASE("disc projections follow chord lengths")
  {
    const double rad = 0.5;
    DenseArray disc({n, n});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double x = -1.0 + (static_cast<double>(j) + 0.5) * 2.0 / n;
        const double y = -1.0 + (static_cast<double>(i) + 0.5) * 2.0 / n;
        disc.at(i, j) = x * x + y * y <= rad * rad ? 1.0 : 0.0;
      }
    const std::vector<double> angles{0.0, 0.4, 1.1};
    const RadonGeometry g{n, angles, 91};
    const DenseArray sino = make_radon(n, angles, 91).apply(disc);
    std::size_t checked = 0;
    for (std::size_t a = 0; a < angles.size(); ++a)
      for (std::size_t d = 0; d < 91; ++d) {
        const double s = g.detector_position(d);
        if (std::abs(s) >= 0.8 * rad)
          continue;
        const double chord = 2.0 * std::sqrt(rad * rad - s * s);
        CHECK(std::abs(sino.at(a, d) - chord) <= 0.05 * chord);
        ++checked;
      }
    CHECK(checked > 30);
  }

  std::ostringstream csv;
  build_radon_weights({16, {0.0}, 23}).write_csv(csv);
  CHECK(csv.str().rfind("row,col,weight\n", 0) == 0);
  CHECK_THROWS_AS(make_radon(n, {}, 10), ConfigError);
}
