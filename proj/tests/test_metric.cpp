#include "doctest.h"
#include "test_util.hpp"

#include "land/metric.hpp"

#include <cmath>

using namespace land;

namespace {

// Independent evaluation of the kernel sum, entry by entry.
Vector direct_metric(const DataMatrix& data, double sigma, double rho, const Vector& x) {
  Vector out(x.size());
  for (Index d = 0; d < x.size(); ++d) {
    double s = rho;
    for (Index n = 0; n < data.rows(); ++n) {
      const double w = std::exp(-(data.row(n).transpose() - x).squaredNorm() / (2.0 * sigma * sigma));
      s += w * std::pow(data(n, d) - x[d], 2);
    }
    out[d] = 1.0 / s;
  }
  return out;
}

Matrix fd_derivative(const Metric& m, const Vector& x, double h) {
  const Index d = x.size();
  Matrix j(d, d);
  for (Index k = 0; k < d; ++k) {
    Vector xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    j.col(k) = (m.tensor(xp) - m.tensor(xm)) / (2.0 * h);
  }
  return j;
}

}  // namespace

TEST_SUITE("metric") {

TEST_CASE("metric at a lone anchor is 1/rho") {
  DataMatrix d(1, 2);
  d << 0.0, 0.0;
  const LearnedMetric m(d, {1.0, 0.1});
  const Vector g = metric_tensor(m, Vector::Zero(2));
  CHECK(g[0] == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(measure_density(m, Vector::Zero(2)) == doctest::Approx(10.0).epsilon(1e-14));
}

TEST_CASE("two-anchor metric matches the direct kernel sum") {
  const LearnedMetric m = test::two_anchor_metric();
  const Vector g = metric_tensor(m, Vector::Zero(2));
  const double s1 = 2.0 * std::exp(-0.5) + 0.1;
  CHECK(g[0] == doctest::Approx(1.0 / s1).epsilon(1e-14));
  CHECK(g[0] == doctest::Approx(0.7616).epsilon(1e-4));
  CHECK(g[1] == doctest::Approx(10.0).epsilon(1e-14));
  CHECK(measure_density(m, Vector::Zero(2)) == doctest::Approx(std::sqrt(10.0 / s1)).epsilon(1e-14));
  CHECK(measure_density(m, Vector::Zero(2)) == doctest::Approx(2.7597).epsilon(1e-4));
}

TEST_CASE("random points agree with the direct kernel sum") {
  const DataMatrix data = test::arc_data(60, 0.05, 3);
  const LearnedMetric m(data, {0.3, 0.02});
  auto eng = rng::stream(1, {1});
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int i = 0; i < 100; ++i) {
    Vector x(2);
    x << u(eng), u(eng);
    const Vector want = direct_metric(data, 0.3, 0.02, x);
    CHECK(test::rel_err(metric_tensor(m, x), want) < 1e-13);
  }
}

TEST_CASE("entries lie in (0, 1/rho] and approach 1/rho far away") {
  const DataMatrix data = test::arc_data(40, 0.05, 5);
  const double rho = 0.05;
  const LearnedMetric m(data, {0.2, rho});
  auto eng = rng::stream(2, {2});
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    Vector x(2);
    x << u(eng), u(eng);
    const Vector g = metric_tensor(m, x);
    CHECK(g.minCoeff() > 0.0);
    CHECK(g.maxCoeff() <= 1.0 / rho * (1.0 + 1e-15));
  }
  const Vector far = Vector::Constant(2, 1e3);
  CHECK(metric_tensor(m, far)[0] == doctest::Approx(1.0 / rho).epsilon(1e-15));
  CHECK(measure_density(m, far) == doctest::Approx(std::pow(rho, -1.0)).epsilon(1e-14));
  CHECK(metric_derivative(m, far).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("inside a dense cluster the metric is strictly below 1/rho") {
  DataMatrix data = test::gaussian_data(200, Vector::Zero(2), 0.01 * Matrix::Identity(2, 2), 4);
  const LearnedMetric m(data, {0.5, 0.1});
  const Vector g = metric_tensor(m, data.row(0).transpose());
  CHECK(g.maxCoeff() < 10.0);
  CHECK(g.maxCoeff() < 5.0);
}

TEST_CASE("anchor order does not matter") {
  const DataMatrix data = test::arc_data(30, 0.1, 6);
  DataMatrix shuffled = data.colwise().reverse();
  const LearnedMetric a(data, {0.4, 0.01});
  const LearnedMetric b(shuffled, {0.4, 0.01});
  Vector x(2);
  x << 0.2, 0.7;
  CHECK(test::rel_err(a.tensor(x), b.tensor(x)) < 1e-14);
  CHECK(test::rel_err(a.derivative(x), b.derivative(x)) < 1e-13);
}

TEST_CASE("reflection-symmetric data") {
  // Symmetric about the x axis: reflecting the data leaves M on the axis
  // unchanged and the derivative across the axis vanishes.
  DataMatrix data(6, 2);
  data << 0.1, 0.3, 0.1, -0.3, -0.5, 0.8, -0.5, -0.8, 0.9, 0.2, 0.9, -0.2;
  DataMatrix reflected = data;
  reflected.col(1) *= -1.0;
  const LearnedMetric a(data, {0.7, 0.05});
  const LearnedMetric b(reflected, {0.7, 0.05});
  Vector x(2);
  x << 0.3, 0.0;
  CHECK(test::rel_err(a.tensor(x), b.tensor(x)) < 1e-14);
  const Matrix j = a.derivative(x);
  CHECK(std::abs(j(0, 1)) < 1e-12);
  CHECK(std::abs(j(1, 1)) < 1e-12);
}

TEST_CASE("analytic derivative matches central differences") {
  const LearnedMetric m = test::two_anchor_metric();
  const Vector x = Vector::Zero(2);
  const Matrix j = metric_derivative(m, x);
  const Matrix fd = fd_derivative(m, x, 1e-5);
  // Entries that vanish by symmetry are compared absolutely.
  for (Index r = 0; r < 2; ++r) {
    for (Index c = 0; c < 2; ++c) {
      if (std::abs(fd(r, c)) < 1e-8) {
        CHECK(std::abs(j(r, c)) < 1e-8);
      } else {
        CHECK(test::rel_err(j(r, c), fd(r, c)) <= 1e-6);
      }
    }
  }

  Vector off(2);
  off << 0.3, -0.4;
  CHECK(test::rel_err(metric_derivative(m, off), fd_derivative(m, off, 1e-5)) <= 1e-6);

  const DataMatrix data = test::arc_data(50, 0.05, 9);
  const LearnedMetric lm(data, {0.25, 0.01});
  auto eng = rng::stream(3, {3});
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  for (int i = 0; i < 100; ++i) {
    Vector x2(2);
    x2 << u(eng), u(eng);
    const Matrix fd2 = fd_derivative(lm, x2, 1e-6);
    CHECK((metric_derivative(lm, x2) - fd2).norm() <= 1e-5 * std::max(fd2.norm(), 1.0));
  }
}

TEST_CASE("constant metric") {
  const ConstantMetric id = ConstantMetric::identity(3);
  CHECK(id.measure(Vector::Ones(3)) == 1.0);
  CHECK(id.derivative(Vector::Ones(3)).isZero(0.0));
  Vector diag(2);
  diag << 10.0, 10.0;
  const ConstantMetric c(diag);
  CHECK(c.measure(Vector::Zero(2)) == doctest::Approx(10.0).epsilon(1e-15));
  CHECK_THROWS_AS(ConstantMetric(Vector::Constant(2, -1.0)), std::invalid_argument);
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(LearnedMetric(DataMatrix(0, 2), {1.0, 0.1}), std::invalid_argument);
  DataMatrix bad = test::two_anchors();
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(LearnedMetric(bad, {1.0, 0.1}), std::invalid_argument);
  CHECK_THROWS_AS(LearnedMetric(test::two_anchors(), {0.0, 0.1}), std::invalid_argument);
  CHECK_THROWS_AS(LearnedMetric(test::two_anchors(), {1.0, -0.1}), std::invalid_argument);
  const LearnedMetric m = test::two_anchor_metric();
  CHECK_THROWS_AS(metric_tensor(m, Vector::Zero(3)), std::invalid_argument);
  CHECK_THROWS_AS(metric_tensor(m, Vector::Constant(2, std::nan(""))), std::invalid_argument);
}

TEST_CASE("suggest_rho uses the median pairwise distance") {
  DataMatrix d(3, 1);
  d << 0.0, 1.0, 3.0;  // distances 1, 3, 2
  CHECK(suggest_rho(d) == doctest::Approx(0.04).epsilon(1e-14));
  CHECK_THROWS_AS(suggest_rho(DataMatrix::Zero(4, 2)), std::invalid_argument);
}

}  // TEST_SUITE
