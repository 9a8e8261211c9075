#include "doctest.h"
#include "test_util.hpp"

#include "land/baselines.hpp"
#include "land/eval.hpp"

#include <cmath>

using namespace land;

TEST_SUITE("eval") {

TEST_CASE("half-ellipse geometry") {
  // Half the perimeter of an ellipse with semi-axes 1 and 0.5.
  const double e = std::sqrt(1.0 - 0.25);
  CHECK(half_ellipse_arc_length() == doctest::Approx(2.0 * std::comp_ellint_2(e)).epsilon(1e-9));
  const Matrix c = half_ellipse_centers();
  REQUIRE(c.rows() == kHalfEllipseComponents);
  CHECK(c(0, 0) == doctest::Approx(1.0));
  CHECK(c(19, 0) == doctest::Approx(-1.0));
  CHECK(std::abs(c(19, 1)) < 1e-15);
}

TEST_CASE("noise-free half-ellipsoid points lie on the arc") {
  const LabeledDataset d = gen_half_ellipsoid(60, 0.0, 1);
  REQUIRE(d.points.rows() == 60);
  REQUIRE(d.labels.size() == 60);
  const Matrix c = half_ellipse_centers();
  for (Index i = 0; i < 60; ++i) {
    const double x = d.points(i, 0), y = d.points(i, 1);
    CHECK(x * x + 4.0 * y * y == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(y >= -1e-15);
    CHECK(d.points.row(i) == c.row(d.labels[static_cast<size_t>(i)]));
  }
}

TEST_CASE("one point per component recovers the centers under k-means") {
  const LabeledDataset d = gen_half_ellipsoid(20, 0.0, 2);
  const KMeansResult km = euclidean_kmeans(d.points, 20, 0);
  const Matrix c = half_ellipse_centers();
  for (Index j = 0; j < 20; ++j) {
    double best = 1e300;
    for (Index r = 0; r < 20; ++r) best = std::min(best, (km.centers.row(r) - c.row(j)).norm());
    CHECK(best < 1e-12);
  }
}

TEST_CASE("generators are seed-stable") {
  CHECK(gen_half_ellipsoid(300, 0.05, 7).points == gen_half_ellipsoid(300, 0.05, 7).points);
  CHECK(gen_half_ellipsoid(300, 0.05, 7).points != gen_half_ellipsoid(300, 0.05, 8).points);
  CHECK(gen_two_moons(400, 0.08, 7).points == gen_two_moons(400, 0.08, 7).points);
  CHECK_THROWS_AS(gen_half_ellipsoid(0, 0.05, 0), std::invalid_argument);
  CHECK_THROWS_AS(gen_two_moons(10, -1.0, 0), std::invalid_argument);
}

TEST_CASE("noise-free two moons lie on their half circles") {
  const LabeledDataset d = gen_two_moons(101, 0.0, 3);
  int upper = 0;
  for (Index i = 0; i < d.points.rows(); ++i) {
    const double x = d.points(i, 0), y = d.points(i, 1);
    if (d.labels[static_cast<size_t>(i)] == 0) {
      ++upper;
      CHECK(x * x + y * y == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(y >= -1e-15);
    } else {
      CHECK((x - 1.0) * (x - 1.0) + (y - 0.5) * (y - 0.5) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(y <= 0.5 + 1e-15);
    }
  }
  CHECK(upper == 51);
  const LabeledDataset even = gen_two_moons(400, 0.08, 3);
  CHECK(std::count(even.labels.begin(), even.labels.end(), 0) == 200);
}

TEST_CASE("mean NLL under the truth") {
  const GaussianMixture q = half_ellipsoid_truth(0.05);
  // Samples from q itself estimate its differential entropy.
  const double small = mean_nll_under_truth(q.sample(20000, 1), q);
  const double large = mean_nll_under_truth(q.sample(400000, 2), q);
  CHECK(small == doctest::Approx(large).epsilon(0.02));

  const Vector mode = half_ellipse_centers().row(10).transpose();
  DataMatrix point(3, 2);
  point << mode.transpose(), mode.transpose(), mode.transpose();
  CHECK(mean_nll_under_truth(point, q) == doctest::Approx(-q.log_density(mode)).epsilon(1e-14));

  GaussianMixture broad;
  broad.means = {Vector::Zero(2)};
  broad.covariances = {Matrix::Identity(2, 2)};
  broad.weights = Vector::Ones(1);
  CHECK(mean_nll_under_truth(broad.sample(5000, 3), q) > large);
}

TEST_CASE("information criteria") {
  CHECK(num_free_params(1, 2) == 5);
  CHECK(num_free_params(3, 2) == 17);
  const InformationCriteria zero = aic_bic(0.0, 0, 300);
  CHECK(zero.aic == 0.0);
  CHECK(zero.bic == 0.0);
  const InformationCriteria a = aic_bic(-100.0, 5, 300);
  CHECK(a.bic - 200.0 == doctest::Approx(28.52).epsilon(1e-3));
  CHECK(aic_bic(-100.0, 10, 300).aic - a.aic == doctest::Approx(10.0));
  // Shifting every log-likelihood leaves the ordering unchanged.
  const InformationCriteria b = aic_bic(-90.0, 17, 300);
  CHECK((a.bic < b.bic) == (aic_bic(-100.0 + 7.0, 5, 300).bic < aic_bic(-90.0 + 7.0, 17, 300).bic));
}

TEST_CASE("F-measure") {
  const std::vector<int> labels = {0, 0, 0, 1, 1, 1};
  CHECK(f_measure(labels, labels) == 1.0);
  CHECK(f_measure(labels, {1, 1, 1, 0, 0, 0}) == 1.0);
  CHECK(f_measure(labels, {0, 0, 0, 0, 0, 0}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(f_measure(labels, {0, 0, 1, 1, 1, 1}) < 1.0);
  CHECK(f_measure(labels, {5, 5, 2, 2, 2, 2}) == f_measure(labels, {0, 0, 1, 1, 1, 1}));
  CHECK_THROWS_AS(f_measure(labels, {0}), std::invalid_argument);
  Matrix r(3, 2);
  r << 0.9, 0.1, 0.2, 0.8, 0.5, 0.5;
  CHECK(hard_assignments(r) == std::vector<int>{0, 1, 0});
}

}  // TEST_SUITE
