#include "doctest.h"
#include "test_util.hpp"

#include "land/land.hpp"

#include <cmath>

using namespace land;

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

Matrix random_spd(int d, std::uint64_t seed, double scale) {
  const Matrix b = rng::standard_normal_rows(seed, {0x737064}, d, d);
  return scale * (b * b.transpose() / d + 0.5 * Matrix::Identity(d, d));
}

McOptions mc_opts(int s, std::uint64_t seed) {
  McOptions o;
  o.samples = s;
  o.seed = seed;
  return o;
}

// Tangent-space trapezoidal integral of m(mu, v) exp(-1/2 v^T Sigma^-1 v)
// over a square grid of side 2 L with n nodes per axis.
double trapezoid_constant(const Metric& m, const LandParams& p, double half_width, int n) {
  const double h = 2.0 * half_width / (n - 1);
  double sum = 0.0;
  GeodesicSolverConfig cfg;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Vector v(2);
      v << -half_width + i * h, -half_width + j * h;
      const ExpMapResult e = exp_map(m, p.mu(), v, cfg, false);
      REQUIRE(e.ok());
      const double w = (i == 0 || i == n - 1 ? 0.5 : 1.0) * (j == 0 || j == n - 1 ? 0.5 : 1.0);
      sum += w * m.measure(e.endpoint) * std::exp(-0.5 * (p.factor() * v).squaredNorm());
    }
  }
  return sum * h * h;
}

double gaussian_log_density(const Vector& x, const Vector& mu, const Matrix& sigma) {
  const Eigen::LLT<Matrix> llt(sigma);
  const Vector r = x - mu;
  const double logdet = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
  return -0.5 * r.dot(llt.solve(r)) - 0.5 * (x.size() * kLog2Pi + logdet);
}

// phi as a function of A with the proposal frozen at A0: the constant is
// re-weighted by exp(-1/2 v^T (A^T A - A0^T A0) v).
double reweighted_phi(const TangentBatch& logs, const McSamples& mc, const Matrix& a0, const Matrix& a) {
  double data = 0.0;
  for (Index i = 0; i < logs.vectors.rows(); ++i) data += (a * logs.vectors.row(i).transpose()).squaredNorm();
  data /= 2.0 * logs.vectors.rows();
  const Matrix delta = a.transpose() * a - a0.transpose() * a0;
  double s = 0.0;
  for (Index k = 0; k < mc.tangent.rows(); ++k) {
    const Vector v = mc.tangent.row(k).transpose();
    s += mc.measure[k] * std::exp(-0.5 * v.dot(delta * v));
  }
  return data + mc.log_z + std::log(s / mc.valid);
}

}  // namespace

TEST_SUITE("land") {

TEST_CASE("parameters round-trip between covariance and factor") {
  const Matrix sigma = random_spd(3, 1, 1.0);
  const LandParams p = LandParams::from_covariance(Vector::Zero(3), sigma);
  CHECK(test::rel_err(p.sigma(), sigma) < 1e-12);
  CHECK(test::rel_err(p.precision(), Matrix(sigma.inverse())) < 1e-12);
  CHECK(Matrix(p.factor().triangularView<Eigen::StrictlyLower>()).isZero(0.0));
  const LandParams q = LandParams::from_factor(Vector::Zero(3), p.factor());
  CHECK(test::rel_err(q.sigma(), sigma) < 1e-12);
  CHECK(p.log_euclidean_normalizer() ==
        doctest::Approx(0.5 * std::log(std::pow(2 * M_PI, 3) * sigma.determinant())).epsilon(1e-12));
  CHECK_THROWS_AS(LandParams::from_factor(Vector::Zero(2), Matrix::Zero(2, 2)), NumericalError);
  CHECK_THROWS_AS(LandParams::from_covariance(Vector::Zero(2), -Matrix::Identity(2, 2)), NumericalError);
}

TEST_CASE("identity metric gives the Euclidean normalizer for every S") {
  const ConstantMetric id = ConstantMetric::identity(2);
  const LandParams p = LandParams::from_covariance(Vector::Ones(2), random_spd(2, 2, 0.7));
  for (int s : {1, 7, 3000}) {
    const McSamples mc = normalization_constant(id, p, mc_opts(s, 3));
    CHECK(mc.estimate == doctest::Approx(std::exp(p.log_euclidean_normalizer())).epsilon(1e-12));
    CHECK(mc.valid == s);
  }
}

TEST_CASE("constant metric c I scales the constant by c^(D/2)") {
  const double c = 2.5;
  const ConstantMetric m(Vector::Constant(3, c));
  const LandParams p = LandParams::from_covariance(Vector::Zero(3), random_spd(3, 4, 1.0));
  const McSamples mc = normalization_constant(m, p, mc_opts(50, 1));
  CHECK(mc.estimate == doctest::Approx(std::exp(p.log_euclidean_normalizer()) * std::pow(c, 1.5)).epsilon(1e-12));
}

TEST_CASE("Monte Carlo constant agrees with the trapezoidal integral") {
  const LearnedMetric m = test::two_anchor_metric();
  const LandParams p = LandParams::from_covariance(Vector::Zero(2), 0.25 * Matrix::Identity(2, 2));
  const double trap = trapezoid_constant(m, p, 2.5, 100);
  const McSamples mc = normalization_constant(m, p, mc_opts(3000, 0));
  CHECK(test::rel_err(mc.estimate, trap) < 0.03);

  // The density integrates to one over the manifold.
  LandParams q = p;
  q.norm_const = mc.estimate;
  CHECK(trap / q.norm_const == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("log density") {
  const LearnedMetric m = test::two_anchor_metric();
  GeodesicSolverConfig cfg;
  LandParams p = LandParams::from_covariance(Vector::Zero(2), 0.25 * Matrix::Identity(2, 2));
  CHECK_THROWS_AS(log_density(p, m, p.mu(), cfg), std::invalid_argument);
  p.norm_const = 3.7;
  CHECK(log_density(p, m, p.mu(), cfg) == doctest::Approx(-std::log(3.7)).epsilon(1e-14));

  const ConstantMetric id = ConstantMetric::identity(2);
  Vector mu(2);
  mu << 0.4, -0.2;
  const Matrix sigma = random_spd(2, 5, 0.5);
  LandParams g = LandParams::from_covariance(mu, sigma);
  g.norm_const = normalization_constant(id, g, mc_opts(10, 0)).estimate;
  auto eng = rng::stream(5, {5});
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    Vector x(2);
    x << n(eng), n(eng);
    CHECK(log_density(g, id, x, cfg) == doctest::Approx(gaussian_log_density(x, mu, sigma)).epsilon(1e-8));
  }
}

TEST_CASE("objective") {
  GeodesicSolverConfig cfg;
  const ConstantMetric id = ConstantMetric::identity(2);
  const DataMatrix data = test::gaussian_data(40, Vector::Ones(2), random_spd(2, 6, 1.0), 6);
  Vector mu(2);
  mu << 0.9, 1.2;
  const Matrix sigma = random_spd(2, 7, 1.0);
  LandParams p = LandParams::from_covariance(mu, sigma);
  p.norm_const = normalization_constant(id, p, mc_opts(5, 0)).estimate;
  double want = 0.0;
  for (Index i = 0; i < data.rows(); ++i) want -= gaussian_log_density(data.row(i).transpose(), mu, sigma);
  CHECK(nll_objective(data, p, id, cfg) == doctest::Approx(want / data.rows()).epsilon(1e-10));

  // A single point at the mean leaves ln C.
  const LearnedMetric m = test::two_anchor_metric();
  LandParams q = LandParams::from_covariance(Vector::Zero(2), 0.25 * Matrix::Identity(2, 2));
  q.norm_const = 5.0;
  CHECK(nll_objective(DataMatrix(q.mu().transpose()), q, m, cfg) == doctest::Approx(std::log(5.0)).epsilon(1e-14));
}

TEST_CASE("objective matches a duplicate evaluation on a learned metric") {
  GeodesicSolverConfig cfg;
  const LearnedMetric m(test::arc_data(30, 0.05, 8), {0.3, 0.01});
  const DataMatrix data = test::arc_data(10, 0.1, 9);
  Vector mu(2);
  mu << 0.1, 0.8;
  const Matrix sigma = random_spd(2, 8, 0.3);
  const LandParams p = LandParams::from_covariance(mu, sigma);
  const McSamples mc = normalization_constant(m, p, mc_opts(300, 2));
  const TangentBatch logs = log_map_batch(m, mu, data, cfg);
  REQUIRE(logs.valid_count() == 10);

  const Matrix prec = sigma.inverse();
  double quad = 0.0;
  for (Index i = 0; i < 10; ++i) {
    const Vector l = logs.vectors.row(i).transpose();
    quad += l.dot(prec * l);
  }
  double msum = 0.0;
  for (Index s = 0; s < mc.measure.size(); ++s) msum += mc.measure[s];
  const double log_c = 0.5 * std::log(std::pow(2 * M_PI, 2) * sigma.determinant()) + std::log(msum / mc.valid);
  CHECK(mc.log_estimate == doctest::Approx(log_c).epsilon(1e-12));
  CHECK(nll_objective(logs, p, mc.log_estimate) == doctest::Approx(quad / 20.0 + log_c).epsilon(1e-8));

  TangentBatch broken = logs;
  for (int i = 0; i < 6; ++i) broken.ok[static_cast<size_t>(i)] = 0;
  CHECK_THROWS_AS(nll_objective(broken, p, 0.0), NumericalError);
}

TEST_CASE("mean direction vanishes at the Gaussian MLE") {
  GeodesicSolverConfig cfg;
  const ConstantMetric id = ConstantMetric::identity(2);
  const DataMatrix data = test::gaussian_data(100, Vector::Zero(2), Matrix::Identity(2, 2), 10);
  const Vector mean = data.colwise().mean().transpose();
  const LandParams p = LandParams::from_covariance(mean, Matrix::Identity(2, 2));
  const McSamples mc = normalization_constant(id, p, mc_opts(4000, 1));
  const TangentBatch logs = log_map_batch(id, mean, data, cfg);
  CHECK(descent_direction_mu(logs, mc).norm() < 1e-10);

  // Off the mean, d_mu is the mean residual.
  const Vector shifted = mean + Vector::Constant(2, 0.3);
  const TangentBatch logs2 = log_map_batch(id, shifted, data, cfg);
  CHECK((descent_direction_mu(logs2, mc) - (mean - shifted)).norm() < 1e-10);

  // Every point at the mean and zero-mean samples.
  const DataMatrix at_mu = mean.transpose().replicate(5, 1);
  CHECK(descent_direction_mu(log_map_batch(id, mean, at_mu, cfg), mc).norm() < 1e-12);
}

TEST_CASE("factor gradient special cases") {
  GeodesicSolverConfig cfg;
  const ConstantMetric id = ConstantMetric::identity(2);
  const DataMatrix data = test::gaussian_data(200, Vector::Zero(2), random_spd(2, 11, 1.0), 11);
  const Vector mean = data.colwise().mean().transpose();
  const TangentBatch logs = log_map_batch(id, mean, data, cfg);
  const Matrix second = logs.vectors.transpose() * logs.vectors / static_cast<double>(data.rows());
  const LandParams p = LandParams::from_covariance(mean, second);
  const McSamples mc = normalization_constant(id, p, mc_opts(3000, 4));
  CHECK(grad_A(logs, p, mc).norm() < 1e-10);

  const ConstantMetric c(Vector::Constant(2, 3.0));
  const McSamples mcc = normalization_constant(c, p, mc_opts(500, 5));
  const TangentBatch at_mu = log_map_batch(c, mean, DataMatrix(mean.transpose().replicate(4, 1)), cfg);
  const Matrix mc_cov = mcc.tangent.transpose() * mcc.tangent / 500.0;
  CHECK(test::rel_err(grad_A(at_mu, p, mcc), Matrix(-p.factor() * mc_cov)) < 1e-12);
}

TEST_CASE("mean gradient matches finite differences on anisotropic constant metrics") {
  GeodesicSolverConfig cfg;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Vector diag = (rng::standard_normal_rows(seed, {1}, 1, 2).row(0).transpose().array().exp()).matrix();
    const ConstantMetric m(diag);
    const DataMatrix data = test::gaussian_data(30, Vector::Zero(2), random_spd(2, seed, 1.0), seed);
    const Vector mu = 0.5 * rng::standard_normal_rows(seed, {2}, 1, 2).row(0).transpose();
    const LandParams p = LandParams::from_covariance(mu, random_spd(2, seed + 100, 0.8));
    const McSamples mc = normalization_constant(m, p, mc_opts(500, seed));
    const Vector g = gradient_mu(log_map_batch(m, mu, data, cfg), p, mc);
    const double h = 1e-5;
    Vector fd(2);
    for (Index k = 0; k < 2; ++k) {
      Vector up = mu, dn = mu;
      up[k] += h;
      dn[k] -= h;
      const LandParams pu = LandParams::from_factor(up, p.factor());
      const LandParams pd = LandParams::from_factor(dn, p.factor());
      // A constant metric leaves the frozen-sample constant unchanged.
      fd[k] = (nll_objective(log_map_batch(m, up, data, cfg), pu, mc.log_estimate) -
               nll_objective(log_map_batch(m, dn, data, cfg), pd, mc.log_estimate)) /
              (2 * h);
    }
    CHECK(test::rel_err(g, fd) <= 1e-3);
  }
}

TEST_CASE("factor gradient matches finite differences on a learned metric") {
  GeodesicSolverConfig cfg;
  const LearnedMetric m(test::arc_data(40, 0.05, 12), {0.3, 0.01});
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const DataMatrix data = test::arc_data(15, 0.1, 20 + seed);
    Vector mu(2);
    mu << 0.2 * static_cast<double>(seed) - 0.4, 0.8;
    const LandParams p = LandParams::from_covariance(mu, random_spd(2, seed + 200, 0.2));
    const McSamples mc = normalization_constant(m, p, mc_opts(400, seed));
    const TangentBatch logs = log_map_batch(m, mu, data, cfg);
    REQUIRE(logs.valid_count() == data.rows());
    const Matrix g = grad_A(logs, p, mc);
    const Matrix a0 = p.factor();
    CHECK(reweighted_phi(logs, mc, a0, a0) == doctest::Approx(nll_objective(logs, p, mc.log_estimate)).epsilon(1e-12));
    Matrix fd(2, 2);
    const double h = 1e-6;
    for (Index r = 0; r < 2; ++r) {
      for (Index c = 0; c < 2; ++c) {
        Matrix up = a0, dn = a0;
        up(r, c) += h;
        dn(r, c) -= h;
        fd(r, c) = (reweighted_phi(logs, mc, a0, up) - reweighted_phi(logs, mc, a0, dn)) / (2 * h);
      }
    }
    CHECK(test::rel_err(g, fd) <= 1e-3);
  }
}

TEST_CASE("fit on a flat metric recovers the Gaussian MLE") {
  const ConstantMetric id = ConstantMetric::identity(2);
  Matrix cov(2, 2);
  cov << 2.0, 0.6, 0.6, 0.5;
  Vector mean(2);
  mean << 1.0, -2.0;
  const DataMatrix data = test::gaussian_data(500, mean, cov, 13);
  const Vector sm = data.colwise().mean().transpose();
  const DataMatrix centered = data.rowwise() - sm.transpose();
  const Matrix ml = centered.transpose() * centered / 500.0;
  FitConfig cfg;
  cfg.mc_samples = 200;
  cfg.max_iter = 500;
  cfg.tol = 1e-14;
  const FitResult r = fit_mle(data, id, cfg);
  const double scale = std::sqrt(ml.trace());
  CHECK((r.params.mu() - sm).norm() <= 1e-3 * scale);
  CHECK(test::rel_err(r.params.sigma(), ml) <= 0.01);
  CHECK(*std::min_element(r.trace.begin(), r.trace.end()) <= r.trace.front());
  CHECK(r.trace.size() == static_cast<size_t>(r.iterations) + 1);
}

TEST_CASE("fit returns the best iterate on a learned metric") {
  const DataMatrix data = test::arc_data(40, 0.05, 14);
  const LearnedMetric m(data, {0.3, suggest_rho(data)});
  FitConfig cfg;
  cfg.mc_samples = 300;
  cfg.max_iter = 6;
  const FitResult r = fit_mle(data, m, cfg);
  const double best = *std::min_element(r.trace.begin(), r.trace.end());
  CHECK(best <= r.trace.front());
  CHECK(r.params.norm_const > 0.0);
  CHECK(r.params.norm_const_samples == 300);
  // Same configuration, same result.
  const FitResult again = fit_mle(data, m, cfg);
  CHECK(again.trace == r.trace);
  CHECK(again.params.mu() == r.params.mu());
}

TEST_CASE("fit configuration validation") {
  FitConfig cfg;
  cfg.mc_samples = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_THROWS_AS(fit_mle(DataMatrix::Zero(1, 2), ConstantMetric::identity(2), FitConfig{}), std::invalid_argument);
}

TEST_CASE("sampling on flat metrics is exact Gaussian sampling") {
  Vector mu(2);
  mu << 0.5, -1.0;
  Matrix sigma(2, 2);
  sigma << 1.0, 0.3, 0.3, 0.4;
  const LandParams p = LandParams::from_covariance(mu, sigma);
  SampleConfig sc;
  const Index n = 20000;
  for (double c : {1.0, 4.0}) {
    const ConstantMetric m(Vector::Constant(2, c));
    const SampleResult s = sample(p, m, n, 3, sc);
    CHECK(s.ess == doctest::Approx(static_cast<double>(s.proposals)).epsilon(1e-9));
    const Vector sm = s.points.colwise().mean().transpose();
    const DataMatrix centered = s.points.rowwise() - sm.transpose();
    const Matrix sc_cov = centered.transpose() * centered / static_cast<double>(n);
    CHECK((sm - mu).norm() < 5.0 / std::sqrt(static_cast<double>(n)));
    CHECK(test::rel_err(sc_cov, sigma) < 0.05);
  }
}

TEST_CASE("sampling is deterministic and checks the effective sample size") {
  const LearnedMetric m = test::two_anchor_metric();
  const LandParams p = LandParams::from_covariance(Vector::Zero(2), 0.25 * Matrix::Identity(2, 2));
  SampleConfig sc;
  const SampleResult a = sample(p, m, 200, 9, sc);
  const SampleResult b = sample(p, m, 200, 9, sc);
  CHECK(a.points == b.points);
  CHECK(a.points != sample(p, m, 200, 10, sc).points);
  sc.oversampling = 1;
  CHECK_THROWS_AS(sample(p, m, 200, 9, sc), NumericalError);
}

TEST_CASE("samples approach the density on a learned metric") {
  const LearnedMetric m = test::two_anchor_metric();
  GeodesicSolverConfig cfg;
  LandParams p = LandParams::from_covariance(Vector::Zero(2), 0.25 * Matrix::Identity(2, 2));
  p.norm_const = normalization_constant(m, p, mc_opts(3000, 0)).estimate;
  // 6 x 6 cells on [-1.2, 1.2] x [-0.6, 0.6]; density mass by 3 x 3 midpoints per cell.
  const int cells = 6;
  const double x0 = -1.2, y0 = -0.6, wx = 2.4 / cells, wy = 1.2 / cells;
  Vector mass(cells * cells);
  for (int i = 0; i < cells; ++i) {
    for (int j = 0; j < cells; ++j) {
      double s = 0.0;
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
          Vector x(2);
          x << x0 + (i + (a + 0.5) / 3.0) * wx, y0 + (j + (b + 0.5) / 3.0) * wy;
          s += std::exp(log_density(p, m, x, cfg));
        }
      }
      mass[i * cells + j] = s;
    }
  }
  mass /= mass.sum();
  auto chi2 = [&](Index n) {
    const DataMatrix pts = sample(p, m, n, 1, SampleConfig{}).points;
    Vector counts = Vector::Zero(cells * cells);
    for (Index r = 0; r < n; ++r) {
      const int i = static_cast<int>(std::floor((pts(r, 0) - x0) / wx));
      const int j = static_cast<int>(std::floor((pts(r, 1) - y0) / wy));
      if (i >= 0 && j >= 0 && i < cells && j < cells) counts[i * cells + j] += 1.0;
    }
    counts /= counts.sum();
    return ((counts - mass).array().square() / (counts + mass).array().max(1e-300)).sum();
  };
  CHECK(chi2(8000) < chi2(250));
}

}  // TEST_SUITE
