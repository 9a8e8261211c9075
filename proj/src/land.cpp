#include "land/land.hpp"

#include "component.hpp"
#include "log.hpp"
#include "land/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace land {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr std::uint64_t kMcKey = 0x4c414e442d6d63ULL;
constexpr std::uint64_t kSampleKey = 0x4c414e442d7273ULL;

void check_mean(const Vector& mu) {
  if (mu.size() < 1 || !mu.allFinite()) throw std::invalid_argument("LAND mean must be finite and non-empty");
}

}  // namespace

LandParams LandParams::from_covariance(Vector mu, const Matrix& sigma) {
  check_mean(mu);
  if (sigma.rows() != mu.size() || sigma.cols() != mu.size() || !sigma.allFinite()) {
    throw std::invalid_argument("covariance must be a finite D x D matrix");
  }
  const Matrix sym = 0.5 * (sigma + sigma.transpose());
  const Eigen::LLT<Matrix> llt(sym);
  if (llt.info() != Eigen::Success) throw NumericalError("covariance is not positive definite");
  const Matrix precision = llt.solve(Matrix::Identity(sym.rows(), sym.cols()));
  const Eigen::LLT<Matrix> pllt(0.5 * (precision + precision.transpose()));
  if (pllt.info() != Eigen::Success) throw NumericalError("precision is not positive definite");
  LandParams p;
  p.mu_ = std::move(mu);
  p.a_ = pllt.matrixU();
  p.sigma_ = sym;
  return p;
}

LandParams LandParams::from_factor(Vector mu, Matrix a) {
  check_mean(mu);
  if (a.rows() != mu.size() || a.cols() != mu.size() || !a.allFinite()) {
    throw std::invalid_argument("factor must be a finite D x D matrix");
  }
  const Eigen::PartialPivLU<Matrix> lu(a);
  if (!(std::abs(lu.determinant()) >= 1e-12)) throw NumericalError("factor A lost rank (|det A| < 1e-12)");
  LandParams p;
  p.mu_ = std::move(mu);
  const Matrix inv = lu.inverse();
  p.sigma_ = inv * inv.transpose();
  p.sigma_ = 0.5 * (p.sigma_ + p.sigma_.transpose());
  p.a_ = std::move(a);
  return p;
}

double LandParams::log_euclidean_normalizer() const {
  const Eigen::PartialPivLU<Matrix> lu(a_);
  const double log_det_a = lu.matrixLU().diagonal().array().abs().log().sum();
  return 0.5 * dim() * kLog2Pi - log_det_a;
}

// ---------------------------------------------------------------------------

Matrix draw_tangent_samples(const LandParams& p, const McOptions& opt) {
  if (opt.samples < 1) throw std::invalid_argument("Monte Carlo sample count must be >= 1");
  Matrix z = rng::standard_normal_rows(opt.seed, {kMcKey, opt.stream}, opt.samples, p.dim());
  if (opt.moment_matching && opt.samples > p.dim()) rng::moment_match(z);
  // v = A^-1 z, so that cov(v) = (A^T A)^-1.
  const Eigen::PartialPivLU<Matrix> lu(p.factor());
  return lu.solve(z.transpose()).transpose();
}

McSamples evaluate_mc(const Metric& m, const LandParams& p, Matrix tangent,
                      const GeodesicSolverConfig& cfg, Execution ex) {
  ExpBatch batch = exp_map_batch(m, p.mu(), tangent, cfg, ex);
  McSamples mc;
  mc.tangent = std::move(tangent);
  mc.measure = std::move(batch.measure);
  mc.ok = std::move(batch.ok);
  mc.valid = static_cast<Index>(std::count(mc.ok.begin(), mc.ok.end(), char{1}));
  if (mc.valid == 0) throw NumericalError("normalization constant: every exponential map failed");
  if (mc.valid < mc.tangent.rows()) {
    log().info("normalization constant: {} of {} samples skipped", mc.tangent.rows() - mc.valid,
               mc.tangent.rows());
  }
  double sum = 0.0;
  for (Index s = 0; s < mc.measure.size(); ++s) sum += mc.measure[s];
  mc.log_z = p.log_euclidean_normalizer();
  mc.log_estimate = mc.log_z + std::log(sum / static_cast<double>(mc.valid));
  mc.estimate = std::exp(mc.log_estimate);
  return mc;
}

McSamples normalization_constant(const Metric& m, const LandParams& p, const McOptions& opt) {
  return evaluate_mc(m, p, draw_tangent_samples(p, opt), opt.geodesic, opt.execution);
}

double log_density(const LandParams& p, const Metric& m, const Vector& x,
                   const GeodesicSolverConfig& cfg) {
  if (!(p.norm_const > 0.0)) throw std::invalid_argument("log_density: normalization constant not cached");
  const LogMapResult lm = log_map(m, p.mu(), x, cfg);
  if (!lm.ok()) throw NumericalError("log_density: logarithm map failed");
  return -0.5 * (p.factor() * lm.velocity).squaredNorm() - std::log(p.norm_const);
}

double nll_objective(const TangentBatch& logs, const LandParams& p, double log_norm_const) {
  const Index n = logs.vectors.rows();
  if (2 * logs.failed_count() > n) throw NumericalError("objective: more than half of the logarithm maps failed");
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (logs.ok[static_cast<size_t>(i)]) sum += (p.factor() * logs.vectors.row(i).transpose()).squaredNorm();
  }
  return sum / (2.0 * static_cast<double>(logs.valid_count())) + log_norm_const;
}

double nll_objective(const DataMatrix& data, const LandParams& p, const Metric& m,
                     const GeodesicSolverConfig& cfg, Execution ex) {
  if (!(p.norm_const > 0.0)) throw std::invalid_argument("objective: normalization constant not cached");
  return nll_objective(log_map_batch(m, p.mu(), data, cfg, ex), p, std::log(p.norm_const));
}

Vector descent_direction_mu(const TangentBatch& logs, const McSamples& mc) {
  return detail::direction_mu(logs, mc, nullptr);
}

Vector gradient_mu(const TangentBatch& logs, const LandParams& p, const McSamples& mc) {
  return -(p.precision() * descent_direction_mu(logs, mc));
}

Matrix grad_A(const TangentBatch& logs, const LandParams& p, const McSamples& mc) {
  return detail::gradient_A(logs, p, mc, nullptr);
}

// ---------------------------------------------------------------------------

void FitConfig::validate() const {
  if (!(step_mu > 0.0) || !(step_A >= 0.0)) throw std::invalid_argument("stepsizes must be positive");
  if (mc_samples < 1) throw std::invalid_argument("Monte Carlo sample count must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (max_iter < 0 || init_mean_iter < 0) throw std::invalid_argument("iteration caps must be >= 0");
  geodesic.validate();
}

LandParams initialize_land(const DataMatrix& data, const Metric& m, const FitConfig& cfg) {
  Vector w;
  return detail::initial_components(data, m, 1, cfg, w).front();
}

FitResult fit_mle(const DataMatrix& data, const Metric& m, const FitConfig& cfg) {
  cfg.validate();
  if (data.rows() < 2) throw std::invalid_argument("fit_mle: need at least two points");
  if (data.cols() != m.dim()) throw std::invalid_argument("fit_mle: data and metric dimensions differ");

  detail::Component c = detail::make_component(data, m, initialize_land(data, m, cfg), cfg, 0, 0);
  FitResult res;
  res.failed_log_maps = c.logs.failed_count();
  double best = 0.0;
  double prev = 0.0;
  for (int t = 0;; ++t) {
    const double phi = detail::objective(c, nullptr);
    res.trace.push_back(phi);
    if (t == 0 || phi < best) {
      best = phi;
      res.params = c.params;
    }
    res.iterations = t;
    if (t > 0 && (phi - prev) * (phi - prev) <= cfg.tol) {
      res.converged = true;
      break;
    }
    if (t == cfg.max_iter) break;
    prev = phi;
    if (!detail::update(c, data, m, cfg, nullptr, 0, t, res.failed_log_maps)) {
      log().warn("fit_mle: covariance factor lost rank at iteration {}; stopping", t);
      break;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------

SampleResult sample(const LandParams& p, const Metric& m, Index n, std::uint64_t seed,
                    const SampleConfig& cfg, std::uint64_t stream) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  if (cfg.oversampling < 1) throw std::invalid_argument("sample: oversampling must be >= 1");
  const Index proposals = n * cfg.oversampling;
  const Matrix z = rng::standard_normal_rows(seed, {kSampleKey, stream}, proposals, p.dim());
  const Eigen::PartialPivLU<Matrix> lu(p.factor());
  const Matrix v = lu.solve(z.transpose()).transpose();
  const ExpBatch batch = exp_map_batch(m, p.mu(), v, cfg.geodesic, cfg.execution);

  double sum = 0.0, sum_sq = 0.0;
  for (Index s = 0; s < proposals; ++s) {
    sum += batch.measure[s];
    sum_sq += batch.measure[s] * batch.measure[s];
  }
  SampleResult out;
  out.proposals = proposals;
  out.ess = sum_sq > 0.0 ? sum * sum / sum_sq : 0.0;
  if (out.ess < static_cast<double>(n)) {
    throw NumericalError("sample: effective sample size " + std::to_string(out.ess) + " below " +
                         std::to_string(n) + "; increase the oversampling factor");
  }
  // Systematic resampling.
  auto eng = rng::stream(seed, {kSampleKey, stream, 1});
  const double u0 = 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(eng);
  out.points.resize(n, p.dim());
  double cumulative = 0.0;
  Index s = 0;
  for (Index i = 0; i < n; ++i) {
    const double target = (static_cast<double>(i) + u0) / static_cast<double>(n) * sum;
    while (s + 1 < proposals && cumulative + batch.measure[s] < target) cumulative += batch.measure[s++];
    out.points.row(i) = batch.endpoints.row(s);
  }
  return out;
}

}  // namespace land
