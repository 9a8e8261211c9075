#pragma once

#include "land/geodesic.hpp"
#include "land/kernels.hpp"
#include "land/metric.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace land {

/// Mean and covariance of a LAND. The covariance is carried through the
/// factor A with Sigma^-1 = A^T A; Sigma itself is cached.
class LandParams {
 public:
  LandParams() = default;

  /// A is the upper Cholesky factor of Sigma^-1.
  static LandParams from_covariance(Vector mu, const Matrix& sigma);
  /// Any full-rank A; throws NumericalError when |det A| < 1e-12.
  static LandParams from_factor(Vector mu, Matrix a);

  int dim() const { return static_cast<int>(mu_.size()); }
  const Vector& mu() const { return mu_; }
  const Matrix& factor() const { return a_; }
  const Matrix& sigma() const { return sigma_; }
  Matrix precision() const { return a_.transpose() * a_; }

  /// ln Z with Z = sqrt((2 pi)^D |Sigma|).
  double log_euclidean_normalizer() const;

  double norm_const = std::numeric_limits<double>::quiet_NaN();  ///< Cached C(mu, Sigma).
  int norm_const_samples = 0;

 private:
  Vector mu_;
  Matrix a_;
  Matrix sigma_;
};

struct McOptions {
  int samples = 3000;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;     ///< Distinguishes independent estimates under one seed.
  bool moment_matching = true;  ///< Whiten the standard normal draws (see rng::moment_match).
  GeodesicSolverConfig geodesic;
  Execution execution = Execution::parallel;
};

/// Tangent-space Monte Carlo samples v_s ~ N(0, Sigma) at mu together with
/// m(mu, v_s) = sqrt(det M(Exp_mu(v_s))). Kept so gradients reuse the exact
/// samples behind the constant.
struct McSamples {
  Matrix tangent;   ///< S x D
  Vector measure;   ///< 0 where Exp failed.
  std::vector<char> ok;
  Index valid = 0;
  double log_z = 0.0;         ///< ln Z of the Gaussian the samples came from.
  double estimate = 0.0;      ///< C-hat = Z / S_valid * sum m.
  double log_estimate = 0.0;
};

/// Draws S tangent vectors from N(0, Sigma) for the stream in `opt`.
Matrix draw_tangent_samples(const LandParams& p, const McOptions& opt);

/// Evaluates m on given tangent samples and forms C-hat. Failed solves are
/// dropped; throws NumericalError when none succeed.
McSamples evaluate_mc(const Metric& m, const LandParams& p, Matrix tangent,
                      const GeodesicSolverConfig& cfg, Execution ex = Execution::parallel);

/// C-hat(mu, Sigma) = Z/S sum_s m(mu, v_s), v_s ~ N(0, Sigma).
McSamples normalization_constant(const Metric& m, const LandParams& p, const McOptions& opt);

/// -1/2 <Log_mu(x), Sigma^-1 Log_mu(x)> - ln C. Requires a cached constant;
/// throws NumericalError if the logarithm map fails.
double log_density(const LandParams& p, const Metric& m, const Vector& x,
                   const GeodesicSolverConfig& cfg);

/// phi = 1/(2N) sum_n <Log_n, Sigma^-1 Log_n> + ln C over the successful
/// logarithm maps. Throws NumericalError when more than half failed.
double nll_objective(const TangentBatch& logs, const LandParams& p, double log_norm_const);

/// Convenience form that computes the logarithm maps and uses the cached
/// constant of `p`.
double nll_objective(const DataMatrix& data, const LandParams& p, const Metric& m,
                     const GeodesicSolverConfig& cfg, Execution ex = Execution::parallel);

/// Steepest descent direction for the mean,
///   d_mu = 1/N sum_n Log_n - Z/(C S) sum_s m_s v_s.
Vector descent_direction_mu(const TangentBatch& logs, const McSamples& mc);

/// Euclidean gradient grad_mu phi = -Sigma^-1 d_mu.
Vector gradient_mu(const TangentBatch& logs, const LandParams& p, const McSamples& mc);

/// grad_A phi = A [ 1/N sum_n Log_n Log_n^T - Z/(C S) sum_s m_s v_s v_s^T ].
Matrix grad_A(const TangentBatch& logs, const LandParams& p, const McSamples& mc);

enum class InitStrategy { random, least_squares, gmm };

struct FitConfig {
  double step_mu = 0.5;
  double step_A = 0.0;  ///< 0 selects 0.25 / lambda_max(Sigma_0).
  int mc_samples = 3000;
  double tol = 1e-6;    ///< Stop when (phi_{t+1} - phi_t)^2 <= tol.
  int max_iter = 100;
  InitStrategy init = InitStrategy::least_squares;
  std::uint64_t rng_seed = 0;
  bool moment_matching = true;
  /// Draw new Monte Carlo samples for every constant estimate. When false,
  /// each component keeps one set of standard normal draws for the whole fit
  /// (common random numbers), which makes phi a smooth function of (mu, A).
  bool fresh_samples = true;
  int init_mean_iter = 50;  ///< Iteration cap for the intrinsic mean used in initialization.
  GeodesicSolverConfig geodesic;
  Execution execution = Execution::parallel;

  void validate() const;
};

struct FitResult {
  LandParams params;           ///< Best-phi iterate, with its constant cached.
  std::vector<double> trace;   ///< phi at every evaluated iterate.
  int iterations = 0;
  bool converged = false;
  Index failed_log_maps = 0;   ///< Summed over all evaluations.
};

FitResult fit_mle(const DataMatrix& data, const Metric& m, const FitConfig& cfg);

/// Initial (mu, Sigma) for one LAND according to cfg.init.
LandParams initialize_land(const DataMatrix& data, const Metric& m, const FitConfig& cfg);

struct SampleConfig {
  int oversampling = 10;
  GeodesicSolverConfig geodesic;
  Execution execution = Execution::parallel;
};

struct SampleResult {
  DataMatrix points;
  double ess = 0.0;  ///< Effective sample size of the importance weights.
  Index proposals = 0;
};

/// Approximate sampling by self-normalized importance resampling: proposals
/// v ~ N(0, Sigma) weighted by m(mu, v), systematically resampled, mapped
/// through Exp_mu. Throws NumericalError when the effective sample size is
/// below n.
SampleResult sample(const LandParams& p, const Metric& m, Index n, std::uint64_t seed,
                    const SampleConfig& cfg, std::uint64_t stream = 0);

}  // namespace land
