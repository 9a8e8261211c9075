#pragma once

#include "land/land.hpp"

#include <vector>

namespace land {

struct LandMixture {
  std::vector<LandParams> components;
  Vector weights;  ///< On the simplex.

  int size() const { return static_cast<int>(components.size()); }
  int dim() const { return components.empty() ? 0 : components.front().dim(); }
  /// Throws std::invalid_argument unless K >= 1, the weights sum to one and
  /// every component has a cached constant.
  void validate() const;
};

struct Responsibilities {
  Matrix r;                           ///< N x K, rows sum to one.
  std::vector<Index> degenerate_rows; ///< Points no component could explain (set uniform).
};

/// N x K matrix of ln(pi_k p_k(x_n)) from precomputed logarithm maps and log
/// constants. Failed logarithm maps give -inf.
Matrix mixture_log_joint(const std::vector<TangentBatch>& logs, const LandMixture& mix,
                         const std::vector<double>& log_norm_consts);

/// Same, computing the logarithm maps and using the cached constants.
Matrix mixture_log_joint(const DataMatrix& data, const LandMixture& mix, const Metric& m,
                         const GeodesicSolverConfig& cfg, Execution ex = Execution::parallel);

Responsibilities responsibilities_from_log_joint(const Matrix& log_joint);

Responsibilities e_step(const DataMatrix& data, const LandMixture& mix, const Metric& m,
                        const GeodesicSolverConfig& cfg, Execution ex = Execution::parallel);

/// psi = -sum_n ln sum_k pi_k p_k(x_n), skipping degenerate rows.
double mixture_objective(const Matrix& log_joint);
double mixture_log_likelihood(const DataMatrix& data, const LandMixture& mix, const Metric& m,
                              const GeodesicSolverConfig& cfg, Execution ex = Execution::parallel);

/// ln sum_k pi_k p_k(x); components whose logarithm map fails contribute 0.
double mixture_log_density(const LandMixture& mix, const Metric& m, const Vector& x,
                           const GeodesicSolverConfig& cfg);

struct ComponentGradients {
  Vector d_mu;     ///< sum_n r_nk Log_n - R_k Z/(C S) sum_s m_s v_s
  Vector grad_mu;  ///< -Sigma_k^-1 d_mu
  Matrix grad_A;   ///< A_k [sum_n r_nk Log Log^T - R_k Z/(C S) sum_s m v v^T]
};

/// Per-component directions of psi for fixed responsibilities.
std::vector<ComponentGradients> m_step_gradients(const std::vector<TangentBatch>& logs,
                                                 const LandMixture& mix, const Matrix& r,
                                                 const std::vector<McSamples>& mc);

/// FitConfig whose initialization defaults to the Euclidean mixture.
struct EmConfig : FitConfig {
  EmConfig() { init = InitStrategy::gmm; }
};

struct EmResult {
  LandMixture mixture;        ///< Best-psi iterate.
  std::vector<double> trace;  ///< psi / N per iteration.
  Matrix r;                   ///< Responsibilities of the returned mixture.
  int iterations = 0;
  bool converged = false;
  Index failed_log_maps = 0;
};

/// EM for a LAND mixture. Each M-step takes one mean and one factor step per
/// component (interleaved per component) with per-component stepsizes, then
/// sets pi_k = R_k / N. Directions are normalized by R_k, so that K = 1
/// reproduces fit_mle. Stops when (psi_{t+1}/N - psi_t/N)^2 <= tol.
EmResult em_fit(const DataMatrix& data, const Metric& m, int k, const EmConfig& cfg);

/// Intrinsic least-squares mixture: Riemannian K-means centers (intrinsic
/// mean for K = 1), per-cluster tangent covariances, cluster-fraction weights
/// and Monte Carlo constants.
LandMixture ls_mixture(const DataMatrix& data, const Metric& m, int k, const FitConfig& cfg);

/// Draws a component count per component (multinomial), then samples each.
DataMatrix sample_mixture(const LandMixture& mix, const Metric& m, Index n, std::uint64_t seed,
                          const SampleConfig& cfg);

}  // namespace land
