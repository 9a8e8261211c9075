#pragma once

// Comparators: intrinsic least-squares estimators, Riemannian K-means and a
// Euclidean Gaussian mixture.

#include "land/geodesic.hpp"
#include "land/kernels.hpp"
#include "land/metric.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace land {

struct IntrinsicConfig {
  int max_iter = 50;
  double tol = 1e-6;   ///< On |sum_n Log_n| / N.
  double step = 1.0;
  GeodesicSolverConfig geodesic;
  Execution execution = Execution::parallel;
};

struct IntrinsicEstimate {
  Vector mean;
  Matrix covariance;
  int iterations = 0;
};

/// Karcher mean by gradient descent: mu <- Exp_mu(t/N sum_n Log_mu(x_n)).
/// The step t is halved whenever the sum of squared distances grows.
/// Points whose logarithm map fails are skipped for that iteration.
Vector intrinsic_mean(const DataMatrix& data, const Metric& m, const IntrinsicConfig& cfg,
                      const std::optional<Vector>& start = {}, int* iterations = nullptr);

/// 1/(N-1) sum_n Log_mean(x_n) Log_mean(x_n)^T.
Matrix intrinsic_covariance(const DataMatrix& data, const Metric& m, const Vector& mean,
                            const IntrinsicConfig& cfg);

IntrinsicEstimate intrinsic_estimate(const DataMatrix& data, const Metric& m,
                                     const IntrinsicConfig& cfg);

struct KMeansConfig {
  int max_iter = 30;
  int restarts = 5;
  std::uint64_t seed = 0;
  IntrinsicConfig intrinsic;
};

struct KMeansResult {
  Matrix centers;                 ///< K x D
  std::vector<int> assignments;   ///< One cluster index per row.
  double inertia = 0.0;           ///< Sum of squared (geodesic) distances.
  int iterations = 0;
};

/// Lloyd iterations from the given centers: geodesic-distance assignment
/// (ties to the lowest index) and intrinsic-mean center updates.
KMeansResult riemannian_kmeans_from(const DataMatrix& data, const Metric& m, Matrix centers,
                                    const KMeansConfig& cfg);

/// Best of cfg.restarts runs, each started from K distinct random data points.
KMeansResult riemannian_kmeans(const DataMatrix& data, const Metric& m, int k,
                               const KMeansConfig& cfg);

/// Euclidean K-means with k-means++ seeding, best of `restarts`.
KMeansResult euclidean_kmeans(const DataMatrix& data, int k, std::uint64_t seed, int restarts = 5,
                              int max_iter = 100);

struct GaussianMixture {
  std::vector<Vector> means;
  std::vector<Matrix> covariances;
  Vector weights;

  int size() const { return static_cast<int>(means.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }

  /// N x K log(pi_k N(x_n | mu_k, Sigma_k)).
  Matrix log_joint(const DataMatrix& data) const;
  Matrix responsibilities(const DataMatrix& data) const;
  double log_likelihood(const DataMatrix& data) const;
  double log_density(const Vector& x) const;
  DataMatrix sample(Index n, std::uint64_t seed) const;
};

struct GmmConfig {
  int max_iter = 500;
  double tol = 1e-8;  ///< On the change of mean log-likelihood.
  std::uint64_t seed = 0;
  int restarts = 5;
};

struct GmmResult {
  GaussianMixture mixture;
  Matrix responsibilities;
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// EM with full covariances from a Euclidean K-means start. Covariances are
/// floored by adding 1e-6 * tr(S)/D to the diagonal, S being the data
/// covariance (1e-12 when the data are degenerate).
GmmResult gmm_fit(const DataMatrix& data, int k, const GmmConfig& cfg);

/// Row-wise log-sum-exp normalization of log weights into responsibilities.
/// Rows that are entirely -inf become uniform; their indices are returned.
std::vector<Index> normalize_log_rows(const Matrix& log_w, Matrix& r);

}  // namespace land
