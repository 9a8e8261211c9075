#pragma once

#include "land/types.hpp"

#include <span>
#include <vector>

namespace land {

struct MetricParams {
  double sigma = 1.0;  ///< Gaussian kernel bandwidth, data units.
  double rho = 1e-2;   ///< Regularizer added to every local variance.

  void validate() const;
};

/// A diagonal Riemannian metric on R^D.
///
/// Implementations are immutable; evaluation is thread-safe.
class Metric {
 public:
  virtual ~Metric() = default;

  virtual int dim() const = 0;

  /// Writes the diagonal of M(x) into `diag` and, when `jac` is non-empty,
  /// the D x D row-major matrix J[d*D + k] = dM_dd/dx_k.
  virtual void evaluate(std::span<const double> x, std::span<double> diag,
                        std::span<double> jac) const = 0;

  Vector tensor(const Vector& x) const;
  Matrix derivative(const Vector& x) const;

  /// sqrt(det M(x)).
  double measure(const Vector& x) const;
  double measure(std::span<const double> x) const;

 protected:
  void check_dim(Index d) const;
};

/// Metric learned from data: the inverse of a kernel-weighted local diagonal
/// covariance,
///   M_dd(x) = (sum_n w_n(x) (x_nd - x_d)^2 + rho)^-1,
///   w_n(x)  = exp(-|x_n - x|^2 / (2 sigma^2)).
/// Every anchor contributes at every evaluation.
class LearnedMetric final : public Metric {
 public:
  LearnedMetric(const DataMatrix& anchors, MetricParams params);

  int dim() const override { return dim_; }
  void evaluate(std::span<const double> x, std::span<double> diag,
                std::span<double> jac) const override;

  const DataMatrix& anchors() const { return anchors_; }
  const MetricParams& params() const { return params_; }

 private:
  DataMatrix anchors_;
  MetricParams params_;
  int dim_;
  Index count_;
  // Coordinate-major copy: coords_[d * N + n] = x_nd.
  std::vector<double, Eigen::aligned_allocator<double>> coords_;
};

/// M(x) = diag(c) everywhere. Geodesics are straight lines.
class ConstantMetric final : public Metric {
 public:
  explicit ConstantMetric(Vector diagonal);
  static ConstantMetric identity(int dim);

  int dim() const override { return static_cast<int>(diag_.size()); }
  void evaluate(std::span<const double> x, std::span<double> diag,
                std::span<double> jac) const override;

  const Vector& diagonal() const { return diag_; }

 private:
  Vector diag_;
};

LearnedMetric learn_metric(const DataMatrix& data, MetricParams params);

Vector metric_tensor(const Metric& m, const Vector& x);
Matrix metric_derivative(const Metric& m, const Vector& x);
double measure_density(const Metric& m, const Vector& x);

/// Conventional regularizer: 1e-2 * (median pairwise distance)^2.
/// Not derived from any reported experiment.
double suggest_rho(const DataMatrix& data);

}  // namespace land
