#pragma once

// Synthetic generators and evaluation metrics.

#include "land/baselines.hpp"
#include "land/types.hpp"

#include <cstdint>
#include <vector>

namespace land {

struct LabeledDataset {
  DataMatrix points;
  std::vector<int> labels;  ///< Empty or one per row.

  bool has_labels() const { return !labels.empty(); }
};

inline constexpr int kHalfEllipseComponents = 20;

/// Centers of the generating components: angles pi j / 19 on the half
/// ellipse (cos t, 0.5 sin t).
Matrix half_ellipse_centers();

/// Length of the generating arc (about 2.4221).
double half_ellipse_arc_length();

/// n points from the equal-weight mixture of 20 isotropic Gaussians (std
/// `noise`) centered on the half ellipse. Point i comes from component
/// i mod 20; labels hold the component.
LabeledDataset gen_half_ellipsoid(Index n = 300, double noise = 0.05, std::uint64_t seed = 0);

/// The generating density of gen_half_ellipsoid (noise > 0).
GaussianMixture half_ellipsoid_truth(double noise = 0.05);

/// Two interleaved half circles: the upper one (label 0) has ceil(n/2)
/// points on (cos t, sin t), the lower one (label 1) the rest on
/// (1 - cos t, 0.5 - sin t), t evenly spaced on [0, pi]; Gaussian noise added.
LabeledDataset gen_two_moons(Index n = 400, double noise = 0.08, std::uint64_t seed = 0);

/// -1/n sum_i ln q(x_i).
double mean_nll_under_truth(const DataMatrix& samples, const GaussianMixture& truth);

/// K (D + D(D+1)/2) + (K - 1).
int num_free_params(int k, int d);

struct InformationCriteria {
  double aic = 0.0;
  double bic = 0.0;
};

/// AIC = -2 L + 2 nu, BIC = -2 L + nu ln N for log-likelihood L.
InformationCriteria aic_bic(double log_likelihood, int nu, Index n);

/// Class-size weighted F-measure: each class is matched with the cluster of
/// highest F1 against it.
double f_measure(const std::vector<int>& labels, const std::vector<int>& clusters);

/// Row-wise argmax of a responsibility matrix.
std::vector<int> hard_assignments(const Matrix& r);

}  // namespace land
