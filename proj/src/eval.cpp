#include "land/eval.hpp"

#include "land/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace land {

namespace {

constexpr double kSemiMajor = 1.0;
constexpr double kSemiMinor = 0.5;

}  // namespace

Matrix half_ellipse_centers() {
  Matrix c(kHalfEllipseComponents, 2);
  for (int j = 0; j < kHalfEllipseComponents; ++j) {
    const double t = std::numbers::pi * j / (kHalfEllipseComponents - 1);
    c(j, 0) = kSemiMajor * std::cos(t);
    c(j, 1) = kSemiMinor * std::sin(t);
  }
  return c;
}

double half_ellipse_arc_length() {
  // Composite Simpson on |d/dt (a cos t, b sin t)|, t in [0, pi].
  const int intervals = 20000;
  const double h = std::numbers::pi / intervals;
  auto speed = [](double t) {
    return std::hypot(kSemiMajor * std::sin(t), kSemiMinor * std::cos(t));
  };
  double sum = speed(0.0) + speed(std::numbers::pi);
  for (int i = 1; i < intervals; ++i) sum += (i % 2 == 1 ? 4.0 : 2.0) * speed(i * h);
  return sum * h / 3.0;
}

LabeledDataset gen_half_ellipsoid(Index n, double noise, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gen_half_ellipsoid: n must be >= 1");
  if (!(noise >= 0.0)) throw std::invalid_argument("gen_half_ellipsoid: noise must be >= 0");
  const Matrix centers = half_ellipse_centers();
  auto eng = rng::stream(seed, {0x68616c66ULL});
  std::normal_distribution<double> normal;
  LabeledDataset out;
  out.points.resize(n, 2);
  out.labels.resize(static_cast<size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const int j = static_cast<int>(i % kHalfEllipseComponents);
    const double dx = normal(eng);
    const double dy = normal(eng);
    out.points(i, 0) = centers(j, 0) + noise * dx;
    out.points(i, 1) = centers(j, 1) + noise * dy;
    out.labels[static_cast<size_t>(i)] = j;
  }
  return out;
}

GaussianMixture half_ellipsoid_truth(double noise) {
  if (!(noise > 0.0)) throw std::invalid_argument("half_ellipsoid_truth: noise must be positive");
  const Matrix centers = half_ellipse_centers();
  GaussianMixture g;
  for (int j = 0; j < kHalfEllipseComponents; ++j) {
    g.means.push_back(centers.row(j).transpose());
    g.covariances.push_back(noise * noise * Matrix::Identity(2, 2));
  }
  g.weights = Vector::Constant(kHalfEllipseComponents, 1.0 / kHalfEllipseComponents);
  return g;
}

LabeledDataset gen_two_moons(Index n, double noise, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("gen_two_moons: n must be >= 2");
  if (!(noise >= 0.0)) throw std::invalid_argument("gen_two_moons: noise must be >= 0");
  const Index upper = (n + 1) / 2;
  const Index lower = n - upper;
  auto eng = rng::stream(seed, {0x6d6f6f6eULL});
  std::normal_distribution<double> normal;
  LabeledDataset out;
  out.points.resize(n, 2);
  out.labels.resize(static_cast<size_t>(n));
  auto angle = [](Index i, Index count) {
    return count > 1 ? std::numbers::pi * static_cast<double>(i) / static_cast<double>(count - 1) : 0.0;
  };
  for (Index i = 0; i < upper; ++i) {
    const double t = angle(i, upper);
    out.points(i, 0) = std::cos(t);
    out.points(i, 1) = std::sin(t);
    out.labels[static_cast<size_t>(i)] = 0;
  }
  for (Index i = 0; i < lower; ++i) {
    const double t = angle(i, lower);
    out.points(upper + i, 0) = 1.0 - std::cos(t);
    out.points(upper + i, 1) = 0.5 - std::sin(t);
    out.labels[static_cast<size_t>(upper + i)] = 1;
  }
  for (Index i = 0; i < n; ++i) {
    out.points(i, 0) += noise * normal(eng);
    out.points(i, 1) += noise * normal(eng);
  }
  return out;
}

double mean_nll_under_truth(const DataMatrix& samples, const GaussianMixture& truth) {
  if (samples.rows() < 1) throw std::invalid_argument("mean_nll_under_truth: no samples");
  return -truth.log_likelihood(samples) / static_cast<double>(samples.rows());
}

int num_free_params(int k, int d) { return k * (d + d * (d + 1) / 2) + (k - 1); }

InformationCriteria aic_bic(double log_likelihood, int nu, Index n) {
  return {-2.0 * log_likelihood + 2.0 * nu, -2.0 * log_likelihood + nu * std::log(static_cast<double>(n))};
}

double f_measure(const std::vector<int>& labels, const std::vector<int>& clusters) {
  if (labels.size() != clusters.size() || labels.empty()) {
    throw std::invalid_argument("f_measure: label and cluster counts must match and be non-zero");
  }
  std::map<int, double> class_size, cluster_size;
  std::map<std::pair<int, int>, double> joint;
  for (size_t i = 0; i < labels.size(); ++i) {
    class_size[labels[i]] += 1.0;
    cluster_size[clusters[i]] += 1.0;
    joint[{labels[i], clusters[i]}] += 1.0;
  }
  double f = 0.0;
  for (const auto& [cls, nc] : class_size) {
    double best = 0.0;
    for (const auto& [clu, nk] : cluster_size) {
      const auto it = joint.find({cls, clu});
      if (it == joint.end()) continue;
      const double precision = it->second / nk;
      const double recall = it->second / nc;
      best = std::max(best, 2.0 * precision * recall / (precision + recall));
    }
    f += nc / static_cast<double>(labels.size()) * best;
  }
  return f;
}

std::vector<int> hard_assignments(const Matrix& r) {
  std::vector<int> out(static_cast<size_t>(r.rows()));
  for (Index i = 0; i < r.rows(); ++i) {
    Index arg = 0;
    r.row(i).maxCoeff(&arg);
    out[static_cast<size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

}  // namespace land
