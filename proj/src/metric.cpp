#include "land/metric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace land {

void MetricParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("metric: sigma must be positive and finite");
  }
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw std::invalid_argument("metric: rho must be positive and finite");
  }
}

void Metric::check_dim(Index d) const {
  if (d != dim()) {
    throw std::invalid_argument("metric: point has dimension " + std::to_string(d) +
                                ", expected " + std::to_string(dim()));
  }
}

Vector Metric::tensor(const Vector& x) const {
  check_dim(x.size());
  Vector diag(dim());
  evaluate({x.data(), static_cast<size_t>(x.size())}, {diag.data(), static_cast<size_t>(diag.size())},
           {});
  return diag;
}

Matrix Metric::derivative(const Vector& x) const {
  check_dim(x.size());
  const int d = dim();
  Vector diag(d);
  // Row-major scratch, copied into a column-major Eigen matrix.
  std::vector<double> jac(static_cast<size_t>(d) * d);
  evaluate({x.data(), static_cast<size_t>(d)}, {diag.data(), static_cast<size_t>(d)}, jac);
  Matrix out(d, d);
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < d; ++k) out(i, k) = jac[static_cast<size_t>(i) * d + k];
  }
  return out;
}

double Metric::measure(std::span<const double> x) const {
  check_dim(static_cast<Index>(x.size()));
  double buf[16];
  std::vector<double> heap;
  double* diag = buf;
  if (dim() > 16) {
    heap.resize(dim());
    diag = heap.data();
  }
  evaluate(x, {diag, static_cast<size_t>(dim())}, {});
  double prod = 1.0;
  for (int i = 0; i < dim(); ++i) prod *= diag[i];
  return std::sqrt(prod);
}

double Metric::measure(const Vector& x) const {
  return measure(std::span<const double>(x.data(), static_cast<size_t>(x.size())));
}

// ---------------------------------------------------------------------------

LearnedMetric::LearnedMetric(const DataMatrix& anchors, MetricParams params)
    : anchors_(anchors), params_(params), dim_(static_cast<int>(anchors.cols())), count_(anchors.rows()) {
  params_.validate();
  if (anchors_.rows() < 1 || anchors_.cols() < 1) {
    throw std::invalid_argument("metric: data must have at least one row and one column");
  }
  if (!anchors_.allFinite()) {
    throw std::invalid_argument("metric: data contains non-finite entries");
  }
  coords_.resize(static_cast<size_t>(count_) * dim_);
  for (int d = 0; d < dim_; ++d) {
    for (Index n = 0; n < count_; ++n) coords_[static_cast<size_t>(d) * count_ + n] = anchors_(n, d);
  }
}

namespace {

// Vectorized reductions peel according to the buffer address, so every
// thread's buffers share one alignment to keep results bitwise reproducible.
using AlignedBuffer = std::vector<double, Eigen::aligned_allocator<double>>;

struct Scratch {
  AlignedBuffer diff;   // D x N, diff[d*N+n] = x_nd - x_d
  AlignedBuffer weight; // N
  AlignedBuffer sq;     // N

  void reserve(Index n, int d) {
    const size_t need = static_cast<size_t>(n) * d;
    if (diff.size() < need) diff.resize(need);
    if (weight.size() < static_cast<size_t>(n)) {
      weight.resize(n);
      sq.resize(n);
    }
  }
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

}  // namespace

void LearnedMetric::evaluate(std::span<const double> x, std::span<double> diag,
                             std::span<double> jac) const {
  using Arr = Eigen::Map<Eigen::ArrayXd>;
  const Index n = count_;
  const int dd = dim_;
  Scratch& s = scratch();
  s.reserve(n, dd);

  Arr dist2(s.sq.data(), n);
  dist2.setZero();
  for (int d = 0; d < dd; ++d) {
    Eigen::Map<const Eigen::ArrayXd> coord(coords_.data() + static_cast<size_t>(d) * n, n);
    Arr diff(s.diff.data() + static_cast<size_t>(d) * n, n);
    diff = coord - x[d];
    dist2 += diff.square();
  }
  const double inv_two_s2 = 1.0 / (2.0 * params_.sigma * params_.sigma);
  Arr w(s.weight.data(), n);
  w = (dist2 * -inv_two_s2).exp();

  for (int d = 0; d < dd; ++d) {
    Arr diff(s.diff.data() + static_cast<size_t>(d) * n, n);
    const double sd = (w * diff.square()).sum() + params_.rho;
    diag[d] = 1.0 / sd;
  }
  if (jac.empty()) return;

  // dS_d/dx_k = sum_n w_n [ (x_nk - x_k)/sigma^2 (x_nd - x_d)^2 - 2 (x_nd - x_d) [d==k] ]
  // dM_dd/dx_k = -M_dd^2 dS_d/dx_k
  const double inv_s2 = 2.0 * inv_two_s2;
  for (int d = 0; d < dd; ++d) {
    Arr diff_d(s.diff.data() + static_cast<size_t>(d) * n, n);
    Arr wsq(s.sq.data(), n);  // dist2 no longer needed
    wsq = w * diff_d.square();
    const double m2 = diag[d] * diag[d];
    for (int k = 0; k < dd; ++k) {
      Arr diff_k(s.diff.data() + static_cast<size_t>(k) * n, n);
      double ds = (wsq * diff_k).sum() * inv_s2;
      if (k == d) ds -= 2.0 * (w * diff_d).sum();
      jac[static_cast<size_t>(d) * dd + k] = -m2 * ds;
    }
  }
}

// ---------------------------------------------------------------------------

ConstantMetric::ConstantMetric(Vector diagonal) : diag_(std::move(diagonal)) {
  if (diag_.size() < 1 || !(diag_.array() > 0.0).all() || !diag_.allFinite()) {
    throw std::invalid_argument("constant metric: diagonal must be positive and finite");
  }
}

ConstantMetric ConstantMetric::identity(int dim) { return ConstantMetric(Vector::Ones(dim)); }

void ConstantMetric::evaluate(std::span<const double>, std::span<double> diag,
                              std::span<double> jac) const {
  for (Index i = 0; i < diag_.size(); ++i) diag[i] = diag_[i];
  std::fill(jac.begin(), jac.end(), 0.0);
}

// ---------------------------------------------------------------------------

LearnedMetric learn_metric(const DataMatrix& data, MetricParams params) {
  return LearnedMetric(data, params);
}

Vector metric_tensor(const Metric& m, const Vector& x) {
  if (!x.allFinite()) throw std::invalid_argument("metric_tensor: non-finite point");
  return m.tensor(x);
}

Matrix metric_derivative(const Metric& m, const Vector& x) {
  if (!x.allFinite()) throw std::invalid_argument("metric_derivative: non-finite point");
  return m.derivative(x);
}

double measure_density(const Metric& m, const Vector& x) {
  if (!x.allFinite()) throw std::invalid_argument("measure_density: non-finite point");
  return m.measure(x);
}

double suggest_rho(const DataMatrix& data) {
  if (data.rows() < 2) throw std::invalid_argument("suggest_rho: need at least two points");
  // Deterministic thinning keeps this O(4e6) for large inputs.
  const Index stride = std::max<Index>(1, data.rows() / 2000);
  std::vector<double> dists;
  for (Index i = 0; i < data.rows(); i += stride) {
    for (Index j = i + stride; j < data.rows(); j += stride) {
      dists.push_back((data.row(i) - data.row(j)).norm());
    }
  }
  if (dists.empty()) throw std::invalid_argument("suggest_rho: need at least two points");
  auto mid = dists.begin() + static_cast<std::ptrdiff_t>(dists.size() / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  const double med = *mid;
  if (!(med > 0.0)) throw std::invalid_argument("suggest_rho: all points coincide");
  return 1e-2 * med * med;
}

}  // namespace land
