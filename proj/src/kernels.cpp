#include "land/kernels.hpp"

#include <omp.h>

#include <algorithm>

namespace land {

void set_num_threads(int n) {
  if (n >= 1) omp_set_num_threads(n);
}

int max_threads() { return omp_get_max_threads(); }

Index ExpBatch::valid_count() const {
  return static_cast<Index>(std::count(ok.begin(), ok.end(), char{1}));
}

Index TangentBatch::valid_count() const {
  return static_cast<Index>(std::count(ok.begin(), ok.end(), char{1}));
}

ExpBatch exp_map_batch(const Metric& m, const Vector& base, const Matrix& tangents,
                       const GeodesicSolverConfig& cfg, Execution ex) {
  const Index s = tangents.rows();
  ExpBatch out;
  out.endpoints.setZero(s, m.dim());
  out.measure.setZero(s);
  out.ok.assign(static_cast<size_t>(s), 0);
  for_each_index(s, ex, [&](Index i) {
    const Vector v = tangents.row(i).transpose();
    const ExpMapResult r = exp_map(m, base, v, cfg, false);
    if (!r.ok()) return;
    out.endpoints.row(i) = r.endpoint.transpose();
    out.measure[i] = m.measure(r.endpoint);
    out.ok[static_cast<size_t>(i)] = 1;
  });
  return out;
}

TangentBatch log_map_batch(const Metric& m, const Vector& base, const DataMatrix& points,
                           const GeodesicSolverConfig& cfg, Execution ex, const Matrix* guesses) {
  const Index n = points.rows();
  TangentBatch out;
  out.vectors.setZero(n, m.dim());
  out.residuals.setZero(n);
  out.ok.assign(static_cast<size_t>(n), 0);
  for_each_index(n, ex, [&](Index i) {
    std::optional<Vector> guess;
    if (guesses != nullptr) guess = guesses->row(i).transpose();
    const LogMapResult r = log_map(m, base, points.row(i).transpose(), cfg, guess);
    out.vectors.row(i) = r.velocity.transpose();
    out.residuals[i] = r.residual;
    out.ok[static_cast<size_t>(i)] = r.ok() ? 1 : 0;
  });
  return out;
}

Vector measure_batch(const Metric& m, const DataMatrix& points, Execution ex) {
  Vector out(points.rows());
  for_each_index(points.rows(), ex, [&](Index i) {
    const Vector p = points.row(i).transpose();
    out[i] = m.measure(p);
  });
  return out;
}

}  // namespace land
