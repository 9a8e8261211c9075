#pragma once

// Batched geodesic kernels. Each kernel has two execution paths: an OpenMP
// loop and the plain serial loop kept as the reference. Both evaluate the
// same per-item solve and write results by index, so their outputs are
// bitwise identical regardless of thread count.

#include "land/geodesic.hpp"
#include "land/metric.hpp"

#include <vector>

namespace land {

enum class Execution { serial, parallel };

void set_num_threads(int n);
int max_threads();

template <class F>
void for_each_index(Index n, Execution ex, F&& f) {
  if (ex == Execution::serial) {
    for (Index i = 0; i < n; ++i) f(i);
    return;
  }
#pragma omp parallel for schedule(dynamic, 4)
  for (Index i = 0; i < n; ++i) f(i);
}

/// Results of Exp_base(v_s) for every row v_s of a tangent matrix.
struct ExpBatch {
  Matrix endpoints;        ///< S x D
  Vector measure;          ///< sqrt(det M(endpoint)); 0 where the solve failed.
  std::vector<char> ok;

  Index valid_count() const;
};

ExpBatch exp_map_batch(const Metric& m, const Vector& base, const Matrix& tangents,
                       const GeodesicSolverConfig& cfg, Execution ex = Execution::parallel);

/// Log_base(x_n) for every row x_n; failed rows keep their best velocity but
/// are flagged.
struct TangentBatch {
  Matrix vectors;  ///< N x D
  Vector residuals;
  std::vector<char> ok;

  Index valid_count() const;
  Index failed_count() const { return static_cast<Index>(ok.size()) - valid_count(); }
};

/// `guesses`, when given, holds one warm-start velocity per row.
TangentBatch log_map_batch(const Metric& m, const Vector& base, const DataMatrix& points,
                           const GeodesicSolverConfig& cfg, Execution ex = Execution::parallel,
                           const Matrix* guesses = nullptr);

Vector measure_batch(const Metric& m, const DataMatrix& points, Execution ex = Execution::parallel);

}  // namespace land
