// Serial reference vs OpenMP kernels, and log-map cost against dimension.
//
//   bench_kernels [--threads T] [--samples S] [--points N]

#include "land/eval.hpp"
#include "land/kernels.hpp"
#include "land/metric.hpp"
#include "land/rng.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <cstring>

using namespace land;

namespace {

template <class F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-14s serial %8.3f s  parallel %8.3f s  speedup %5.2fx  %s\n", name, serial, parallel,
              serial / parallel, identical ? "bitwise identical" : "OUTPUTS DIFFER");
}

bool same(const Matrix& a, const Matrix& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<size_t>(a.size())) == 0;
}

// Half ellipse in the first two coordinates, isotropic noise in all D.
DataMatrix embedded_arc(int d, Index n, std::uint64_t seed) {
  const LabeledDataset base = gen_half_ellipsoid(n, 0.05, seed);
  DataMatrix out = 0.05 * rng::standard_normal_rows(seed, {0x62656e6368}, n, d);
  out.leftCols(2) += base.points;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LAND kernel benchmark"};
  int threads = 0;
  int samples = 2000;
  int points = 300;
  app.add_option("--threads", threads, "OpenMP threads (0 = default)");
  app.add_option("--samples", samples, "Tangent samples for the exponential-map batch");
  app.add_option("--points", points, "Data points");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) set_num_threads(threads);
  std::printf("threads: %d\n", max_threads());

  const LabeledDataset data = gen_half_ellipsoid(points, 0.05, 0);
  const LearnedMetric m(data.points, {0.1 * half_ellipse_arc_length(), suggest_rho(data.points)});
  const GeodesicSolverConfig cfg;
  const Vector base = data.points.colwise().mean().transpose();
  const Matrix tangents = 0.3 * rng::standard_normal_rows(1, {1}, samples, 2);

  ExpBatch es, ep;
  const double es_t = seconds([&] { es = exp_map_batch(m, base, tangents, cfg, Execution::serial); });
  const double ep_t = seconds([&] { ep = exp_map_batch(m, base, tangents, cfg, Execution::parallel); });
  report("exp_map_batch", es_t, ep_t, same(es.endpoints, ep.endpoints) && same(es.measure, ep.measure));

  TangentBatch ls, lp;
  const double ls_t = seconds([&] { ls = log_map_batch(m, base, data.points, cfg, Execution::serial); });
  const double lp_t = seconds([&] { lp = log_map_batch(m, base, data.points, cfg, Execution::parallel); });
  report("log_map_batch", ls_t, lp_t, same(ls.vectors, lp.vectors));

  Vector ms, mp;
  const Matrix grid = rng::standard_normal_rows(2, {2}, 200000, 2);
  const double ms_t = seconds([&] { ms = measure_batch(m, grid, Execution::serial); });
  const double mp_t = seconds([&] { mp = measure_batch(m, grid, Execution::parallel); });
  report("measure_batch", ms_t, mp_t, same(ms, mp));

  std::printf("\nlog map cost by dimension (%d points, serial)\n", 50);
  for (int d : {2, 5, 10}) {
    const DataMatrix x = embedded_arc(d, points, 3);
    const LearnedMetric md(x, {0.1 * half_ellipse_arc_length(), suggest_rho(x)});
    const Vector mu = x.colwise().mean().transpose();
    TangentBatch t;
    const double sec = seconds([&] { t = log_map_batch(md, mu, x.topRows(50), cfg, Execution::serial); });
    std::printf("D=%2d  %8.3f ms per log map  (%ld failed)\n", d, 1e3 * sec / 50.0,
                static_cast<long>(t.failed_count()));
  }
  return 0;
}
