#include "land/baselines.hpp"

#include "log.hpp"
#include "land/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace land {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;

double squared_norm_at(const Metric& m, const Vector& base, const TangentBatch& logs,
                       Index& valid) {
  const Vector diag = m.tensor(base);
  double total = 0.0;
  valid = 0;
  for (Index i = 0; i < logs.vectors.rows(); ++i) {
    if (!logs.ok[static_cast<size_t>(i)]) continue;
    total += (diag.array() * logs.vectors.row(i).transpose().array().square()).sum();
    ++valid;
  }
  return total;
}

Vector sum_valid(const TangentBatch& logs) {
  Vector s = Vector::Zero(logs.vectors.cols());
  for (Index i = 0; i < logs.vectors.rows(); ++i) {
    if (logs.ok[static_cast<size_t>(i)]) s += logs.vectors.row(i).transpose();
  }
  return s;
}

DataMatrix select_rows(const DataMatrix& data, const std::vector<Index>& rows) {
  DataMatrix out(static_cast<Index>(rows.size()), data.cols());
  for (size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = data.row(rows[i]);
  return out;
}

}  // namespace

Vector intrinsic_mean(const DataMatrix& data, const Metric& m, const IntrinsicConfig& cfg,
                      const std::optional<Vector>& start, int* iterations) {
  if (data.rows() < 1) throw std::invalid_argument("intrinsic_mean: empty data");
  Vector mu = start ? *start : Vector(data.colwise().mean().transpose());
  TangentBatch logs = log_map_batch(m, mu, data, cfg.geodesic, cfg.execution);
  Index valid = 0;
  double obj = squared_norm_at(m, mu, logs, valid);
  if (valid == 0) throw NumericalError("intrinsic_mean: every logarithm map failed");
  double step = cfg.step;
  int it = 0;
  for (; it < cfg.max_iter; ++it) {
    const Vector dir = sum_valid(logs) / static_cast<double>(valid);
    if (dir.norm() < cfg.tol) break;
    bool accepted = false;
    for (int tries = 0; tries < 12 && !accepted; ++tries, step *= 0.5) {
      const ExpMapResult e = exp_map(m, mu, step * dir, cfg.geodesic, false);
      if (!e.ok()) continue;
      const Matrix guesses = logs.vectors.rowwise() - (step * dir).transpose();
      TangentBatch next = log_map_batch(m, e.endpoint, data, cfg.geodesic, cfg.execution, &guesses);
      Index next_valid = 0;
      const double next_obj = squared_norm_at(m, e.endpoint, next, next_valid);
      if (2 * next_valid < data.rows() && 2 * valid >= data.rows()) continue;
      // Compare mean squared distance so skipped points do not bias the test.
      if (next_obj / std::max<Index>(next_valid, 1) <= obj / static_cast<double>(valid)) {
        mu = e.endpoint;
        logs = std::move(next);
        obj = next_obj;
        valid = next_valid;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (logs.failed_count() > 0) {
    log().debug("intrinsic_mean: {} logarithm maps skipped at the final iterate", logs.failed_count());
  }
  if (iterations != nullptr) *iterations = it;
  return mu;
}

Matrix intrinsic_covariance(const DataMatrix& data, const Metric& m, const Vector& mean,
                            const IntrinsicConfig& cfg) {
  if (data.rows() < 2) throw std::invalid_argument("intrinsic_covariance: need at least two points");
  const TangentBatch logs = log_map_batch(m, mean, data, cfg.geodesic, cfg.execution);
  Matrix cov = Matrix::Zero(m.dim(), m.dim());
  Index valid = 0;
  for (Index i = 0; i < data.rows(); ++i) {
    if (!logs.ok[static_cast<size_t>(i)]) continue;
    const Vector v = logs.vectors.row(i).transpose();
    cov.noalias() += v * v.transpose();
    ++valid;
  }
  if (valid < 2) throw NumericalError("intrinsic_covariance: fewer than two logarithm maps succeeded");
  return cov / static_cast<double>(valid - 1);
}

IntrinsicEstimate intrinsic_estimate(const DataMatrix& data, const Metric& m,
                                     const IntrinsicConfig& cfg) {
  IntrinsicEstimate est;
  est.mean = intrinsic_mean(data, m, cfg, {}, &est.iterations);
  est.covariance = intrinsic_covariance(data, m, est.mean, cfg);
  return est;
}

// ---------------------------------------------------------------------------

KMeansResult riemannian_kmeans_from(const DataMatrix& data, const Metric& m, Matrix centers,
                                    const KMeansConfig& cfg) {
  const Index n = data.rows();
  const Index k = centers.rows();
  if (k < 1 || k > n) throw std::invalid_argument("riemannian_kmeans: need 1 <= K <= N");
  KMeansResult res;
  res.assignments.assign(static_cast<size_t>(n), -1);
  Matrix dist2(n, k);
  for (int it = 0; it <= cfg.max_iter; ++it) {
    for (Index c = 0; c < k; ++c) {
      const Vector center = centers.row(c).transpose();
      const TangentBatch logs =
          log_map_batch(m, center, data, cfg.intrinsic.geodesic, cfg.intrinsic.execution);
      const Vector diag = m.tensor(center);
      for (Index i = 0; i < n; ++i) {
        dist2(i, c) = logs.ok[static_cast<size_t>(i)]
                          ? (diag.array() * logs.vectors.row(i).transpose().array().square()).sum()
                          : kInf;
      }
    }
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      for (Index c = 1; c < k; ++c) {
        if (dist2(i, c) < dist2(i, best)) best = c;
      }
      if (res.assignments[static_cast<size_t>(i)] != best) changed = true;
      res.assignments[static_cast<size_t>(i)] = static_cast<int>(best);
    }
    res.iterations = it;
    if (!changed || it == cfg.max_iter) break;
    for (Index c = 0; c < k; ++c) {
      std::vector<Index> members;
      for (Index i = 0; i < n; ++i) {
        if (res.assignments[static_cast<size_t>(i)] == c) members.push_back(i);
      }
      if (members.empty()) continue;
      const DataMatrix sub = select_rows(data, members);
      centers.row(c) =
          intrinsic_mean(sub, m, cfg.intrinsic, Vector(centers.row(c).transpose())).transpose();
    }
  }
  res.inertia = 0.0;
  for (Index i = 0; i < n; ++i) res.inertia += dist2(i, res.assignments[static_cast<size_t>(i)]);
  res.centers = std::move(centers);
  return res;
}

KMeansResult riemannian_kmeans(const DataMatrix& data, const Metric& m, int k,
                               const KMeansConfig& cfg) {
  const Index n = data.rows();
  if (k < 1 || k > n) throw std::invalid_argument("riemannian_kmeans: need 1 <= K <= N");
  KMeansResult best;
  best.inertia = kInf;
  for (int r = 0; r < std::max(1, cfg.restarts); ++r) {
    std::vector<Index> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    auto eng = rng::stream(cfg.seed, {0x6b6d65616e73ULL, static_cast<std::uint64_t>(r)});
    std::shuffle(idx.begin(), idx.end(), eng);
    idx.resize(static_cast<size_t>(k));
    std::sort(idx.begin(), idx.end());
    KMeansResult run = riemannian_kmeans_from(data, m, select_rows(data, idx), cfg);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

KMeansResult euclidean_kmeans(const DataMatrix& data, int k, std::uint64_t seed, int restarts,
                              int max_iter) {
  const Index n = data.rows();
  if (k < 1 || k > n) throw std::invalid_argument("euclidean_kmeans: need 1 <= K <= N");
  KMeansResult best;
  best.inertia = kInf;
  for (int r = 0; r < std::max(1, restarts); ++r) {
    auto eng = rng::stream(seed, {0x2b2b6b6dULL, static_cast<std::uint64_t>(r)});
    Matrix centers(k, data.cols());
    // k-means++ seeding.
    std::uniform_int_distribution<Index> pick(0, n - 1);
    centers.row(0) = data.row(pick(eng));
    Vector d2 = (data.rowwise() - centers.row(0)).rowwise().squaredNorm();
    for (int c = 1; c < k; ++c) {
      const double total = d2.sum();
      Index chosen = 0;
      if (total > 0.0) {
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(eng);
        for (Index i = 0; i < n; ++i) {
          target -= d2[i];
          chosen = i;
          if (target <= 0.0) break;
        }
      } else {
        chosen = pick(eng);
      }
      centers.row(c) = data.row(chosen);
      d2 = d2.cwiseMin((data.rowwise() - centers.row(c)).rowwise().squaredNorm());
    }
    KMeansResult run;
    run.assignments.assign(static_cast<size_t>(n), -1);
    Matrix dist(n, k);
    for (int it = 0; it <= max_iter; ++it) {
      for (int c = 0; c < k; ++c) dist.col(c) = (data.rowwise() - centers.row(c)).rowwise().squaredNorm();
      bool changed = false;
      for (Index i = 0; i < n; ++i) {
        Index arg = 0;
        dist.row(i).minCoeff(&arg);
        if (run.assignments[static_cast<size_t>(i)] != arg) changed = true;
        run.assignments[static_cast<size_t>(i)] = static_cast<int>(arg);
      }
      run.iterations = it;
      if (!changed || it == max_iter) break;
      Matrix sums = Matrix::Zero(k, data.cols());
      Vector counts = Vector::Zero(k);
      for (Index i = 0; i < n; ++i) {
        sums.row(run.assignments[static_cast<size_t>(i)]) += data.row(i);
        counts[run.assignments[static_cast<size_t>(i)]] += 1.0;
      }
      for (int c = 0; c < k; ++c) {
        if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
      }
    }
    run.inertia = 0.0;
    for (Index i = 0; i < n; ++i) run.inertia += dist(i, run.assignments[static_cast<size_t>(i)]);
    run.centers = centers;
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

// ---------------------------------------------------------------------------

std::vector<Index> normalize_log_rows(const Matrix& log_w, Matrix& r) {
  std::vector<Index> degenerate;
  r.resize(log_w.rows(), log_w.cols());
  for (Index i = 0; i < log_w.rows(); ++i) {
    const double mx = log_w.row(i).maxCoeff();
    if (!std::isfinite(mx)) {
      r.row(i).setConstant(1.0 / static_cast<double>(log_w.cols()));
      degenerate.push_back(i);
      continue;
    }
    double sum = 0.0;
    for (Index k = 0; k < log_w.cols(); ++k) {
      r(i, k) = std::exp(log_w(i, k) - mx);
      sum += r(i, k);
    }
    r.row(i) /= sum;
  }
  return degenerate;
}

Matrix GaussianMixture::log_joint(const DataMatrix& data) const {
  const Index n = data.rows();
  const int k = size();
  const int d = dim();
  Matrix out(n, k);
  for (int c = 0; c < k; ++c) {
    const Eigen::LLT<Matrix> llt(covariances[static_cast<size_t>(c)]);
    const Matrix& l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    const double base = std::log(weights[c]) - 0.5 * (d * kLog2Pi + log_det);
    const Matrix centered = (data.rowwise() - means[static_cast<size_t>(c)].transpose()).transpose();
    const Matrix white = llt.matrixL().solve(centered);
    out.col(c) = (base - 0.5 * white.colwise().squaredNorm().array()).matrix().transpose();
  }
  return out;
}

Matrix GaussianMixture::responsibilities(const DataMatrix& data) const {
  Matrix r;
  normalize_log_rows(log_joint(data), r);
  return r;
}

double GaussianMixture::log_likelihood(const DataMatrix& data) const {
  const Matrix lj = log_joint(data);
  double total = 0.0;
  for (Index i = 0; i < lj.rows(); ++i) {
    const double mx = lj.row(i).maxCoeff();
    total += mx + std::log((lj.row(i).array() - mx).exp().sum());
  }
  return total;
}

double GaussianMixture::log_density(const Vector& x) const {
  DataMatrix one(1, x.size());
  one.row(0) = x.transpose();
  return log_likelihood(one);
}

DataMatrix GaussianMixture::sample(Index n, std::uint64_t seed) const {
  auto eng = rng::stream(seed, {0x676d6d73ULL});
  std::discrete_distribution<int> comp(weights.data(), weights.data() + weights.size());
  std::normal_distribution<double> normal;
  std::vector<Matrix> chol;
  for (const auto& c : covariances) chol.push_back(Eigen::LLT<Matrix>(c).matrixL());
  DataMatrix out(n, dim());
  for (Index i = 0; i < n; ++i) {
    const int c = comp(eng);
    Vector z(dim());
    for (int d = 0; d < dim(); ++d) z[d] = normal(eng);
    out.row(i) = (means[static_cast<size_t>(c)] + chol[static_cast<size_t>(c)] * z).transpose();
  }
  return out;
}

GmmResult gmm_fit(const DataMatrix& data, int k, const GmmConfig& cfg) {
  const Index n = data.rows();
  const Index d = data.cols();
  if (k < 1 || k > n) throw std::invalid_argument("gmm_fit: need 1 <= K <= N");
  const Eigen::RowVectorXd all_mean = data.colwise().mean();
  const Matrix all_centered = data.rowwise() - all_mean;
  const double data_trace = (all_centered.transpose() * all_centered).trace() / static_cast<double>(n);
  const double floor = std::max(1e-6 * data_trace / static_cast<double>(d), 1e-12);

  GmmResult best;
  best.log_likelihood = -kInf;
  for (int r = 0; r < std::max(1, cfg.restarts); ++r) {
    const KMeansResult km = euclidean_kmeans(data, k, cfg.seed + 7919ULL * static_cast<std::uint64_t>(r), 1);
    Matrix resp = Matrix::Zero(n, k);
    for (Index i = 0; i < n; ++i) resp(i, km.assignments[static_cast<size_t>(i)]) = 1.0;

    GaussianMixture gm;
    gm.means.assign(static_cast<size_t>(k), Vector::Zero(d));
    gm.covariances.assign(static_cast<size_t>(k), Matrix::Identity(d, d));
    gm.weights = Vector::Constant(k, 1.0 / k);
    double prev = -kInf;
    GmmResult run;
    for (int it = 0; it < cfg.max_iter; ++it) {
      // M-step
      for (int c = 0; c < k; ++c) {
        const double nk = resp.col(c).sum();
        if (nk < 1e-10) continue;
        const Vector mu = (resp.col(c).transpose() * data).transpose() / nk;
        const Matrix centered = data.rowwise() - mu.transpose();
        Matrix cov = (centered.transpose() * resp.col(c).asDiagonal() * centered) / nk;
        cov = 0.5 * (cov + cov.transpose());
        cov.diagonal().array() += floor;
        gm.means[static_cast<size_t>(c)] = mu;
        gm.covariances[static_cast<size_t>(c)] = cov;
        gm.weights[c] = nk / static_cast<double>(n);
      }
      gm.weights /= gm.weights.sum();
      // E-step
      const Matrix lj = gm.log_joint(data);
      normalize_log_rows(lj, resp);
      double ll = 0.0;
      for (Index i = 0; i < n; ++i) {
        const double mx = lj.row(i).maxCoeff();
        ll += mx + std::log((lj.row(i).array() - mx).exp().sum());
      }
      run.iterations = it + 1;
      run.log_likelihood = ll;
      if (std::abs(ll - prev) / static_cast<double>(n) < cfg.tol) {
        run.converged = true;
        break;
      }
      prev = ll;
    }
    run.mixture = gm;
    run.responsibilities = resp;
    if (run.log_likelihood > best.log_likelihood) best = std::move(run);
  }
  return best;
}

}  // namespace land
