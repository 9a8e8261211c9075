#include "component.hpp"

#include "land/baselines.hpp"
#include "land/rng.hpp"
#include "log.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace land::detail {

namespace {

constexpr std::uint64_t kInitKey = 0x4c414e442d696eULL;

double weight(const Vector* r, Index i) { return r == nullptr ? 1.0 : (*r)[i]; }

double mc_weight_sum(const McSamples& mc) {
  double s = 0.0;
  for (Index i = 0; i < mc.measure.size(); ++i) s += mc.measure[i];
  return s;
}

// Tangent covariance of `members` at `center`, regularized until it is
// positive definite. Falls back to all data when the cluster is too small.
Matrix cluster_covariance(const DataMatrix& data, const std::vector<Index>& members,
                          const Metric& m, const Vector& center, const IntrinsicConfig& ic) {
  const Index d = data.cols();
  Matrix cov;
  bool have = false;
  if (static_cast<Index>(members.size()) > d) {
    DataMatrix sub(static_cast<Index>(members.size()), d);
    for (size_t i = 0; i < members.size(); ++i) sub.row(static_cast<Index>(i)) = data.row(members[i]);
    try {
      cov = intrinsic_covariance(sub, m, center, ic);
      have = true;
    } catch (const NumericalError&) {
    }
  }
  if (!have) cov = intrinsic_covariance(data, m, center, ic);
  cov = 0.5 * (cov + cov.transpose());
  const double scale = std::max(cov.trace() / static_cast<double>(d), 1e-12);
  for (double ridge = 1e-9; Eigen::LLT<Matrix>(cov).info() != Eigen::Success; ridge *= 10.0) {
    cov.diagonal().array() += ridge * scale;
  }
  return cov;
}

}  // namespace

std::uint64_t mc_stream(int k, int t, int phase) {
  return (static_cast<std::uint64_t>(k) << 40) | (static_cast<std::uint64_t>(t) << 2) |
         static_cast<std::uint64_t>(phase);
}

McSamples estimate_constant(const Metric& m, const LandParams& p, const FitConfig& cfg,
                            std::uint64_t stream) {
  if (!cfg.fresh_samples) stream = mc_stream(static_cast<int>(stream >> 40), 0, 0);
  McOptions opt;
  opt.samples = cfg.mc_samples;
  opt.seed = cfg.rng_seed;
  opt.stream = stream;
  opt.moment_matching = cfg.moment_matching;
  opt.geodesic = cfg.geodesic;
  opt.execution = cfg.execution;
  return normalization_constant(m, p, opt);
}

Component make_component(const DataMatrix& data, const Metric& m, LandParams p,
                         const FitConfig& cfg, int k, int t) {
  Component c;
  c.logs = log_map_batch(m, p.mu(), data, cfg.geodesic, cfg.execution);
  if (2 * c.logs.failed_count() > data.rows()) {
    throw NumericalError("more than half of the logarithm maps failed at the initial mean");
  }
  c.mc = estimate_constant(m, p, cfg, mc_stream(k, t, 0));
  p.norm_const = c.mc.estimate;
  p.norm_const_samples = cfg.mc_samples;
  c.step_mu = cfg.step_mu;
  if (cfg.step_A > 0.0) {
    c.step_A = cfg.step_A;
  } else {
    const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(p.sigma(), Eigen::EigenvaluesOnly)
                            .eigenvalues()
                            .maxCoeff();
    c.step_A = 0.25 / lmax;
  }
  c.params = std::move(p);
  return c;
}

double objective(const Component& c, const Vector* r) {
  const TangentBatch& logs = c.logs;
  double sum = 0.0, total = 0.0;
  for (Index i = 0; i < logs.vectors.rows(); ++i) {
    if (!logs.ok[static_cast<size_t>(i)]) continue;
    const double w = weight(r, i);
    sum += w * (c.params.factor() * logs.vectors.row(i).transpose()).squaredNorm();
    total += w;
  }
  const double data_term = total > 0.0 ? sum / (2.0 * total) : 0.0;
  return data_term + c.mc.log_estimate;
}

Vector direction_mu(const TangentBatch& logs, const McSamples& mc, const Vector* r) {
  const Index d = logs.vectors.cols();
  Vector data_sum = Vector::Zero(d);
  double total = 0.0;
  for (Index i = 0; i < logs.vectors.rows(); ++i) {
    if (!logs.ok[static_cast<size_t>(i)]) continue;
    const double w = weight(r, i);
    data_sum += w * logs.vectors.row(i).transpose();
    total += w;
  }
  Vector mc_sum = Vector::Zero(d);
  for (Index s = 0; s < mc.tangent.rows(); ++s) mc_sum += mc.measure[s] * mc.tangent.row(s).transpose();
  Vector out = mc_sum / -mc_weight_sum(mc);
  if (total > 0.0) out += data_sum / total;
  return out;
}

Matrix gradient_A(const TangentBatch& logs, const LandParams& p, const McSamples& mc,
                  const Vector* r) {
  const Index d = logs.vectors.cols();
  Matrix data_sum = Matrix::Zero(d, d);
  double total = 0.0;
  for (Index i = 0; i < logs.vectors.rows(); ++i) {
    if (!logs.ok[static_cast<size_t>(i)]) continue;
    const double w = weight(r, i);
    const Vector l = logs.vectors.row(i).transpose();
    data_sum.noalias() += w * l * l.transpose();
    total += w;
  }
  Matrix mc_sum = Matrix::Zero(d, d);
  for (Index s = 0; s < mc.tangent.rows(); ++s) {
    const Vector v = mc.tangent.row(s).transpose();
    mc_sum.noalias() += mc.measure[s] * v * v.transpose();
  }
  Matrix inner = mc_sum / -mc_weight_sum(mc);
  if (total > 0.0) inner += data_sum / total;
  return p.factor() * inner;
}

bool update(Component& c, const DataMatrix& data, const Metric& m, const FitConfig& cfg,
            const Vector* r, int k, int t, Index& failed_log_maps) {
  const double phi_t = objective(c, r);

  // Mean step along the steepest descent direction.
  const Vector step = c.step_mu * direction_mu(c.logs, c.mc, r);
  double phi_mid = phi_t;
  bool moved = false;
  const ExpMapResult e = exp_map(m, c.params.mu(), step, cfg.geodesic, false);
  if (e.ok()) {
    const Matrix guesses = c.logs.vectors.rowwise() - step.transpose();
    TangentBatch logs = log_map_batch(m, e.endpoint, data, cfg.geodesic, cfg.execution, &guesses);
    failed_log_maps += logs.failed_count();
    if (2 * logs.failed_count() <= data.rows()) {
      LandParams p = LandParams::from_factor(e.endpoint, c.params.factor());
      c.mc = estimate_constant(m, p, cfg, mc_stream(k, t, 1));
      p.norm_const = c.mc.estimate;
      p.norm_const_samples = cfg.mc_samples;
      c.params = std::move(p);
      c.logs = std::move(logs);
      phi_mid = objective(c, r);
      moved = true;
    } else {
      log().debug("component {}: mean step rejected, {} logarithm maps failed", k, logs.failed_count());
    }
  } else {
    log().debug("component {}: mean step rejected, exponential map failed", k);
  }
  c.step_mu *= (moved && phi_mid <= phi_t) ? 1.1 : 0.75;

  // Factor step.
  const Matrix a_new = c.params.factor() - c.step_A * gradient_A(c.logs, c.params, c.mc, r);
  LandParams p;
  try {
    p = LandParams::from_factor(c.params.mu(), a_new);
  } catch (const NumericalError&) {
    return false;
  }
  c.mc = estimate_constant(m, p, cfg, mc_stream(k, t + 1, 0));
  p.norm_const = c.mc.estimate;
  p.norm_const_samples = cfg.mc_samples;
  c.params = std::move(p);
  const double phi_new = objective(c, r);
  log().debug("component {} iteration {}: phi {:.6f} -> {:.6f} -> {:.6f}, |step| {:.3g}, steps {:.3g} {:.3g}",
              k, t, phi_t, phi_mid, phi_new, step.norm(), c.step_mu, c.step_A);
  c.step_A *= phi_new <= phi_mid ? 1.1 : 0.75;
  return true;
}

std::vector<LandParams> initial_components(const DataMatrix& data, const Metric& m, int k,
                                           const FitConfig& cfg, Vector& weights) {
  const Index n = data.rows();
  if (k < 1 || k > n) throw std::invalid_argument("need 1 <= K <= N");
  IntrinsicConfig ic;
  ic.max_iter = cfg.init_mean_iter;
  ic.geodesic = cfg.geodesic;
  ic.execution = cfg.execution;

  Matrix centers;
  std::vector<int> assign;
  switch (cfg.init) {
    case InitStrategy::random: {
      std::vector<Index> idx(static_cast<size_t>(n));
      std::iota(idx.begin(), idx.end(), Index{0});
      auto eng = rng::stream(cfg.rng_seed, {kInitKey});
      std::shuffle(idx.begin(), idx.end(), eng);
      centers.resize(k, data.cols());
      for (int c = 0; c < k; ++c) centers.row(c) = data.row(idx[static_cast<size_t>(c)]);
      KMeansConfig kc;
      kc.max_iter = 0;
      kc.intrinsic = ic;
      assign = riemannian_kmeans_from(data, m, centers, kc).assignments;
      break;
    }
    case InitStrategy::least_squares: {
      if (k == 1) {
        centers = intrinsic_mean(data, m, ic).transpose();
        assign.assign(static_cast<size_t>(n), 0);
      } else {
        KMeansConfig kc;
        kc.seed = cfg.rng_seed;
        kc.intrinsic = ic;
        KMeansResult km = riemannian_kmeans(data, m, k, kc);
        centers = std::move(km.centers);
        assign = std::move(km.assignments);
      }
      break;
    }
    case InitStrategy::gmm: {
      GmmConfig gc;
      gc.seed = cfg.rng_seed;
      const GmmResult g = gmm_fit(data, k, gc);
      centers.resize(k, data.cols());
      for (int c = 0; c < k; ++c) centers.row(c) = g.mixture.means[static_cast<size_t>(c)].transpose();
      assign.resize(static_cast<size_t>(n));
      for (Index i = 0; i < n; ++i) {
        Index arg = 0;
        g.responsibilities.row(i).maxCoeff(&arg);
        assign[static_cast<size_t>(i)] = static_cast<int>(arg);
      }
      break;
    }
  }

  std::vector<LandParams> out;
  weights.resize(k);
  for (int c = 0; c < k; ++c) {
    std::vector<Index> members;
    for (Index i = 0; i < n; ++i) {
      if (assign[static_cast<size_t>(i)] == c) members.push_back(i);
    }
    const Vector center = centers.row(c).transpose();
    out.push_back(LandParams::from_covariance(center, cluster_covariance(data, members, m, center, ic)));
    weights[c] = static_cast<double>(std::max<size_t>(members.size(), 1));
  }
  weights /= weights.sum();
  return out;
}

}  // namespace land::detail
