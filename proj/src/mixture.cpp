#include "land/mixture.hpp"

#include "component.hpp"
#include "land/baselines.hpp"
#include "land/rng.hpp"
#include "log.hpp"

#include <cmath>
#include <limits>

namespace land {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double row_logsumexp(const Matrix& lj, Index i) {
  const double mx = lj.row(i).maxCoeff();
  if (!std::isfinite(mx)) return -kInf;
  return mx + std::log((lj.row(i).array() - mx).exp().sum());
}

LandMixture snapshot(const std::vector<detail::Component>& comps, const Vector& weights) {
  LandMixture mix;
  for (const auto& c : comps) mix.components.push_back(c.params);
  mix.weights = weights;
  return mix;
}

}  // namespace

void LandMixture::validate() const {
  if (components.empty()) throw std::invalid_argument("mixture needs at least one component");
  if (weights.size() != size()) throw std::invalid_argument("mixture weight count differs from K");
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("mixture weights must lie on the simplex");
  }
  for (const auto& c : components) {
    if (!(c.norm_const > 0.0)) throw std::invalid_argument("mixture component without normalization constant");
    if (c.dim() != dim()) throw std::invalid_argument("mixture components differ in dimension");
  }
}

Matrix mixture_log_joint(const std::vector<TangentBatch>& logs, const LandMixture& mix,
                         const std::vector<double>& log_norm_consts) {
  const Index n = logs.front().vectors.rows();
  Matrix out(n, mix.size());
  for (int k = 0; k < mix.size(); ++k) {
    const LandParams& p = mix.components[static_cast<size_t>(k)];
    const double base = std::log(mix.weights[k]) - log_norm_consts[static_cast<size_t>(k)];
    const TangentBatch& lk = logs[static_cast<size_t>(k)];
    for (Index i = 0; i < n; ++i) {
      out(i, k) = lk.ok[static_cast<size_t>(i)]
                      ? base - 0.5 * (p.factor() * lk.vectors.row(i).transpose()).squaredNorm()
                      : -kInf;
    }
  }
  return out;
}

Matrix mixture_log_joint(const DataMatrix& data, const LandMixture& mix, const Metric& m,
                         const GeodesicSolverConfig& cfg, Execution ex) {
  mix.validate();
  std::vector<TangentBatch> logs;
  std::vector<double> log_c;
  for (const auto& c : mix.components) {
    logs.push_back(log_map_batch(m, c.mu(), data, cfg, ex));
    log_c.push_back(std::log(c.norm_const));
  }
  return mixture_log_joint(logs, mix, log_c);
}

Responsibilities responsibilities_from_log_joint(const Matrix& log_joint) {
  Responsibilities out;
  out.degenerate_rows = normalize_log_rows(log_joint, out.r);
  if (!out.degenerate_rows.empty()) {
    log().warn("responsibilities: {} points have zero likelihood under every component",
               out.degenerate_rows.size());
  }
  return out;
}

Responsibilities e_step(const DataMatrix& data, const LandMixture& mix, const Metric& m,
                        const GeodesicSolverConfig& cfg, Execution ex) {
  return responsibilities_from_log_joint(mixture_log_joint(data, mix, m, cfg, ex));
}

double mixture_objective(const Matrix& log_joint) {
  double psi = 0.0;
  for (Index i = 0; i < log_joint.rows(); ++i) {
    const double l = row_logsumexp(log_joint, i);
    if (std::isfinite(l)) psi -= l;
  }
  return psi;
}

double mixture_log_likelihood(const DataMatrix& data, const LandMixture& mix, const Metric& m,
                              const GeodesicSolverConfig& cfg, Execution ex) {
  return -mixture_objective(mixture_log_joint(data, mix, m, cfg, ex));
}

double mixture_log_density(const LandMixture& mix, const Metric& m, const Vector& x,
                           const GeodesicSolverConfig& cfg) {
  DataMatrix one(1, x.size());
  one.row(0) = x.transpose();
  return row_logsumexp(mixture_log_joint(one, mix, m, cfg, Execution::serial), 0);
}

std::vector<ComponentGradients> m_step_gradients(const std::vector<TangentBatch>& logs,
                                                 const LandMixture& mix, const Matrix& r,
                                                 const std::vector<McSamples>& mc) {
  std::vector<ComponentGradients> out;
  for (int k = 0; k < mix.size(); ++k) {
    const TangentBatch& lk = logs[static_cast<size_t>(k)];
    const LandParams& p = mix.components[static_cast<size_t>(k)];
    const Vector rk = r.col(k);
    double total = 0.0;
    for (Index i = 0; i < rk.size(); ++i) {
      if (lk.ok[static_cast<size_t>(i)]) total += rk[i];
    }
    ComponentGradients g;
    g.d_mu = total * detail::direction_mu(lk, mc[static_cast<size_t>(k)], &rk);
    g.grad_mu = -(p.precision() * g.d_mu);
    g.grad_A = total * detail::gradient_A(lk, p, mc[static_cast<size_t>(k)], &rk);
    out.push_back(std::move(g));
  }
  return out;
}

EmResult em_fit(const DataMatrix& data, const Metric& m, int k, const EmConfig& cfg) {
  cfg.validate();
  const Index n = data.rows();
  if (k < 1 || k > n) throw std::invalid_argument("em_fit: need 1 <= K <= N");
  if (data.cols() != m.dim()) throw std::invalid_argument("em_fit: data and metric dimensions differ");

  Vector weights;
  const std::vector<LandParams> init = detail::initial_components(data, m, k, cfg, weights);
  std::vector<detail::Component> comps;
  for (int c = 0; c < k; ++c) comps.push_back(detail::make_component(data, m, init[static_cast<size_t>(c)], cfg, c, 0));

  EmResult res;
  for (const auto& c : comps) res.failed_log_maps += c.logs.failed_count();
  double best = 0.0, prev = 0.0;
  for (int t = 0;; ++t) {
    std::vector<TangentBatch> logs;
    std::vector<double> log_c;
    for (const auto& c : comps) {
      logs.push_back(c.logs);
      log_c.push_back(c.mc.log_estimate);
    }
    const LandMixture current = snapshot(comps, weights);
    const Matrix lj = mixture_log_joint(logs, current, log_c);
    Responsibilities resp = responsibilities_from_log_joint(lj);
    const Index counted = n - static_cast<Index>(resp.degenerate_rows.size());
    if (counted == 0) throw NumericalError("em_fit: no point has positive likelihood");
    const double psi = mixture_objective(lj) / static_cast<double>(counted);
    res.trace.push_back(psi);
    if (t == 0 || psi < best) {
      best = psi;
      res.mixture = current;
      res.r = resp.r;
    }
    res.iterations = t;
    if (t > 0 && (psi - prev) * (psi - prev) <= cfg.tol) {
      res.converged = true;
      break;
    }
    if (t == cfg.max_iter) break;
    prev = psi;

    bool rank_lost = false;
    for (int c = 0; c < k && !rank_lost; ++c) {
      const Vector rc = resp.r.col(c);
      const double rk = rc.sum();
      if (rk < 1e-8) {
        Index worst = 0;
        double lowest = kInf;
        for (Index i = 0; i < n; ++i) {
          const double l = row_logsumexp(lj, i);
          if (l < lowest) {
            lowest = l;
            worst = i;
          }
        }
        log().warn("em_fit: component {} is empty; re-seeding at point {}", c, worst);
        LandParams p = LandParams::from_covariance(data.row(worst).transpose(),
                                                   comps[static_cast<size_t>(c)].params.sigma());
        comps[static_cast<size_t>(c)] = detail::make_component(data, m, std::move(p), cfg, c, t + 1);
        weights[c] = 1.0 / static_cast<double>(n);
        continue;
      }
      if (!detail::update(comps[static_cast<size_t>(c)], data, m, cfg, &rc, c, t, res.failed_log_maps)) {
        log().warn("em_fit: covariance factor of component {} lost rank at iteration {}; stopping", c, t);
        rank_lost = true;
      }
      weights[c] = rk / static_cast<double>(n);
    }
    weights /= weights.sum();
    if (rank_lost) break;
  }
  return res;
}

LandMixture ls_mixture(const DataMatrix& data, const Metric& m, int k, const FitConfig& cfg) {
  FitConfig ls = cfg;
  ls.init = InitStrategy::least_squares;
  LandMixture mix;
  mix.components = detail::initial_components(data, m, k, ls, mix.weights);
  for (int c = 0; c < k; ++c) {
    LandParams& p = mix.components[static_cast<size_t>(c)];
    p.norm_const = detail::estimate_constant(m, p, cfg, detail::mc_stream(c, 0, 0)).estimate;
    p.norm_const_samples = cfg.mc_samples;
  }
  return mix;
}

DataMatrix sample_mixture(const LandMixture& mix, const Metric& m, Index n, std::uint64_t seed,
                          const SampleConfig& cfg) {
  mix.validate();
  auto eng = rng::stream(seed, {0x6d69782d636e74ULL});
  std::discrete_distribution<int> pick(mix.weights.data(), mix.weights.data() + mix.weights.size());
  std::vector<Index> counts(static_cast<size_t>(mix.size()), 0);
  for (Index i = 0; i < n; ++i) ++counts[static_cast<size_t>(pick(eng))];
  DataMatrix out(n, mix.dim());
  Index row = 0;
  for (int k = 0; k < mix.size(); ++k) {
    const Index nk = counts[static_cast<size_t>(k)];
    if (nk == 0) continue;
    const SampleResult s = sample(mix.components[static_cast<size_t>(k)], m, nk, seed, cfg,
                                  static_cast<std::uint64_t>(k));
    out.middleRows(row, nk) = s.points;
    row += nk;
  }
  return out;
}

}  // namespace land
