#include "land/geodesic.hpp"

#include <array>
#include <cmath>

namespace land {

void GeodesicSolverConfig::validate() const {
  if (!(ivp_rel_tol > 0.0) || !(ivp_abs_tol > 0.0) || !(bvp_tol > 0.0)) {
    throw std::invalid_argument("geodesic solver: tolerances must be positive");
  }
  if (max_steps < 1 || bvp_max_iter < 1 || rk4_steps < 1) {
    throw std::invalid_argument("geodesic solver: iteration counts must be >= 1");
  }
}

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::ok: return "ok";
    case SolveStatus::step_limit: return "step_limit";
    case SolveStatus::diverged: return "diverged";
    case SolveStatus::not_converged: return "not_converged";
  }
  return "unknown";
}

GeodesicCurve::GeodesicCurve(ode::Trajectory trajectory, int dim)
    : traj_(std::move(trajectory)), dim_(dim) {}

Vector GeodesicCurve::position_at(double t) const { return ode::hermite(traj_, t).head(dim_); }

Vector GeodesicCurve::velocity_at(double t) const { return ode::hermite(traj_, t).tail(dim_); }

namespace {

constexpr int kStackDim = 8;

// a = geodesic acceleration at (x, v); all spans have length D.
void acceleration(const Metric& m, const double* x, const double* v, double* a) {
  const int d = m.dim();
  std::array<double, kStackDim> diag_buf{};
  std::array<double, kStackDim * kStackDim> jac_buf{};
  std::vector<double> diag_heap, jac_heap;
  double* diag = diag_buf.data();
  double* jac = jac_buf.data();
  if (d > kStackDim) {
    diag_heap.resize(d);
    jac_heap.resize(static_cast<size_t>(d) * d);
    diag = diag_heap.data();
    jac = jac_heap.data();
  }
  const auto dd = static_cast<size_t>(d);
  m.evaluate({x, dd}, {diag, dd}, {jac, dd * dd});
  for (int i = 0; i < d; ++i) {
    double first = 0.0, second = 0.0;
    for (int k = 0; k < d; ++k) {
      first += jac[static_cast<size_t>(i) * d + k] * v[k];
      second += jac[static_cast<size_t>(k) * d + i] * v[k] * v[k];
    }
    a[i] = -(2.0 * first * v[i] - second) / (2.0 * diag[i]);
  }
}

ode::Rhs make_rhs(const Metric& m) {
  const int d = m.dim();
  return [&m, d](double, const Vector& y, Vector& dydt) {
    dydt.head(d) = y.tail(d);
    acceleration(m, y.data(), y.data() + d, dydt.data() + d);
  };
}

ode::Options ivp_options(const GeodesicSolverConfig& cfg, bool record) {
  ode::Options o;
  o.rel_tol = cfg.ivp_rel_tol;
  o.abs_tol = cfg.ivp_abs_tol;
  o.max_steps = cfg.max_steps;
  o.record = record;
  return o;
}

void check_point(const Metric& m, const Vector& p, const char* what) {
  if (p.size() != m.dim()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch");
  }
  if (!p.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite input");
}

SolveStatus status_of(const ode::Trajectory& tr) {
  switch (tr.status) {
    case ode::Status::success: return SolveStatus::ok;
    case ode::Status::step_limit: return SolveStatus::step_limit;
    case ode::Status::non_finite: return SolveStatus::diverged;
  }
  return SolveStatus::diverged;
}

ode::Trajectory integrate(const Metric& m, const ode::Rhs& rhs, const Vector& x, const Vector& v,
                          const GeodesicSolverConfig& cfg, bool record) {
  const int d = m.dim();
  Vector y0(2 * d);
  y0 << x, v;
  if (cfg.integrator == Integrator::rk4) return ode::rk4(rhs, 0.0, 1.0, y0, cfg.rk4_steps, record);
  return ode::dopri5(rhs, 0.0, 1.0, y0, ivp_options(cfg, record));
}

// ---------------------------------------------------------------------------
// Shooting

struct Shot {
  Vector v;
  Vector endpoint;
  Vector residual;
  double norm = std::numeric_limits<double>::infinity();
  std::vector<double> steps;
  bool valid = false;
};

class Shooter {
 public:
  Shooter(const Metric& m, const Vector& x, const GeodesicSolverConfig& cfg)
      : m_(m), x_(x), cfg_(cfg), rhs_(make_rhs(m)), d_(m.dim()) {}

  Shot fire(const Vector& v, const Vector& target) const {
    Shot s;
    s.v = v;
    const ode::Trajectory tr = integrate(m_, rhs_, x_, v, cfg_, false);
    if (!tr.ok()) return s;
    s.endpoint = tr.y_end.head(d_);
    s.residual = s.endpoint - target;
    s.norm = s.residual.norm();
    s.steps = tr.steps;
    s.valid = std::isfinite(s.norm);
    return s;
  }

  // d(endpoint)/dv by forward differences on the base step sequence.
  bool jacobian(const Shot& base, Matrix& jac) const {
    jac.resize(d_, d_);
    Vector y0(2 * d_);
    // Fixed-step RK4 is already a smooth map of v; the adaptive integrator
    // is replayed on the base step sequence, which reproduces base.endpoint
    // exactly at the unperturbed velocity.
    for (int j = 0; j < d_; ++j) {
      const double h = 1e-7 * std::max(1.0, base.v.norm());
      Vector vp = base.v;
      vp[j] += h;
      y0 << x_, vp;
      const ode::Trajectory tr = cfg_.integrator == Integrator::rk4
                                     ? ode::rk4(rhs_, 0.0, 1.0, y0, cfg_.rk4_steps, false)
                                     : ode::dopri5_fixed(rhs_, 0.0, y0, base.steps, false);
      if (!tr.ok()) return false;
      jac.col(j) = (tr.y_end.head(d_) - base.endpoint) / h;
    }
    return jac.allFinite();
  }

  // Damped Gauss-Newton from v0 towards `target`. Returns the best shot.
  Shot solve(const Vector& v0, const Vector& target, int max_iter, int& iterations) const {
    Shot cur = fire(v0, target);
    if (!cur.valid) return cur;
    Matrix jac;
    for (int it = 0; it < max_iter && cur.norm > cfg_.bvp_tol; ++it) {
      ++iterations;
      if (!jacobian(cur, jac)) break;
      const Vector step = -jac.colPivHouseholderQr().solve(cur.residual);
      if (!step.allFinite()) break;
      bool improved = false;
      double alpha = 1.0;
      for (int k = 0; k < 8; ++k, alpha *= 0.5) {
        Shot trial = fire(cur.v + alpha * step, target);
        if (trial.valid && trial.norm < cur.norm) {
          cur = std::move(trial);
          improved = true;
          break;
        }
      }
      if (!improved) break;
    }
    return cur;
  }

 private:
  const Metric& m_;
  const Vector& x_;
  const GeodesicSolverConfig& cfg_;
  ode::Rhs rhs_;
  int d_;
};

}  // namespace

Vector geodesic_rhs(const Metric& m, const Vector& position, const Vector& velocity) {
  check_point(m, position, "geodesic_rhs");
  check_point(m, velocity, "geodesic_rhs");
  Vector a(m.dim());
  acceleration(m, position.data(), velocity.data(), a.data());
  return a;
}

ExpMapResult exp_map(const Metric& m, const Vector& x, const Vector& v,
                     const GeodesicSolverConfig& cfg, bool keep_curve) {
  check_point(m, x, "exp_map");
  check_point(m, v, "exp_map");
  const int d = m.dim();
  const ode::Rhs rhs = make_rhs(m);
  ode::Trajectory tr = integrate(m, rhs, x, v, cfg, keep_curve);
  ExpMapResult out;
  out.status = status_of(tr);
  out.steps = static_cast<int>(tr.steps.size());
  out.endpoint = tr.y_end.head(d);
  out.end_velocity = tr.y_end.tail(d);
  if (keep_curve) out.curve = GeodesicCurve(std::move(tr), d);
  return out;
}

LogMapResult log_map(const Metric& m, const Vector& x, const Vector& y,
                     const GeodesicSolverConfig& cfg, const std::optional<Vector>& guess) {
  check_point(m, x, "log_map");
  check_point(m, y, "log_map");
  LogMapResult out;
  const Vector chord = y - x;
  if (chord.norm() == 0.0) {
    out.velocity = Vector::Zero(m.dim());
    return out;
  }
  const Shooter shooter(m, x, cfg);
  Shot best;
  best.v = chord;
  auto consider = [&](Shot s) {
    if (s.valid && s.norm < best.norm) best = std::move(s);
    return best.norm <= cfg.bvp_tol;
  };

  bool done = false;
  if (guess && guess->size() == m.dim() && guess->allFinite()) {
    done = consider(shooter.solve(*guess, y, cfg.bvp_max_iter, out.iterations));
  }
  if (!done && cfg.initial_guess == InitialGuess::straight_line) {
    done = consider(shooter.solve(chord, y, cfg.bvp_max_iter, out.iterations));
  }
  // Continuation: move the target along the chord, warm-starting each stage.
  for (int stages : {4, 16}) {
    if (done) break;
    Vector v = chord / stages;
    bool stage_ok = true;
    for (int s = 1; s <= stages; ++s) {
      const Vector target = x + (static_cast<double>(s) / stages) * chord;
      Shot shot = shooter.solve(v, target, cfg.bvp_max_iter, out.iterations);
      if (!shot.valid || shot.norm > cfg.bvp_tol) {
        stage_ok = false;
        break;
      }
      v = shot.v * (static_cast<double>(s + 1) / s);
      if (s == stages) done = consider(std::move(shot));
    }
    if (!stage_ok) continue;
  }

  out.velocity = best.v;
  out.residual = best.norm;
  out.status = done ? SolveStatus::ok : SolveStatus::not_converged;
  return out;
}

double riemannian_norm(const Metric& m, const Vector& x, const Vector& v) {
  const Vector diag = m.tensor(x);
  return std::sqrt((diag.array() * v.array().square()).sum());
}

double curve_length(const Metric& m, const GeodesicCurve& curve) {
  static constexpr std::array<double, 5> nodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                                  0.5384693101056831, 0.9061798459386640};
  static constexpr std::array<double, 5> weights = {0.2369268850561891, 0.4786286704993665,
                                                    0.5688888888888889, 0.4786286704993665,
                                                    0.2369268850561891};
  const auto& ts = curve.times();
  double total = 0.0;
  for (size_t i = 0; i + 1 < ts.size(); ++i) {
    const double a = ts[i], b = ts[i + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double seg = 0.0;
    for (size_t q = 0; q < nodes.size(); ++q) {
      const double t = mid + half * nodes[q];
      seg += weights[q] * riemannian_norm(m, curve.position_at(t), curve.velocity_at(t));
    }
    total += half * seg;
  }
  return total;
}

double geodesic_distance(const Metric& m, const Vector& x, const Vector& y,
                         const GeodesicSolverConfig& cfg) {
  const LogMapResult lm = log_map(m, x, y, cfg);
  if (!lm.ok()) {
    throw NumericalError("geodesic_distance: logarithm map did not converge (residual " +
                         std::to_string(lm.residual) + ")");
  }
  return riemannian_norm(m, x, lm.velocity);
}

}  // namespace land
