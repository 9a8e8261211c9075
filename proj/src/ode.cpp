#include "land/ode.hpp"

#include <algorithm>
#include <cmath>

namespace land::ode {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Stages {
  Vector k2, k3, k4, k5, k6, k7, tmp, y_new;
  explicit Stages(Index n)
      : k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y_new(n) {}
};

// One 5th-order step from (t, y) with k1 = f(t, y). Leaves the new state in
// s.y_new and f(t + h, y_new) in s.k7.
void dp_step(const Rhs& f, double t, const Vector& y, const Vector& k1, double h, Stages& s) {
  s.tmp = y + h * a21 * k1;
  f(t + c2 * h, s.tmp, s.k2);
  s.tmp = y + h * (a31 * k1 + a32 * s.k2);
  f(t + c3 * h, s.tmp, s.k3);
  s.tmp = y + h * (a41 * k1 + a42 * s.k2 + a43 * s.k3);
  f(t + c4 * h, s.tmp, s.k4);
  s.tmp = y + h * (a51 * k1 + a52 * s.k2 + a53 * s.k3 + a54 * s.k4);
  f(t + c5 * h, s.tmp, s.k5);
  s.tmp = y + h * (a61 * k1 + a62 * s.k2 + a63 * s.k3 + a64 * s.k4 + a65 * s.k5);
  f(t + h, s.tmp, s.k6);
  s.y_new = y + h * (b1 * k1 + b3 * s.k3 + b4 * s.k4 + b5 * s.k5 + b6 * s.k6);
  f(t + h, s.y_new, s.k7);
}

double scaled_norm(const Vector& v, const Vector& a, const Vector& b, double atol, double rtol) {
  double acc = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    const double sc = atol + rtol * std::max(std::abs(a[i]), std::abs(b[i]));
    const double r = v[i] / sc;
    acc += r * r;
  }
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double initial_step(const Rhs& f, double t0, const Vector& y0, const Vector& f0, double span,
                    const Options& opt, int& evals) {
  const double d0 = scaled_norm(y0, y0, y0, opt.abs_tol, opt.rel_tol);
  const double d1 = scaled_norm(f0, y0, y0, opt.abs_tol, opt.rel_tol);
  double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h0 = std::min(h0, span);
  Vector y1 = y0 + h0 * f0;
  Vector f1(y0.size());
  f(t0 + h0, y1, f1);
  ++evals;
  const double d2 = scaled_norm(f1 - f0, y0, y0, opt.abs_tol, opt.rel_tol) / h0;
  const double dm = std::max(d1, d2);
  const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
  return std::min({100.0 * h0, h1, span, opt.max_step});
}

void push_node(Trajectory& tr, double t, const Vector& y, const Vector& fy) {
  tr.t.push_back(t);
  tr.y.push_back(y);
  tr.f.push_back(fy);
}

}  // namespace

Trajectory dopri5(const Rhs& f, double t0, double t1, const Vector& y0, const Options& opt) {
  Trajectory tr;
  const Index n = y0.size();
  Vector y = y0;
  Vector k1(n);
  f(t0, y, k1);
  tr.rhs_evals = 1;
  if (opt.record) push_node(tr, t0, y, k1);

  const double span = t1 - t0;
  double t = t0;
  double h = opt.initial_step > 0.0 ? std::min(opt.initial_step, span)
                                    : initial_step(f, t0, y, k1, span, opt, tr.rhs_evals);
  Stages s(n);
  Vector err(n);
  bool last_rejected = false;
  int attempts = 0;

  while (t < t1) {
    if (attempts++ >= opt.max_steps) {
      tr.status = Status::step_limit;
      break;
    }
    const double remaining = t1 - t;
    bool final_step = false;
    if (h >= remaining * (1.0 - 1e-12)) {
      h = remaining;
      final_step = true;
    }
    dp_step(f, t, y, k1, h, s);
    tr.rhs_evals += 6;
    if (!s.y_new.allFinite() || !s.k7.allFinite()) {
      tr.status = Status::non_finite;
      break;
    }
    err = h * (e1 * k1 + e3 * s.k3 + e4 * s.k4 + e5 * s.k5 + e6 * s.k6 + e7 * s.k7);
    const double en = scaled_norm(err, y, s.y_new, opt.abs_tol, opt.rel_tol);
    if (en <= 1.0) {
      t = final_step ? t1 : t + h;
      y = s.y_new;
      k1 = s.k7;
      tr.steps.push_back(h);
      if (opt.record) push_node(tr, t, y, k1);
      double fac = en == 0.0 ? 5.0 : 0.9 * std::pow(en, -0.2);
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
      h = std::min(h * fac, opt.max_step);
      last_rejected = false;
    } else {
      const double fac = std::max(0.2, 0.9 * std::pow(en, -0.2));
      h *= fac;
      last_rejected = true;
      if (h < 1e-14 * std::max(1.0, std::abs(t))) {
        tr.status = Status::step_limit;
        break;
      }
    }
  }
  tr.y_end = y;
  tr.f_end = k1;
  tr.t_end = t;
  return tr;
}

Trajectory dopri5_fixed(const Rhs& f, double t0, const Vector& y0, const std::vector<double>& steps,
                        bool record) {
  Trajectory tr;
  const Index n = y0.size();
  Vector y = y0;
  Vector k1(n);
  f(t0, y, k1);
  tr.rhs_evals = 1;
  if (record) push_node(tr, t0, y, k1);
  Stages s(n);
  double t = t0;
  for (double h : steps) {
    dp_step(f, t, y, k1, h, s);
    tr.rhs_evals += 6;
    if (!s.y_new.allFinite() || !s.k7.allFinite()) {
      tr.status = Status::non_finite;
      break;
    }
    t += h;
    y = s.y_new;
    k1 = s.k7;
    tr.steps.push_back(h);
    if (record) push_node(tr, t, y, k1);
  }
  tr.y_end = y;
  tr.f_end = k1;
  tr.t_end = t;
  return tr;
}

Trajectory rk4(const Rhs& f, double t0, double t1, const Vector& y0, int n_steps, bool record) {
  if (n_steps < 1) throw std::invalid_argument("rk4: need at least one step");
  Trajectory tr;
  const Index n = y0.size();
  const double h = (t1 - t0) / n_steps;
  Vector y = y0, k1(n), k2(n), k3(n), k4(n), tmp(n);
  f(t0, y, k1);
  tr.rhs_evals = 1;
  if (record) push_node(tr, t0, y, k1);
  double t = t0;
  for (int i = 0; i < n_steps; ++i) {
    tmp = y + 0.5 * h * k1;
    f(t + 0.5 * h, tmp, k2);
    tmp = y + 0.5 * h * k2;
    f(t + 0.5 * h, tmp, k3);
    tmp = y + h * k3;
    f(t + h, tmp, k4);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = (i + 1 == n_steps) ? t1 : t0 + (i + 1) * h;
    f(t, y, k1);
    tr.rhs_evals += 4;
    if (!y.allFinite() || !k1.allFinite()) {
      tr.status = Status::non_finite;
      break;
    }
    tr.steps.push_back(h);
    if (record) push_node(tr, t, y, k1);
  }
  tr.y_end = y;
  tr.f_end = k1;
  tr.t_end = t;
  return tr;
}

Vector hermite(const Trajectory& tr, double t) {
  if (tr.t.empty()) throw std::logic_error("hermite: trajectory was not recorded");
  if (t <= tr.t.front()) return tr.y.front();
  if (t >= tr.t.back()) return tr.y.back();
  const auto it = std::upper_bound(tr.t.begin(), tr.t.end(), t);
  const size_t i = static_cast<size_t>(it - tr.t.begin()) - 1;
  const double h = tr.t[i + 1] - tr.t[i];
  const double s = (t - tr.t[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  return h00 * tr.y[i] + h10 * h * tr.f[i] + h01 * tr.y[i + 1] + h11 * h * tr.f[i + 1];
}

}  // namespace land::ode
