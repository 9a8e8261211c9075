#pragma once

#include "land/types.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace land::ode {

/// dy/dt = f(t, y). The callee writes into `dydt`, which is pre-sized.
using Rhs = std::function<void(double t, const Vector& y, Vector& dydt)>;

struct Options {
  double rel_tol = 1e-6;
  double abs_tol = 1e-8;
  int max_steps = 2000;
  double initial_step = 0.0;  ///< 0 selects the step automatically.
  double max_step = std::numeric_limits<double>::infinity();
  bool record = true;         ///< Keep every accepted node for dense output.
};

enum class Status { success, step_limit, non_finite };

/// Result of one integration. Nodes are only populated when recording; the
/// final state and the accepted step sizes are always kept.
struct Trajectory {
  std::vector<double> t;
  std::vector<Vector> y;
  std::vector<Vector> f;  ///< dy/dt at each node.
  std::vector<double> steps;
  Vector y_end;
  Vector f_end;
  double t_end = 0.0;
  Status status = Status::success;
  int rhs_evals = 0;

  bool ok() const { return status == Status::success; }
};

/// Adaptive Dormand-Prince 5(4) with FSAL and per-step error control.
Trajectory dopri5(const Rhs& f, double t0, double t1, const Vector& y0, const Options& opt);

/// Dormand-Prince 5th-order stages on a prescribed step sequence (no error
/// control). Replaying the steps of an adaptive run makes the end state a
/// smooth function of y0, which finite-difference Jacobians rely on.
Trajectory dopri5_fixed(const Rhs& f, double t0, const Vector& y0, const std::vector<double>& steps,
                        bool record);

/// Classical fixed-step RK4.
Trajectory rk4(const Rhs& f, double t0, double t1, const Vector& y0, int n_steps, bool record);

/// Cubic Hermite interpolation of a recorded trajectory (uses y and f).
Vector hermite(const Trajectory& tr, double t);

}  // namespace land::ode
