#pragma once

#include "land/metric.hpp"
#include "land/ode.hpp"
#include "land/types.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace land {

enum class Integrator { dopri5, rk4 };

/// How the shooting solver picks its first velocity.
enum class InitialGuess {
  straight_line,  ///< v0 = y - x, falling back to continuation on failure.
  continuation,   ///< Walk the target from x to y in stages from the start.
};

struct GeodesicSolverConfig {
  double ivp_rel_tol = 1e-6;
  double ivp_abs_tol = 1e-8;
  int max_steps = 2000;
  int bvp_max_iter = 30;
  double bvp_tol = 1e-5;  ///< Endpoint residual norm, data units.
  InitialGuess initial_guess = InitialGuess::straight_line;
  Integrator integrator = Integrator::dopri5;
  int rk4_steps = 200;  ///< Only used with Integrator::rk4.

  void validate() const;
};

enum class SolveStatus { ok, step_limit, diverged, not_converged };

std::string_view to_string(SolveStatus s);

/// Geodesic sampled at solver nodes, t in [0, 1], with cubic Hermite dense
/// output for both position and velocity.
class GeodesicCurve {
 public:
  GeodesicCurve() = default;
  GeodesicCurve(ode::Trajectory trajectory, int dim);

  static constexpr std::string_view interpolation() { return "cubic_hermite"; }

  size_t size() const { return traj_.t.size(); }
  bool empty() const { return traj_.t.empty(); }
  const std::vector<double>& times() const { return traj_.t; }
  Vector position(size_t i) const { return traj_.y[i].head(dim_); }
  Vector velocity(size_t i) const { return traj_.y[i].tail(dim_); }

  Vector position_at(double t) const;
  Vector velocity_at(double t) const;

 private:
  ode::Trajectory traj_;
  int dim_ = 0;
};

struct ExpMapResult {
  Vector endpoint;
  Vector end_velocity;
  GeodesicCurve curve;  ///< Empty unless requested.
  SolveStatus status = SolveStatus::ok;
  int steps = 0;

  bool ok() const { return status == SolveStatus::ok; }
};

struct LogMapResult {
  Vector velocity;        ///< Best velocity found, even on failure.
  double residual = 0.0;  ///< |Exp_x(velocity) - y|.
  int iterations = 0;
  SolveStatus status = SolveStatus::ok;

  bool ok() const { return status == SolveStatus::ok; }
};

/// Geodesic acceleration for a diagonal metric:
///   a_d = -1/(2 M_dd) [ 2 sum_k dM_dd/dx_k v_d v_k - sum_k dM_kk/dx_d v_k^2 ].
Vector geodesic_rhs(const Metric& m, const Vector& position, const Vector& velocity);

/// Integrates the geodesic equation from gamma(0) = x, gamma'(0) = v to t = 1.
ExpMapResult exp_map(const Metric& m, const Vector& x, const Vector& v,
                     const GeodesicSolverConfig& cfg, bool keep_curve = true);

/// Single shooting: finds v with Exp_x(v) = y. `guess` replaces the straight
/// line start; the straight line is still tried if the guess fails.
LogMapResult log_map(const Metric& m, const Vector& x, const Vector& y,
                     const GeodesicSolverConfig& cfg, const std::optional<Vector>& guess = {});

/// sqrt(v^T M(x) v).
double riemannian_norm(const Metric& m, const Vector& x, const Vector& v);

/// Riemannian length of a recorded curve (Gauss-Legendre per segment).
double curve_length(const Metric& m, const GeodesicCurve& curve);

/// |Log_x(y)|_{M(x)}; throws NumericalError when the logarithm map fails.
double geodesic_distance(const Metric& m, const Vector& x, const Vector& y,
                         const GeodesicSolverConfig& cfg);

}  // namespace land
