#pragma once

// Per-component state and the block-coordinate update shared by the single
// LAND fit and the mixture EM loop. With K = 1 and unit weights both loops
// run exactly the same sequence of operations and random streams.

#include "land/land.hpp"

#include <cstdint>
#include <vector>

namespace land::detail {

/// Stream id for the MC estimate of component k at iteration t. Phase 0 is
/// the estimate at (mu_t, A_t), phase 1 the one after the mean update,
/// phase 2 a re-seeded component.
std::uint64_t mc_stream(int k, int t, int phase);

McSamples estimate_constant(const Metric& m, const LandParams& p, const FitConfig& cfg,
                            std::uint64_t stream);

struct Component {
  LandParams params;  ///< norm_const matches `mc`.
  McSamples mc;
  TangentBatch logs;  ///< Log_mu(x_n) at params.mu().
  double step_mu = 0.0;
  double step_A = 0.0;
};

/// Builds the state at (mu, A): logarithm maps and the phase-0 constant.
/// Throws NumericalError when more than half of the logarithm maps fail.
Component make_component(const DataMatrix& data, const Metric& m, LandParams p,
                         const FitConfig& cfg, int k, int t);

/// Weighted objective sum_n r_n <L_n, P L_n> / (2 R) + ln C over the
/// successful logarithm maps. `r` may be null for unit weights.
double objective(const Component& c, const Vector* r);

/// Weighted directions normalized by R; see descent_direction_mu / grad_A.
Vector direction_mu(const TangentBatch& logs, const McSamples& mc, const Vector* r);
Matrix gradient_A(const TangentBatch& logs, const LandParams& p, const McSamples& mc,
                  const Vector* r);

/// One mean step followed by one factor step with stepsize adaptation.
/// Returns false when the factor update loses rank (the component is left
/// at its mean-updated state).
bool update(Component& c, const DataMatrix& data, const Metric& m, const FitConfig& cfg,
            const Vector* r, int k, int t, Index& failed_log_maps);

/// Initial components per cfg.init. `weights` receives cluster fractions.
std::vector<LandParams> initial_components(const DataMatrix& data, const Metric& m, int k,
                                           const FitConfig& cfg, Vector& weights);

}  // namespace land::detail
