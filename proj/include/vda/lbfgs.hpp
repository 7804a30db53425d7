#pragma once

#include <functional>
#include <vector>

#include "vda/adjoint.hpp"
#include "vda/model.hpp"
#include "vda/observation.hpp"
#include "vda/types.hpp"

namespace vda {

/// LBFGS with Armijo backtracking, run in the unconstrained logit (Psi)
/// coordinates. Termination on the infinity norm of dJ'/dPsi, relative to
/// max(1, |J'|) by default.
struct LbfgsConfig {
  int memory = 10;
  Real grad_tol = 1e-8;
  bool relative_tol = true;
  int max_iters = 1000;
  Real armijo_c1 = 1e-4;
  Real backtrack_factor = 0.5;
  int max_backtracks = 50;
};

/// line_search_stalled: an Armijo step exists on paper but no strict
/// decrease is representable in double arithmetic anymore -- the iterate is
/// at the cost floor. Reported instead of thrown so the (converged for all
/// practical purposes) iterate is not discarded; LineSearchFailureError is
/// reserved for a stall before any progress at all.
enum class StopReason { converged, max_iters, line_search_stalled };

struct TraceRow {
  int iter = 0;
  Real cost = 0;
  Real grad_norm = 0;
  Real param_estimate = 0;  // first parameter component, NaN if none
};

struct MinimizeResult {
  Vector theta_hat;
  StopReason reason = StopReason::converged;
  std::vector<TraceRow> trace;
  Real final_cost = 0;
  Real final_grad_norm = 0;
  int iters = 0;
  long cost_evals = 0;
};

/// Called once per accepted iterate (including the starting point).
using IterObserver =
    std::function<void(int iter, Real cost, Real grad_norm, const Vector& theta)>;

/// What the optimizer minimizes. misfit is the plain J' (the noise scale
/// is profiled out and estimated once at the optimum). profiled_likelihood
/// substitutes the closed-form per-channel sigma into the full negative
/// log-likelihood on every evaluation; by the envelope property its
/// gradient at the substituted sigma is the fixed-sigma adjoint gradient,
/// and both objectives share their minimizers over Theta.
enum class ObjectiveKind { misfit, profiled_likelihood };

/// Minimizes J'(Theta) subject to 0 < Theta_i < 1 via the logit change of
/// variables. Components listed in free_indices are optimized; the rest
/// stay exactly at their guess values (empty list = all free). Every
/// iterate satisfies the box constraint by construction. Throws
/// LineSearchFailureError when no Armijo step can be found even after a
/// steepest-descent restart.
MinimizeResult minimize(const Model& model, const Vector& theta_guess,
                        const ObservationSeries& obs, const TimeGrid& grid,
                        const ObservationOperator& op,
                        const LbfgsConfig& cfg = {},
                        const std::vector<Index>& free_indices = {},
                        const IterObserver& observer = nullptr,
                        ObjectiveKind objective = ObjectiveKind::misfit);

}  // namespace vda
