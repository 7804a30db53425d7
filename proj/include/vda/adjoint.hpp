#pragma once

#include <optional>
#include <vector>

#include "vda/integrator.hpp"
#include "vda/model.hpp"
#include "vda/observation.hpp"
#include "vda/types.hpp"

namespace vda {

/// Cost and its gradient at Theta = theta(0), in both the constrained
/// (Theta) and logit (Psi) coordinates.
struct GradientResult {
  Real cost = 0;
  Vector grad_theta;
  Vector grad_psi;
};

/// Backward sweep of the discrete adjoint: the exact transpose of the
/// Euler forward map, with the misfit forcing injected as an additive
/// impulse at each observation step,
///
///   lambda_k = lambda_{k+1} + dt (dF/dtheta|_k)^T lambda_{k+1} + g_k,
///   lambda after the last step = 0,
///
/// so lambda_0 = dJ/dTheta exactly for the discrete cost. The cost is
/// evaluated on the same forward states.
///
/// lambda_out, when given, receives the full multiplier series
/// lambda_0..lambda_K (needed once per linearization point to drive
/// Hessian-vector products).
GradientResult gradient(const Model& model, const StateSource& traj,
                        const ObservationSeries& obs,
                        const ObservationOperator& op,
                        CostKind kind = CostKind::misfit,
                        std::vector<Vector>* lambda_out = nullptr);

/// Convenience overload that integrates theta0 over the grid first.
GradientResult gradient(const Model& model, const Vector& theta0,
                        const ObservationSeries& obs, const TimeGrid& grid,
                        const ObservationOperator& op,
                        CostKind kind = CostKind::misfit,
                        std::vector<Vector>* lambda_out = nullptr);

/// Tangent linear model: xi_{k+1} = xi_k + dt (dF/dtheta|_k) xi_k with
/// xi_0 = gamma, linearized around the given trajectory. The parameter
/// block of xi is constant in time.
Trajectory tlm_sweep(const Model& model, const StateSource& around,
                     const Vector& gamma);

/// Matrix-free application of H' = d2J'/dTheta2 at a linearization point
/// theta_hat: a forward tangent-linear sweep followed by a backward
/// second-order adjoint sweep (the derivative of the gradient recursion),
/// including the (d2F/dtheta2 . xi)^T lambda_hat term and the Gauss-Newton
/// misfit forcing at observation steps. apply(gamma) returns zeta_0 = H' gamma.
///
/// The multiplier series lambda_hat is captured once at construction and
/// reused across applications.
class HvpOperator {
 public:
  HvpOperator(const Model& model, const ObservationOperator& op,
              const ObservationSeries& obs, Trajectory theta_traj,
              std::vector<Vector> lambda_traj);

  /// Runs the forward pass and one adjoint sweep at theta_hat, then wires
  /// the operator. The reported gradient comes along for free and is kept
  /// as a convergence health check.
  static HvpOperator prepare(const Model& model, const Vector& theta_hat,
                             const ObservationSeries& obs,
                             const TimeGrid& grid,
                             const ObservationOperator& op);

  Vector apply(const Vector& gamma) const;
  Index size() const { return theta_traj_.state(0).size(); }

  const Trajectory& trajectory() const { return theta_traj_; }
  Real cost_at_hat() const { return cost_at_hat_; }
  Real grad_norm_at_hat() const { return grad_norm_at_hat_; }

 private:
  const Model& model_;
  const ObservationOperator& op_;
  ObservationSeries obs_;
  Trajectory theta_traj_;
  std::vector<Vector> lambda_traj_;  // lambda_k for k = 0..n_steps
  std::vector<Index> obs_steps_;
  Real cost_at_hat_ = 0;
  Real grad_norm_at_hat_ = 0;
};

/// One-shot Hessian-vector product; prefer HvpOperator when many products
/// share the same linearization point.
Vector hvp(const Model& model, const Vector& theta_hat,
           const ObservationSeries& obs, const TimeGrid& grid,
           const ObservationOperator& op, const Vector& gamma);

}  // namespace vda
