#pragma once

#include <vector>

#include "vda/adjoint.hpp"
#include "vda/conjugate_residual.hpp"
#include "vda/model.hpp"
#include "vda/observation.hpp"
#include "vda/types.hpp"

namespace vda {

/// Marginal uncertainty of one component of Theta from the inverse misfit
/// Hessian: solve H' r = e_l matrix-free, read off r_l = (H'^-1)_{l,l},
/// and scale by the residual noise estimate, std_dev = sigma_hat sqrt(r_l).
///
/// H' is the Hessian of the plain misfit J', so the covariance carries the
/// sigma_hat^2 factor exactly once -- it enters here and nowhere else.
///
/// A non-positive r_l means the local Gaussian picture broke down
/// (typically too little data); the result is flagged invalid rather than
/// raised as an error.
struct UncertaintyResult {
  Index component = -1;
  Vector r_hat;
  Real diag_entry = 0;  // r_hat[component] = (H'^-1)_{l,l}
  Real sigma_hat = 0;
  Real std_dev = 0;     // sigma_hat * sqrt(diag_entry) when valid
  bool valid = false;
  CrStatus solver_status = CrStatus::converged;
  Real solver_residual = 0;
  Index solver_iters = 0;
  Real grad_norm_at_hat = 0;  // health check: should be ~0 at an optimum
};

/// Full pipeline at a converged optimum theta_hat: one adjoint sweep to
/// capture the multipliers, then a conjugate residual solve against the
/// second-order adjoint operator.
UncertaintyResult uncertainty(const Model& model, const Vector& theta_hat,
                              const ObservationSeries& obs,
                              const TimeGrid& grid,
                              const ObservationOperator& op, Index component,
                              const CrConfig& cr_cfg = {});

/// Shares one prepared operator and noise estimate across solves.
UncertaintyResult uncertainty(const HvpOperator& hvp_op, Real sigma_hat_value,
                              Index component, const CrConfig& cr_cfg = {});

/// Independent solves, one per requested component (duplicates allowed).
std::vector<UncertaintyResult> multi_uncertainty(
    const Model& model, const Vector& theta_hat, const ObservationSeries& obs,
    const TimeGrid& grid, const ObservationOperator& op,
    const std::vector<Index>& components, const CrConfig& cr_cfg = {});

}  // namespace vda
