#include "vda/uncertainty.hpp"

#include <cmath>
#include <limits>

#include "vda/errors.hpp"

namespace vda {

UncertaintyResult uncertainty(const HvpOperator& hvp_op, Real sigma_hat_value,
                              Index component, const CrConfig& cr_cfg) {
  const Index n = hvp_op.size();
  if (component < 0 || component >= n) {
    throw Error("uncertainty: component index out of range");
  }
  Vector q = Vector::Zero(n);
  q(component) = 1;

  const CrResult solve = conjugate_residual(
      [&hvp_op](const Vector& v) { return hvp_op.apply(v); }, q, cr_cfg);

  UncertaintyResult out;
  out.component = component;
  out.r_hat = solve.x;
  out.diag_entry = solve.x(component);
  out.sigma_hat = sigma_hat_value;
  out.solver_status = solve.status;
  out.solver_residual = solve.residual_norm;
  out.solver_iters = solve.iters;
  out.grad_norm_at_hat = hvp_op.grad_norm_at_hat();
  out.valid = out.diag_entry > Real(0);
  out.std_dev = out.valid ? sigma_hat_value * std::sqrt(out.diag_entry)
                          : std::numeric_limits<Real>::quiet_NaN();
  return out;
}

UncertaintyResult uncertainty(const Model& model, const Vector& theta_hat,
                              const ObservationSeries& obs,
                              const TimeGrid& grid,
                              const ObservationOperator& op, Index component,
                              const CrConfig& cr_cfg) {
  const HvpOperator hvp_op = HvpOperator::prepare(model, theta_hat, obs, grid, op);
  const Real sig = sigma_hat(hvp_op.trajectory(), obs, op);
  return uncertainty(hvp_op, sig, component, cr_cfg);
}

std::vector<UncertaintyResult> multi_uncertainty(
    const Model& model, const Vector& theta_hat, const ObservationSeries& obs,
    const TimeGrid& grid, const ObservationOperator& op,
    const std::vector<Index>& components, const CrConfig& cr_cfg) {
  std::vector<UncertaintyResult> out;
  if (components.empty()) return out;
  const HvpOperator hvp_op = HvpOperator::prepare(model, theta_hat, obs, grid, op);
  const Real sig = sigma_hat(hvp_op.trajectory(), obs, op);
  out.reserve(components.size());
  for (Index component : components) {
    out.push_back(uncertainty(hvp_op, sig, component, cr_cfg));
  }
  return out;
}

}  // namespace vda
