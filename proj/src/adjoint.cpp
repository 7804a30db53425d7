#include "vda/adjoint.hpp"

#include <algorithm>
#include <numbers>

#include "vda/errors.hpp"
#include "vda/transforms.hpp"

namespace vda {

namespace {

// Steps carrying an observation, as flags over 0..n_steps plus the column
// index into the series.
struct ObsSchedule {
  std::vector<Index> column_of_step;  // -1 when no observation at that step

  ObsSchedule(const ObservationSeries& obs, const TimeGrid& grid) {
    column_of_step.assign(static_cast<std::size_t>(grid.n_steps) + 1, -1);
    const std::vector<Index> steps = observation_steps(obs, grid);
    for (std::size_t s = 0; s < steps.size(); ++s) {
      column_of_step[static_cast<std::size_t>(steps[s])] =
          static_cast<Index>(s);
    }
  }

  Index column(Index step) const {
    return column_of_step[static_cast<std::size_t>(step)];
  }
};

}  // namespace

GradientResult gradient(const Model& model, const StateSource& traj,
                        const ObservationSeries& obs,
                        const ObservationOperator& op, CostKind kind,
                        std::vector<Vector>* lambda_out) {
  const TimeGrid& grid = traj.grid();
  const Index n = model.size();
  const ObsSchedule schedule(obs, grid);
  const Vector* sigma = kind == CostKind::full ? &obs.channel_sigma : nullptr;

  if (lambda_out != nullptr) {
    lambda_out->assign(static_cast<std::size_t>(grid.n_steps) + 1,
                       Vector::Zero(n));
  }

  Real cost = 0;
  Vector lambda = Vector::Zero(n);
  Vector vjp_buf(n);
  Vector predicted(op.obs_dim());
  for (Index k = grid.n_steps; k >= 0; --k) {
    if (k < grid.n_steps) {
      // lambda_k = (I + dt dF/dtheta|_k)^T lambda_{k+1}
      model.vjp(traj.state(k), lambda, vjp_buf);
      lambda.noalias() += grid.dt * vjp_buf;
    }
    const Index col = schedule.column(k);
    if (col >= 0) {
      const Vector& theta_k = traj.state(k);
      lambda += misfit_forcing(theta_k, obs.values.col(col), op, kind, sigma);
      op.apply(theta_k, predicted);
      Vector residual = obs.values.col(col) - predicted;
      if (kind == CostKind::full) {
        cost += Real(0.5) * (residual.array() / sigma->array()).square().sum();
      } else {
        cost += Real(0.5) * residual.squaredNorm();
      }
    }
    if (lambda_out != nullptr) {
      (*lambda_out)[static_cast<std::size_t>(k)] = lambda;
    }
  }
  if (kind == CostKind::full) {
    cost += static_cast<Real>(obs.count()) * Real(0.5) *
            (Real(2) * std::numbers::pi_v<Real> *
             obs.channel_sigma.array().square())
                .log()
                .sum();
  }
  if (!lambda.allFinite()) {
    throw NonFiniteAdjointError("gradient: non-finite adjoint state");
  }

  GradientResult result;
  result.cost = cost;
  result.grad_theta = lambda;
  result.grad_psi = grad_theta_to_psi(traj.state(0), lambda);
  return result;
}

GradientResult gradient(const Model& model, const Vector& theta0,
                        const ObservationSeries& obs, const TimeGrid& grid,
                        const ObservationOperator& op, CostKind kind,
                        std::vector<Vector>* lambda_out) {
  const Trajectory traj = integrate(model, theta0, grid);
  return gradient(model, traj, obs, op, kind, lambda_out);
}

Trajectory tlm_sweep(const Model& model, const StateSource& around,
                     const Vector& gamma) {
  const TimeGrid& grid = around.grid();
  const Index n = model.size();
  if (gamma.size() != n) throw Error("tlm_sweep: probe dimension mismatch");

  std::vector<Vector> states;
  states.reserve(static_cast<std::size_t>(grid.n_steps) + 1);
  states.push_back(gamma);
  Vector xi = gamma;
  Vector jvp_buf(n);
  for (Index k = 0; k < grid.n_steps; ++k) {
    model.jvp(around.state(k), xi, jvp_buf);
    xi.noalias() += grid.dt * jvp_buf;
    if (!xi.allFinite()) {
      throw NonFiniteStateError("tlm_sweep: non-finite tangent state", k + 1);
    }
    states.push_back(xi);
  }
  return Trajectory(grid, std::move(states));
}

HvpOperator::HvpOperator(const Model& model, const ObservationOperator& op,
                         const ObservationSeries& obs, Trajectory theta_traj,
                         std::vector<Vector> lambda_traj)
    : model_(model),
      op_(op),
      obs_(obs),
      theta_traj_(std::move(theta_traj)),
      lambda_traj_(std::move(lambda_traj)),
      obs_steps_(observation_steps(obs_, theta_traj_.grid())) {
  if (lambda_traj_.size() !=
      static_cast<std::size_t>(theta_traj_.n_steps()) + 1) {
    throw MissingLambdaError(
        "HvpOperator: multiplier series does not match the trajectory");
  }
}

HvpOperator HvpOperator::prepare(const Model& model, const Vector& theta_hat,
                                 const ObservationSeries& obs,
                                 const TimeGrid& grid,
                                 const ObservationOperator& op) {
  Trajectory traj = integrate(model, theta_hat, grid);
  std::vector<Vector> lambda;
  const GradientResult g =
      gradient(model, traj, obs, op, CostKind::misfit, &lambda);
  HvpOperator out(model, op, obs, std::move(traj), std::move(lambda));
  out.cost_at_hat_ = g.cost;
  out.grad_norm_at_hat_ = g.grad_theta.lpNorm<Eigen::Infinity>();
  return out;
}

Vector HvpOperator::apply(const Vector& gamma) const {
  const TimeGrid& grid = theta_traj_.grid();
  const Index n = size();
  if (gamma.size() != n) throw Error("hvp: probe dimension mismatch");

  const Trajectory xi = tlm_sweep(model_, theta_traj_, gamma);
  const ObsSchedule schedule(obs_, grid);

  // Differentiate the backward gradient recursion in the direction gamma:
  // the vjp step contributes its own transpose on zeta plus the
  // second-order term against lambda_hat, and each observation impulse
  // contributes the Gauss-Newton forcing (d2J'/dtheta2) xi.
  Vector zeta = Vector::Zero(n);
  Vector buf(n);
  Vector gn(n);
  for (Index k = grid.n_steps; k >= 0; --k) {
    if (k < grid.n_steps) {
      model_.vjp(theta_traj_.state(k), zeta, buf);
      zeta.noalias() += grid.dt * buf;
      model_.soa_term(theta_traj_.state(k),
                      lambda_traj_[static_cast<std::size_t>(k) + 1],
                      xi.state(k), buf);
      zeta.noalias() += grid.dt * buf;
    }
    if (schedule.column(k) >= 0) {
      op_.gauss_newton(theta_traj_.state(k), xi.state(k), gn);
      zeta += gn;
    }
  }
  if (!zeta.allFinite()) {
    throw NonFiniteAdjointError("hvp: non-finite second-order adjoint");
  }
  return zeta;
}

Vector hvp(const Model& model, const Vector& theta_hat,
           const ObservationSeries& obs, const TimeGrid& grid,
           const ObservationOperator& op, const Vector& gamma) {
  return HvpOperator::prepare(model, theta_hat, obs, grid, op).apply(gamma);
}

}  // namespace vda
