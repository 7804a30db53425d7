#include "vda/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>

#include "vda/errors.hpp"
#include "vda/transforms.hpp"

namespace vda {

namespace {

struct Evaluation {
  Real cost = 0;
  Vector grad_psi_free;  // dJ'/dpsi restricted to the free components
};

// Objective in the reduced logit coordinates: fixed components pass
// through untouched so "frozen at truth" means exactly that.
class ReducedObjective {
 public:
  ReducedObjective(const Model& model, const ObservationSeries& obs,
                   const TimeGrid& grid, const ObservationOperator& op,
                   Vector theta_base, std::vector<Index> free,
                   ObjectiveKind objective)
      : model_(model),
        obs_(obs),
        grid_(grid),
        op_(op),
        theta_base_(std::move(theta_base)),
        free_(std::move(free)),
        objective_(objective) {}

  Index dim() const { return static_cast<Index>(free_.size()); }

  Vector theta_of(const Vector& psi_free) const {
    Vector theta = theta_base_;
    const Vector theta_free = from_psi(psi_free);
    for (Index j = 0; j < dim(); ++j) theta(free_[j]) = theta_free(j);
    return theta;
  }

  Evaluation evaluate(const Vector& psi_free, Vector& theta_out) const {
    theta_out = theta_of(psi_free);
    Evaluation ev;
    Vector grad_psi;
    if (objective_ == ObjectiveKind::misfit) {
      const GradientResult g =
          gradient(model_, theta_out, obs_, grid_, op_, CostKind::misfit);
      ev.cost = g.cost;
      grad_psi = g.grad_psi;
    } else {
      // Substitute the closed-form sigma for the current residuals, then
      // take the fixed-sigma gradient of the full cost (the envelope
      // derivative of the profiled likelihood).
      const Trajectory traj = integrate(model_, theta_out, grid_);
      ObservationSeries profiled = obs_;
      // Floor keeps the log term finite when a channel fits exactly.
      profiled.channel_sigma =
          sigma_hat_per_channel(traj, obs_, op_).cwiseMax(Real(1e-12));
      const GradientResult g =
          gradient(model_, traj, profiled, op_, CostKind::full);
      ev.cost = g.cost;
      grad_psi = g.grad_psi;
    }
    if (!std::isfinite(ev.cost)) {
      throw NonFiniteCostError("minimize: non-finite cost");
    }
    ev.grad_psi_free.resize(dim());
    for (Index j = 0; j < dim(); ++j) {
      ev.grad_psi_free(j) = grad_psi(free_[j]);
    }
    return ev;
  }

  Real cost_only(const Vector& psi_free) const {
    const Vector theta = theta_of(psi_free);
    const Trajectory traj = integrate(model_, theta, grid_);
    Real cost = 0;
    if (objective_ == ObjectiveKind::misfit) {
      cost = cost_misfit(traj, obs_, op_).total;
    } else {
      ObservationSeries profiled = obs_;
      profiled.channel_sigma =
          sigma_hat_per_channel(traj, obs_, op_).cwiseMax(Real(1e-12));
      cost = cost_full(traj, profiled, op_).total;
    }
    if (!std::isfinite(cost)) {
      throw NonFiniteCostError("minimize: non-finite cost");
    }
    return cost;
  }

 private:
  const Model& model_;
  const ObservationSeries& obs_;
  const TimeGrid& grid_;
  const ObservationOperator& op_;
  Vector theta_base_;
  std::vector<Index> free_;
  ObjectiveKind objective_;
};

struct CurvaturePair {
  Vector s;
  Vector y;
  Real rho;
};

// Standard two-loop recursion with gamma = s.y / y.y scaling of the seed.
// With no curvature pairs yet the direction is normalized steepest descent
// (unit first trial step): a raw -g step can be wildly long and still pass
// Armijo on the strength of unrelated components, saturating the logit
// coordinates it overshoots.
Vector lbfgs_direction(const std::deque<CurvaturePair>& history,
                       const Vector& grad) {
  Vector q = -grad;
  if (history.empty()) {
    const Real norm = q.norm();
    if (norm > Real(1)) q /= norm;
    return q;
  }
  std::vector<Real> alpha(history.size());
  for (std::size_t i = history.size(); i-- > 0;) {
    alpha[i] = history[i].rho * history[i].s.dot(q);
    q -= alpha[i] * history[i].y;
  }
  const CurvaturePair& last = history.back();
  q *= last.s.dot(last.y) / last.y.squaredNorm();
  for (std::size_t i = 0; i < history.size(); ++i) {
    const Real beta = history[i].rho * history[i].y.dot(q);
    q += (alpha[i] - beta) * history[i].s;
  }
  return q;
}

}  // namespace

MinimizeResult minimize(const Model& model, const Vector& theta_guess,
                        const ObservationSeries& obs, const TimeGrid& grid,
                        const ObservationOperator& op, const LbfgsConfig& cfg,
                        const std::vector<Index>& free_indices,
                        const IterObserver& observer, ObjectiveKind objective) {
  if (theta_guess.size() != model.size()) {
    throw Error("minimize: guess dimension mismatch");
  }
  std::vector<Index> free = free_indices;
  if (free.empty()) {
    free.resize(static_cast<std::size_t>(model.size()));
    for (Index i = 0; i < model.size(); ++i) free[static_cast<std::size_t>(i)] = i;
  }

  const ReducedObjective reduced(model, obs, grid, op, theta_guess, free,
                                 objective);
  const Index dim = reduced.dim();
  const Index first_param = model.state_size();

  // Free components enter through the logit transform (clamped into the
  // open interval if the guess sits on a bound).
  Vector guess_free(dim);
  for (Index j = 0; j < dim; ++j) guess_free(j) = theta_guess(free[static_cast<std::size_t>(j)]);
  Vector psi = to_psi(guess_free);

  MinimizeResult result;
  Vector theta(model.size());
  Evaluation ev = reduced.evaluate(psi, theta);
  result.cost_evals = 1;

  std::deque<CurvaturePair> history;
  const auto grad_norm = [](const Vector& g) {
    return g.size() == 0 ? Real(0) : g.lpNorm<Eigen::Infinity>();
  };
  const auto threshold = [&](Real cost) {
    return cfg.relative_tol ? cfg.grad_tol * std::max(Real(1), std::abs(cost))
                            : cfg.grad_tol;
  };
  const auto record = [&](int iter) {
    TraceRow row;
    row.iter = iter;
    row.cost = ev.cost;
    row.grad_norm = grad_norm(ev.grad_psi_free);
    row.param_estimate = model.param_size() > 0
                             ? theta(first_param)
                             : std::numeric_limits<Real>::quiet_NaN();
    result.trace.push_back(row);
    if (observer) observer(iter, row.cost, row.grad_norm, theta);
  };

  record(0);
  int iter = 0;
  StopReason reason = StopReason::max_iters;
  if (grad_norm(ev.grad_psi_free) <= threshold(ev.cost)) {
    reason = StopReason::converged;
  } else {
    for (iter = 1; iter <= cfg.max_iters; ++iter) {
      Vector direction = lbfgs_direction(history, ev.grad_psi_free);
      Real slope = ev.grad_psi_free.dot(direction);
      if (!(slope < Real(0))) {
        // Not a descent direction; drop the memory and fall back.
        history.clear();
        direction = -ev.grad_psi_free;
        slope = -ev.grad_psi_free.squaredNorm();
      }

      // Armijo backtracking from alpha = 1, one steepest-descent restart
      // before giving up.
      bool accepted = false;
      for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
        if (attempt == 1) {
          if (history.empty()) break;
          history.clear();
          direction = -ev.grad_psi_free;
          slope = -ev.grad_psi_free.squaredNorm();
        }
        Real alpha = 1;
        for (int bt = 0; bt <= cfg.max_backtracks; ++bt) {
          const Vector candidate = psi + alpha * direction;
          const Real cost = reduced.cost_only(candidate);
          ++result.cost_evals;
          if (cost <= ev.cost + cfg.armijo_c1 * alpha * slope) {
            const Vector psi_prev = psi;
            const Vector grad_prev = ev.grad_psi_free;
            psi = candidate;
            ev = reduced.evaluate(psi, theta);
            ++result.cost_evals;
            CurvaturePair pair;
            pair.s = psi - psi_prev;
            pair.y = ev.grad_psi_free - grad_prev;
            const Real sy = pair.s.dot(pair.y);
            if (sy > Real(1e-10) * pair.s.norm() * pair.y.norm()) {
              pair.rho = Real(1) / sy;
              history.push_back(std::move(pair));
              if (static_cast<int>(history.size()) > cfg.memory) {
                history.pop_front();
              }
            }
            accepted = true;
            break;
          }
          alpha *= cfg.backtrack_factor;
        }
      }
      if (!accepted) {
        if (iter == 1) {
          throw LineSearchFailureError(
              "minimize: no Armijo step found after backtracking limit");
        }
        reason = StopReason::line_search_stalled;
        --iter;
        break;
      }

      record(iter);
      if (grad_norm(ev.grad_psi_free) <= threshold(ev.cost)) {
        reason = StopReason::converged;
        break;
      }
    }
    if (iter > cfg.max_iters) iter = cfg.max_iters;
  }

  result.theta_hat = theta;
  result.reason = reason;
  result.final_cost = ev.cost;
  result.final_grad_norm = grad_norm(ev.grad_psi_free);
  result.iters = iter;
  return result;
}

}  // namespace vda
