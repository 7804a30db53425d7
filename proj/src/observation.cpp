#include "vda/observation.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "vda/errors.hpp"
#include "vda/rng.hpp"

namespace vda {

IdentityObservation::IdentityObservation(Index k, Index state_dim)
    : k_(k), n_(state_dim) {
  if (k_ < 0 || k_ > n_) throw Error("IdentityObservation: bad dimensions");
}

void IdentityObservation::apply(ConstVectorRef theta, VectorRef out) const {
  out = theta.head(k_);
}

void IdentityObservation::tangent(ConstVectorRef, ConstVectorRef v,
                                  VectorRef out) const {
  out = v.head(k_);
}

void IdentityObservation::adjoint(ConstVectorRef, ConstVectorRef w,
                                  VectorRef out) const {
  out.head(k_) = w;
  out.tail(n_ - k_).setZero();
}

void IdentityObservation::gauss_newton(ConstVectorRef, ConstVectorRef xi,
                                       VectorRef out) const {
  out.head(k_) = xi.head(k_);
  out.tail(n_ - k_).setZero();
}

LinearObservation::LinearObservation(Matrix b) : b_(std::move(b)) {
  if (b_.size() == 0) throw Error("LinearObservation: empty matrix");
}

void LinearObservation::apply(ConstVectorRef theta, VectorRef out) const {
  out.noalias() = b_ * theta;
}

void LinearObservation::tangent(ConstVectorRef, ConstVectorRef v,
                                VectorRef out) const {
  out.noalias() = b_ * v;
}

void LinearObservation::adjoint(ConstVectorRef, ConstVectorRef w,
                                VectorRef out) const {
  out.noalias() = b_.transpose() * w;
}

void LinearObservation::gauss_newton(ConstVectorRef, ConstVectorRef xi,
                                     VectorRef out) const {
  out.noalias() = b_.transpose() * (b_ * xi);
}

void ObservationSeries::validate() const {
  if (static_cast<Index>(times.size()) != values.cols()) {
    throw Error("observations: times/values count mismatch");
  }
  if (channel_sigma.size() != values.rows()) {
    throw Error("observations: channel_sigma dimension mismatch");
  }
  for (std::size_t s = 0; s < times.size(); ++s) {
    if (!(times[s] > Real(0))) {
      throw Error("observations: times must be strictly positive");
    }
    if (s > 0 && !(times[s] > times[s - 1])) {
      throw Error("observations: times must be strictly increasing");
    }
  }
  if (!values.allFinite()) throw Error("observations: non-finite values");
}

std::vector<Real> observation_times(Real t_min, Real t_max, Real dt_obs) {
  if (!(dt_obs > Real(0))) throw Error("observation_times: dt_obs must be positive");
  if (!(t_min > Real(0)) || t_min > t_max + 1e-12) {
    throw Error("observation_times: need 0 < t_min <= t_max");
  }
  std::vector<Real> times;
  const auto count =
      static_cast<Index>(std::floor((t_max - t_min) / dt_obs + 1e-9)) + 1;
  times.reserve(static_cast<std::size_t>(count));
  for (Index s = 0; s < count; ++s) {
    times.push_back(t_min + static_cast<Real>(s) * dt_obs);
  }
  return times;
}

std::vector<Index> observation_steps(const ObservationSeries& obs,
                                     const TimeGrid& grid) {
  std::vector<Index> steps;
  steps.reserve(obs.times.size());
  for (Real t : obs.times) {
    if (t > grid.t_final() + 1e-9 * std::max(Real(1), t)) {
      std::ostringstream os;
      os << "observation at t = " << t << " beyond trajectory end "
         << grid.t_final();
      throw MissingSnapshotError(os.str());
    }
    steps.push_back(grid.step_of(t));
  }
  return steps;
}

ObservationSeries make_synthetic(const StateSource& traj,
                                 const ObservationOperator& op,
                                 const std::vector<Real>& times, Real sigma,
                                 std::uint64_t seed) {
  if (sigma < Real(0)) throw Error("make_synthetic: sigma must be >= 0");
  ObservationSeries obs;
  obs.times = times;
  obs.values.resize(op.obs_dim(), static_cast<Index>(times.size()));
  obs.channel_sigma = Vector::Constant(op.obs_dim(), sigma);
  // Resolve all step indices first so a bad time cannot leave a
  // half-filled series.
  std::vector<Index> steps;
  steps.reserve(times.size());
  for (Real t : times) {
    try {
      steps.push_back(traj.grid().step_of(t));
    } catch (const TimeOutOfRangeError&) {
      std::ostringstream os;
      os << "make_synthetic: time " << t << " not on the trajectory grid";
      throw TimeOutOfRangeError(os.str());
    }
  }
  GaussianStream noise(seed);
  Vector clean(op.obs_dim());
  for (std::size_t s = 0; s < steps.size(); ++s) {
    op.apply(traj.state(steps[s]), clean);
    if (sigma > Real(0)) {
      obs.values.col(static_cast<Index>(s)) =
          clean + sigma * noise.draw(op.obs_dim());
    } else {
      obs.values.col(static_cast<Index>(s)) = clean;
    }
  }
  obs.validate();
  return obs;
}

namespace {

// Shared residual loop for the cost variants.
template <typename PerSnapshot>
CostBreakdown accumulate_cost(const StateSource& traj,
                              const ObservationSeries& obs,
                              const ObservationOperator& op,
                              PerSnapshot per_snapshot) {
  const std::vector<Index> steps = observation_steps(obs, traj.grid());
  CostBreakdown out;
  out.per_time.reserve(steps.size());
  Vector predicted(op.obs_dim());
  for (std::size_t s = 0; s < steps.size(); ++s) {
    op.apply(traj.state(steps[s]), predicted);
    const Real term =
        per_snapshot(obs.values.col(static_cast<Index>(s)) - predicted);
    out.per_time.push_back(term);
    out.total += term;
  }
  return out;
}

}  // namespace

CostBreakdown cost_full(const StateSource& traj, const ObservationSeries& obs,
                        const ObservationOperator& op) {
  const Vector& sig = obs.channel_sigma;
  for (Index k = 0; k < sig.size(); ++k) {
    if (!(sig(k) > Real(0))) {
      throw Error("cost_full: channel_sigma must be positive");
    }
  }
  const Real log_term =
      Real(0.5) *
      (Real(2) * std::numbers::pi_v<Real> * sig.array().square()).log().sum();
  CostBreakdown out = accumulate_cost(
      traj, obs, op, [&](const Vector& residual) {
        return log_term +
               Real(0.5) * (residual.array() / sig.array()).square().sum();
      });
  out.includes_log_term = true;
  return out;
}

CostBreakdown cost_misfit(const StateSource& traj, const ObservationSeries& obs,
                          const ObservationOperator& op) {
  return accumulate_cost(traj, obs, op, [](const Vector& residual) {
    return Real(0.5) * residual.squaredNorm();
  });
}

Real sigma_hat(const StateSource& traj, const ObservationSeries& obs,
               const ObservationOperator& op) {
  const Index n = obs.count();
  const Index k = obs.dim();
  if (n * k <= 0) throw EmptyObservationsError("sigma_hat: no observations");
  const CostBreakdown misfit = cost_misfit(traj, obs, op);
  return std::sqrt(Real(2) * misfit.total / static_cast<Real>(n * k));
}

Vector sigma_hat_per_channel(const StateSource& traj,
                             const ObservationSeries& obs,
                             const ObservationOperator& op) {
  const Index n = obs.count();
  if (n <= 0 || obs.dim() <= 0) {
    throw EmptyObservationsError("sigma_hat: no observations");
  }
  const std::vector<Index> steps = observation_steps(obs, traj.grid());
  Vector sq = Vector::Zero(obs.dim());
  Vector predicted(op.obs_dim());
  for (std::size_t s = 0; s < steps.size(); ++s) {
    op.apply(traj.state(steps[s]), predicted);
    sq += (obs.values.col(static_cast<Index>(s)) - predicted)
              .array()
              .square()
              .matrix();
  }
  return (sq / static_cast<Real>(n)).cwiseSqrt();
}

Vector misfit_forcing(const Vector& theta_at_t, const Vector& obs_at_t,
                      const ObservationOperator& op, CostKind kind,
                      const Vector* channel_sigma) {
  Vector residual = obs_at_t - op.apply(theta_at_t);
  if (kind == CostKind::full) {
    if (channel_sigma == nullptr || channel_sigma->size() != residual.size()) {
      throw Error("misfit_forcing: full cost needs per-channel sigma");
    }
    residual.array() /= channel_sigma->array().square();
  }
  Vector out(op.state_dim());
  op.adjoint(theta_at_t, residual, out);
  return -out;
}

}  // namespace vda
