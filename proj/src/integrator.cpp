#include "vda/integrator.hpp"

#include <cmath>
#include <sstream>

namespace vda {

namespace {

constexpr Real kGridSlop = 1e-9;

[[noreturn]] void throw_non_finite(Index step) {
  std::ostringstream os;
  os << "non-finite state after step " << step;
  throw NonFiniteStateError(os.str(), step);
}

}  // namespace

TimeGrid::TimeGrid(Real dt_, Index n_steps_) : dt(dt_), n_steps(n_steps_) {
  if (!(dt > Real(0))) throw Error("TimeGrid: dt must be positive");
  if (n_steps < 0) throw Error("TimeGrid: negative step count");
}

TimeGrid TimeGrid::covering(Real dt, Real t) {
  if (!(dt > Real(0))) throw Error("TimeGrid: dt must be positive");
  if (t < Real(0)) throw TimeOutOfRangeError("TimeGrid: negative time");
  const auto n = static_cast<Index>(std::ceil(t / dt - kGridSlop));
  return TimeGrid(dt, n < 0 ? 0 : n);
}

Index TimeGrid::step_of(Real t) const {
  const Real ratio = t / dt;
  const auto k = static_cast<Index>(std::llround(ratio));
  const Real tol = kGridSlop * std::max(Real(1), std::abs(t));
  if (std::abs(static_cast<Real>(k) * dt - t) > tol) {
    std::ostringstream os;
    os << "time " << t << " is not a multiple of dt = " << dt;
    throw TimeOutOfRangeError(os.str());
  }
  if (k < 0 || k > n_steps) {
    std::ostringstream os;
    os << "time " << t << " (step " << k << ") outside grid of " << n_steps
       << " steps";
    throw TimeOutOfRangeError(os.str());
  }
  return k;
}

Vector euler_step(const Model& model, const Vector& theta, Real dt) {
  if (!(dt > Real(0))) throw Error("euler_step: dt must be positive");
  Vector out = theta;
  Vector rhs_buf(model.size());
  euler_step_inplace(model, out, dt, rhs_buf);
  return out;
}

void euler_step_inplace(const Model& model, Vector& theta, Real dt,
                        Vector& rhs_buf) {
  model.rhs(theta, rhs_buf);
  theta.noalias() += dt * rhs_buf;
}

Trajectory integrate(const Model& model, const Vector& theta0,
                     const TimeGrid& grid) {
  if (theta0.size() != model.size()) {
    throw Error("integrate: state dimension mismatch");
  }
  std::vector<Vector> states;
  states.reserve(static_cast<std::size_t>(grid.n_steps) + 1);
  states.push_back(theta0);
  Vector rhs_buf(model.size());
  Vector current = theta0;
  for (Index k = 0; k < grid.n_steps; ++k) {
    euler_step_inplace(model, current, grid.dt, rhs_buf);
    if (!current.allFinite()) throw_non_finite(k + 1);
    states.push_back(current);
  }
  return Trajectory(grid, std::move(states));
}

CheckpointedTrajectory::CheckpointedTrajectory(const Model& model,
                                               const Vector& theta0,
                                               const TimeGrid& grid,
                                               Index stride)
    : model_(model), grid_(grid), stride_(stride) {
  if (stride_ < 1) throw Error("checkpointed replay: stride must be >= 1");
  if (theta0.size() != model.size()) {
    throw Error("checkpointed replay: state dimension mismatch");
  }
  checkpoints_.reserve(static_cast<std::size_t>(grid.n_steps / stride_) + 1);
  checkpoints_.push_back(theta0);
  Vector rhs_buf(model.size());
  Vector current = theta0;
  for (Index k = 0; k < grid.n_steps; ++k) {
    euler_step_inplace(model_, current, grid_.dt, rhs_buf);
    if (!current.allFinite()) throw_non_finite(k + 1);
    if ((k + 1) % stride_ == 0) checkpoints_.push_back(current);
  }
}

void CheckpointedTrajectory::replay_segment(Index seg) const {
  const Index start = seg * stride_;
  const Index len = std::min(stride_, grid_.n_steps - start);
  segment_.assign(1, checkpoints_.at(static_cast<std::size_t>(seg)));
  segment_.reserve(static_cast<std::size_t>(len) + 1);
  Vector rhs_buf(model_.size());
  Vector current = segment_.front();
  for (Index j = 0; j < len; ++j) {
    euler_step_inplace(model_, current, grid_.dt, rhs_buf);
    segment_.push_back(current);
  }
  segment_start_ = start;
}

const Vector& CheckpointedTrajectory::state(Index k) const {
  if (k < 0 || k > grid_.n_steps) {
    throw Error("checkpointed replay: step index out of range");
  }
  if (k % stride_ == 0) {
    return checkpoints_[static_cast<std::size_t>(k / stride_)];
  }
  const Index seg = k / stride_;
  if (segment_start_ != seg * stride_ ||
      k - segment_start_ >= static_cast<Index>(segment_.size())) {
    replay_segment(seg);
  }
  return segment_[static_cast<std::size_t>(k - segment_start_)];
}

}  // namespace vda
