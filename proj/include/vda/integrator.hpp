#pragma once

#include <vector>

#include "vda/errors.hpp"
#include "vda/model.hpp"
#include "vda/types.hpp"

namespace vda {

/// Uniform explicit-Euler grid: steps k = 0..n_steps at times k*dt.
struct TimeGrid {
  Real dt = 0.1;
  Index n_steps = 0;

  TimeGrid() = default;
  TimeGrid(Real dt_, Index n_steps_);

  Real t_final() const { return dt * static_cast<Real>(n_steps); }
  Real time(Index k) const { return dt * static_cast<Real>(k); }

  /// Grid whose final time is the smallest multiple of dt covering t
  /// (within rounding slop).
  static TimeGrid covering(Real dt, Real t);

  /// Step index for time t; throws TimeOutOfRangeError unless t is a grid
  /// multiple within 0..n_steps. No interpolation, ever.
  Index step_of(Real t) const;
};

/// Read access to the forward states theta_k, k = 0..n_steps. Implemented
/// by fully stored trajectories and by checkpointed replays; the backward
/// sweeps only ever hold one served state at a time.
class StateSource {
 public:
  virtual ~StateSource() = default;
  virtual const TimeGrid& grid() const = 0;
  virtual const Vector& state(Index k) const = 0;
  Index n_steps() const { return grid().n_steps; }
};

/// Fully stored forward trajectory. states[k+1] is bit-exactly one Euler
/// step from states[k]; the parameter block is constant across all k.
class Trajectory : public StateSource {
 public:
  Trajectory() = default;
  Trajectory(TimeGrid grid, std::vector<Vector> states)
      : grid_(grid), states_(std::move(states)) {}

  const TimeGrid& grid() const override { return grid_; }
  const Vector& state(Index k) const override { return states_.at(static_cast<std::size_t>(k)); }
  const std::vector<Vector>& states() const { return states_; }

 private:
  TimeGrid grid_;
  std::vector<Vector> states_;
};

/// theta + dt * F(theta). Throws NonFiniteStateError on NaN/Inf output.
Vector euler_step(const Model& model, const Vector& theta, Real dt);

/// In-place step using a caller-provided rhs scratch buffer.
void euler_step_inplace(const Model& model, Vector& theta, Real dt,
                        Vector& rhs_buf);

/// Integrates theta0 over the grid with full storage.
Trajectory integrate(const Model& model, const Vector& theta0,
                     const TimeGrid& grid);

/// Memory/recompute trade-off for backward sweeps: stores every stride-th
/// state and replays the segment containing a requested step from the
/// nearest stored checkpoint. Served states are bit-identical to full
/// storage because the Euler recurrence is deterministic.
class CheckpointedTrajectory : public StateSource {
 public:
  CheckpointedTrajectory(const Model& model, const Vector& theta0,
                         const TimeGrid& grid, Index stride);

  const TimeGrid& grid() const override { return grid_; }
  const Vector& state(Index k) const override;

  Index stride() const { return stride_; }
  Index stored_states() const {
    return static_cast<Index>(checkpoints_.size());
  }

 private:
  const Model& model_;
  TimeGrid grid_;
  Index stride_;
  std::vector<Vector> checkpoints_;  // checkpoints_[j] = state(j * stride)

  // Replay cache for the segment [segment_start_, segment_start_ + len).
  mutable std::vector<Vector> segment_;
  mutable Index segment_start_ = -1;
  void replay_segment(Index seg) const;
};

}  // namespace vda
