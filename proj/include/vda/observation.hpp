#pragma once

#include <cstdint>
#include <vector>

#include "vda/integrator.hpp"
#include "vda/model.hpp"
#include "vda/types.hpp"

namespace vda {

/// Observation map y = h(theta) with its linearization. gauss_newton must
/// apply the exact second derivative of the per-snapshot misfit
/// (1/2)|d - h(theta)|^2 in the Gauss-Newton sense, h'^T h' xi; nonlinear
/// operators are expected to fold in their own curvature term.
class ObservationOperator {
 public:
  virtual ~ObservationOperator() = default;

  virtual Index obs_dim() const = 0;
  virtual Index state_dim() const = 0;

  virtual void apply(ConstVectorRef theta, VectorRef out) const = 0;
  virtual void tangent(ConstVectorRef theta, ConstVectorRef v,
                       VectorRef out) const = 0;
  virtual void adjoint(ConstVectorRef theta, ConstVectorRef w,
                       VectorRef out) const = 0;
  virtual void gauss_newton(ConstVectorRef theta, ConstVectorRef xi,
                            VectorRef out) const = 0;

  Vector apply(ConstVectorRef theta) const {
    Vector out(obs_dim());
    apply(theta, out);
    return out;
  }
};

/// h(theta) = first k components of theta. The exact observation model of
/// the phase-field testbed (k = number of grid cells, parameters hidden).
class IdentityObservation : public ObservationOperator {
 public:
  IdentityObservation(Index k, Index state_dim);

  using ObservationOperator::apply;

  Index obs_dim() const override { return k_; }
  Index state_dim() const override { return n_; }

  void apply(ConstVectorRef theta, VectorRef out) const override;
  void tangent(ConstVectorRef, ConstVectorRef v, VectorRef out) const override;
  void adjoint(ConstVectorRef, ConstVectorRef w, VectorRef out) const override;
  void gauss_newton(ConstVectorRef, ConstVectorRef xi,
                    VectorRef out) const override;

 private:
  Index k_;
  Index n_;
};

/// h(theta) = B theta for a fixed matrix B.
class LinearObservation : public ObservationOperator {
 public:
  explicit LinearObservation(Matrix b);

  using ObservationOperator::apply;

  Index obs_dim() const override { return b_.rows(); }
  Index state_dim() const override { return b_.cols(); }
  const Matrix& matrix() const { return b_; }

  void apply(ConstVectorRef theta, VectorRef out) const override;
  void tangent(ConstVectorRef, ConstVectorRef v, VectorRef out) const override;
  void adjoint(ConstVectorRef, ConstVectorRef w, VectorRef out) const override;
  void gauss_newton(ConstVectorRef, ConstVectorRef xi,
                    VectorRef out) const override;

 private:
  Matrix b_;
};

/// Noisy snapshots D(t_s) at strictly increasing times t_s > 0.
/// channel_sigma holds the per-channel noise scale (a constant vector when
/// the scale is shared).
struct ObservationSeries {
  std::vector<Real> times;
  Matrix values;        // obs_dim x count, column s = D(t_s)
  Vector channel_sigma;

  Index count() const { return static_cast<Index>(times.size()); }
  Index dim() const { return values.rows(); }

  /// Validates ordering, positivity of times and finiteness of values.
  void validate() const;
};

/// Equally spaced observation times t_min, t_min + dt_obs, ..., <= t_max.
std::vector<Real> observation_times(Real t_min, Real t_max, Real dt_obs);

/// Maps every observation time to its exact Euler step index
/// (round(t/dt), no interpolation). Throws TimeOutOfRangeError when a time
/// is off-grid, MissingSnapshotError when it lies beyond the grid.
std::vector<Index> observation_steps(const ObservationSeries& obs,
                                     const TimeGrid& grid);

/// Synthetic data: D(t_s) = h(theta(t_s)) + noise, noise iid N(0, sigma^2),
/// bit-reproducible from the seed (see GaussianStream).
ObservationSeries make_synthetic(const StateSource& traj,
                                 const ObservationOperator& op,
                                 const std::vector<Real>& times, Real sigma,
                                 std::uint64_t seed);

/// Cost value with its per-snapshot terms. includes_log_term distinguishes
/// the full negative log-posterior J from the plain misfit J'.
struct CostBreakdown {
  Real total = 0;
  std::vector<Real> per_time;
  bool includes_log_term = false;
};

/// J = sum_s sum_k [ log(2 pi sigma_k^2)/2 + (D_k - h_k)^2 / (2 sigma_k^2) ].
CostBreakdown cost_full(const StateSource& traj, const ObservationSeries& obs,
                        const ObservationOperator& op);

/// J' = (1/2) sum_s |D(t_s) - h(theta(t_s))|^2. Same minimizer as J for
/// fixed sigma.
CostBreakdown cost_misfit(const StateSource& traj, const ObservationSeries& obs,
                          const ObservationOperator& op);

/// Shared-scale residual estimate over all channels:
/// sigma_hat = sqrt( sum_s |D - h|^2 / (n K) ).
Real sigma_hat(const StateSource& traj, const ObservationSeries& obs,
               const ObservationOperator& op);

/// Per-channel variant, sigma_k = sqrt( sum_s (D_k - h_k)^2 / n ).
Vector sigma_hat_per_channel(const StateSource& traj,
                             const ObservationSeries& obs,
                             const ObservationOperator& op);

/// Weighting of the data misfit inside gradients and forcings: unit for J',
/// 1/sigma_k^2 for J.
enum class CostKind { misfit, full };

/// Gradient of the per-snapshot cost term with respect to theta(t_s):
/// -h'^T W (D - h(theta)), W = I (misfit) or diag(1/sigma_k^2) (full).
/// This is the additive impulse the backward adjoint sweep receives at the
/// observation step.
Vector misfit_forcing(const Vector& theta_at_t, const Vector& obs_at_t,
                      const ObservationOperator& op,
                      CostKind kind = CostKind::misfit,
                      const Vector* channel_sigma = nullptr);

}  // namespace vda
