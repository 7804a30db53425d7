#pragma once

#include <cmath>
#include <limits>

#include "vda/errors.hpp"
#include "vda/types.hpp"

namespace vda {

/// Componentwise box constraints on the raw state, lower[i] < upper[i].
struct Bounds {
  Vector lower;
  Vector upper;

  Bounds() = default;
  Bounds(Vector lo, Vector up);

  /// Uniform (lo, up) box of dimension n.
  static Bounds uniform(Index n, Real lo, Real up);

  Index size() const { return lower.size(); }
};

/// Initial guesses sitting exactly on 0 or 1 are nudged into the open
/// interval before the logit transform.
inline constexpr Real kLogitClamp = 1e-12;

/// Filled by to_psi when inputs had to be clamped into (0,1).
struct ClampReport {
  Index count = 0;
  bool clamped() const { return count > 0; }
};

/// theta[i] = (x[i] - lower[i]) / (upper[i] - lower[i]). Requires x strictly
/// inside the box.
Vector normalize(const Vector& x, const Bounds& b);

/// Inverse of normalize. Requires theta strictly inside (0,1).
Vector denormalize(const Vector& theta, const Bounds& b);

/// Logit transform, psi[i] = log(theta[i]) - log(1 - theta[i]).
/// Inputs outside [kLogitClamp, 1 - kLogitClamp] are clamped and counted
/// in the optional report.
template <typename Derived>
Vector to_psi(const Eigen::MatrixBase<Derived>& theta,
              ClampReport* report = nullptr) {
  Vector psi(theta.size());
  Index clamped = 0;
  for (Index i = 0; i < theta.size(); ++i) {
    Real t = theta(i);
    if (t < kLogitClamp) {
      t = kLogitClamp;
      ++clamped;
    } else if (t > Real(1) - kLogitClamp) {
      t = Real(1) - kLogitClamp;
      ++clamped;
    }
    psi(i) = std::log(t) - std::log1p(-t);
  }
  if (report != nullptr) report->count = clamped;
  return psi;
}

/// Logistic inverse, theta[i] = 1 / (1 + exp(-psi[i])). The output is kept
/// strictly inside (0,1) even where the exponential under/overflows.
template <typename Derived>
Vector from_psi(const Eigen::MatrixBase<Derived>& psi) {
  const Real lo = std::numeric_limits<Real>::min();
  const Real hi = Real(1) - std::numeric_limits<Real>::epsilon() / Real(2);
  return (Real(1) / (Real(1) + (-psi.array()).exp())).min(hi).max(lo).matrix();
}

/// Chain rule for the logit transform: dJ/dpsi = theta (1 - theta) dJ/dtheta.
template <typename DerivedT, typename DerivedG>
Vector grad_theta_to_psi(const Eigen::MatrixBase<DerivedT>& theta,
                         const Eigen::MatrixBase<DerivedG>& grad_theta) {
  return (theta.array() * (Real(1) - theta.array()) * grad_theta.array())
      .matrix();
}

}  // namespace vda
