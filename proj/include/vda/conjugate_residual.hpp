#pragma once

#include <functional>
#include <vector>

#include "vda/types.hpp"

namespace vda {

/// Settings for the matrix-free conjugate residual solve. max_iters < 0
/// means min(10 N, max_iters_ceiling).
struct CrConfig {
  Real rel_tol = 1e-8;
  Index max_iters = -1;
  Index max_iters_ceiling = 5000;

  Index effective_max_iters(Index n) const {
    if (max_iters >= 0) return max_iters;
    return std::min(Index(10) * n, max_iters_ceiling);
  }
};

enum class CrStatus { converged, max_iters };

struct CrResult {
  Vector x;
  Real residual_norm = 0;
  Index iters = 0;
  CrStatus status = CrStatus::converged;
  std::vector<Real> residual_history;
};

/// Conjugate residual iteration for A x = q with a symmetric, possibly
/// indefinite operator. Minimizes |q - A x| over the Krylov space, so the
/// residual norm never increases. Starts from x = 0, stops at
/// |q - A x| <= rel_tol |q| or at the iteration cap (returning the best
/// iterate, flagged max_iters). Throws BreakdownError when an inner
/// product the recurrences divide by vanishes.
CrResult conjugate_residual(const std::function<Vector(const Vector&)>& apply,
                            const Vector& q, const CrConfig& cfg = {});

}  // namespace vda
