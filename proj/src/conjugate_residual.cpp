#include "vda/conjugate_residual.hpp"

#include <cmath>

#include "vda/errors.hpp"

namespace vda {

CrResult conjugate_residual(const std::function<Vector(const Vector&)>& apply,
                            const Vector& q, const CrConfig& cfg) {
  const Index n = q.size();
  const Real q_norm = q.norm();

  CrResult out;
  out.x = Vector::Zero(n);
  out.residual_norm = q_norm;
  out.residual_history.push_back(q_norm);
  if (q_norm == Real(0)) return out;

  const Real tol = cfg.rel_tol * q_norm;
  const Index max_iters = cfg.effective_max_iters(n);

  Vector r = q;            // residual for x = 0
  Vector ar = apply(r);
  Vector p = r;
  Vector ap = ar;
  Real r_ar = r.dot(ar);

  Vector best_x = out.x;
  Real best_norm = q_norm;

  for (Index it = 0; it < max_iters; ++it) {
    const Real ap_sq = ap.squaredNorm();
    if (!(std::abs(ap_sq) > Real(0)) || !std::isfinite(ap_sq)) {
      throw BreakdownError("conjugate residual: |A p| vanished");
    }
    const Real alpha = r_ar / ap_sq;
    if (!std::isfinite(alpha)) {
      throw BreakdownError("conjugate residual: non-finite step");
    }
    out.x += alpha * p;
    r -= alpha * ap;
    out.iters = it + 1;

    const Real r_norm = r.norm();
    out.residual_history.push_back(r_norm);
    if (r_norm < best_norm) {
      best_norm = r_norm;
      best_x = out.x;
    }
    if (r_norm <= tol) {
      out.residual_norm = r_norm;
      out.status = CrStatus::converged;
      return out;
    }

    ar = apply(r);
    const Real r_ar_next = r.dot(ar);
    if (r_ar == Real(0) || !std::isfinite(r_ar_next)) {
      throw BreakdownError("conjugate residual: (r, A r) vanished");
    }
    const Real beta = r_ar_next / r_ar;
    r_ar = r_ar_next;
    p = r + beta * p;
    ap = ar + beta * ap;
  }

  out.x = best_x;
  out.residual_norm = best_norm;
  out.status = CrStatus::max_iters;
  return out;
}

}  // namespace vda
