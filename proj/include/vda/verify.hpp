#pragma once

#include <string>
#include <vector>

#include "vda/model.hpp"
#include "vda/observation.hpp"
#include "vda/types.hpp"

namespace vda {

struct CheckResult {
  std::string name;
  bool pass = false;
  Real worst_error = 0;
  Real tolerance = 0;
  std::string detail;
};

struct VerificationReport {
  std::vector<CheckResult> checks;
  bool all_pass() const {
    for (const CheckResult& c : checks) {
      if (!c.pass) return false;
    }
    return true;
  }
};

/// Small-scale correctness suite against the given model: adjoint pairing
/// of jvp/vjp, the step-level transpose identity, the adjoint gradient vs
/// central finite differences, Hessian-vector-product symmetry and its
/// finite-difference cross-check, and the conjugate residual solver
/// against a dense factorization. Observations are synthesized on the
/// given grid; with zero observation times the gradient must vanish
/// identically.
VerificationReport run_verification(const Model& model,
                                    const ObservationOperator& op,
                                    const Vector& theta_probe,
                                    const std::vector<Real>& times,
                                    Real dt, std::uint64_t seed);

/// Test hook: forwards everything but perturbs vjp, so the adjoint-pair
/// check must fail.
class CorruptedVjpModel : public Model {
 public:
  explicit CorruptedVjpModel(const Model& inner) : inner_(inner) {}

  Index state_size() const override { return inner_.state_size(); }
  Index param_size() const override { return inner_.param_size(); }
  void rhs(ConstVectorRef theta, VectorRef out) const override {
    inner_.rhs(theta, out);
  }
  void jvp(ConstVectorRef theta, ConstVectorRef v, VectorRef out) const override {
    inner_.jvp(theta, v, out);
  }
  void vjp(ConstVectorRef theta, ConstVectorRef w, VectorRef out) const override {
    inner_.vjp(theta, w, out);
    out(0) += 1e-3 * w(0) + 1e-6;
  }
  void soa_term(ConstVectorRef theta, ConstVectorRef lambda, ConstVectorRef xi,
                VectorRef out) const override {
    inner_.soa_term(theta, lambda, xi, out);
  }

 private:
  const Model& inner_;
};

}  // namespace vda
