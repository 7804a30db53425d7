#pragma once

#include "vda/types.hpp"

namespace vda {

/// An autonomous system dtheta/dt = F(theta) on the normalized state
/// theta in (0,1)^N. The state is a flat vector: the time-dependent block
/// of size state_size() comes first, followed by param_size() time-invariant
/// parameters whose rhs is identically zero.
///
/// Implementations provide the analytic Jacobian-vector product (jvp), its
/// transpose (vjp) and the second-order term (d2F/dtheta2 . xi)^T lambda
/// used by the second-order adjoint sweep. jvp and vjp must be exact
/// adjoint pairs: w . jvp(theta, v) == v . vjp(theta, w).
class Model {
 public:
  virtual ~Model() = default;

  virtual Index state_size() const = 0;
  virtual Index param_size() const = 0;
  Index size() const { return state_size() + param_size(); }

  /// F(theta). out[i] == 0 for every parameter component.
  virtual void rhs(ConstVectorRef theta, VectorRef out) const = 0;

  /// (dF/dtheta) v.
  virtual void jvp(ConstVectorRef theta, ConstVectorRef v,
                   VectorRef out) const = 0;

  /// (dF/dtheta)^T w.
  virtual void vjp(ConstVectorRef theta, ConstVectorRef w,
                   VectorRef out) const = 0;

  /// (d2F/dtheta2 . xi)^T lambda.
  virtual void soa_term(ConstVectorRef theta, ConstVectorRef lambda,
                        ConstVectorRef xi, VectorRef out) const = 0;

  // Value-returning conveniences.
  Vector rhs(ConstVectorRef theta) const {
    Vector out(size());
    rhs(theta, out);
    return out;
  }
  Vector jvp(ConstVectorRef theta, ConstVectorRef v) const {
    Vector out(size());
    jvp(theta, v, out);
    return out;
  }
  Vector vjp(ConstVectorRef theta, ConstVectorRef w) const {
    Vector out(size());
    vjp(theta, w, out);
    return out;
  }
  Vector soa_term(ConstVectorRef theta, ConstVectorRef lambda,
                  ConstVectorRef xi) const {
    Vector out(size());
    soa_term(theta, lambda, xi, out);
    return out;
  }
};

/// Linear dynamics dtheta/dt = L theta on the state block (parameters, if
/// any, are frozen). The second derivative vanishes, so soa_term is zero.
/// Mainly a testbed: with a linear observation operator the misfit cost is
/// exactly quadratic and dense oracles are available.
class LinearModel : public Model {
 public:
  /// dynamics is (state_size x state_size); n_param extra components are
  /// carried but do not move and do not couple.
  explicit LinearModel(Matrix dynamics, Index n_param = 0);

  using Model::rhs;
  using Model::jvp;
  using Model::vjp;
  using Model::soa_term;

  Index state_size() const override { return dynamics_.rows(); }
  Index param_size() const override { return n_param_; }
  const Matrix& dynamics() const { return dynamics_; }

  void rhs(ConstVectorRef theta, VectorRef out) const override;
  void jvp(ConstVectorRef theta, ConstVectorRef v, VectorRef out) const override;
  void vjp(ConstVectorRef theta, ConstVectorRef w, VectorRef out) const override;
  void soa_term(ConstVectorRef theta, ConstVectorRef lambda, ConstVectorRef xi,
                VectorRef out) const override;

 private:
  Matrix dynamics_;
  Index n_param_ = 0;
};

}  // namespace vda
