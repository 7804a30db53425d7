#include "vda/model.hpp"

#include "vda/errors.hpp"

namespace vda {

LinearModel::LinearModel(Matrix dynamics, Index n_param)
    : dynamics_(std::move(dynamics)), n_param_(n_param) {
  if (dynamics_.rows() != dynamics_.cols()) {
    throw Error("LinearModel: dynamics matrix must be square");
  }
  if (n_param_ < 0) {
    throw Error("LinearModel: negative parameter count");
  }
}

void LinearModel::rhs(ConstVectorRef theta, VectorRef out) const {
  const Index nz = state_size();
  out.head(nz).noalias() = dynamics_ * theta.head(nz);
  out.tail(n_param_).setZero();
}

void LinearModel::jvp(ConstVectorRef, ConstVectorRef v, VectorRef out) const {
  const Index nz = state_size();
  out.head(nz).noalias() = dynamics_ * v.head(nz);
  out.tail(n_param_).setZero();
}

void LinearModel::vjp(ConstVectorRef, ConstVectorRef w, VectorRef out) const {
  const Index nz = state_size();
  out.head(nz).noalias() = dynamics_.transpose() * w.head(nz);
  out.tail(n_param_).setZero();
}

void LinearModel::soa_term(ConstVectorRef, ConstVectorRef, ConstVectorRef,
                           VectorRef out) const {
  out.setZero();
}

}  // namespace vda
