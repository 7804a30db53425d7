#include "vda/transforms.hpp"

#include <sstream>

namespace vda {

Bounds::Bounds(Vector lo, Vector up) : lower(std::move(lo)), upper(std::move(up)) {
  if (lower.size() != upper.size()) {
    throw OutOfBoundsError("bounds: lower/upper dimension mismatch");
  }
  for (Index i = 0; i < lower.size(); ++i) {
    if (!(lower(i) < upper(i))) {
      std::ostringstream os;
      os << "bounds: lower[" << i << "] = " << lower(i)
         << " must be < upper[" << i << "] = " << upper(i);
      throw OutOfBoundsError(os.str());
    }
  }
}

Bounds Bounds::uniform(Index n, Real lo, Real up) {
  return Bounds(Vector::Constant(n, lo), Vector::Constant(n, up));
}

Vector normalize(const Vector& x, const Bounds& b) {
  if (x.size() != b.size()) {
    throw OutOfBoundsError("normalize: dimension mismatch");
  }
  for (Index i = 0; i < x.size(); ++i) {
    if (!(b.lower(i) < x(i) && x(i) < b.upper(i))) {
      std::ostringstream os;
      os << "normalize: x[" << i << "] = " << x(i) << " not strictly inside ("
         << b.lower(i) << ", " << b.upper(i) << ")";
      throw OutOfBoundsError(os.str());
    }
  }
  return ((x - b.lower).array() / (b.upper - b.lower).array()).matrix();
}

Vector denormalize(const Vector& theta, const Bounds& b) {
  if (theta.size() != b.size()) {
    throw OutOfBoundsError("denormalize: dimension mismatch");
  }
  for (Index i = 0; i < theta.size(); ++i) {
    if (!(Real(0) < theta(i) && theta(i) < Real(1))) {
      std::ostringstream os;
      os << "denormalize: theta[" << i << "] = " << theta(i)
         << " not strictly inside (0, 1)";
      throw OutOfBoundsError(os.str());
    }
  }
  return b.lower + (theta.array() * (b.upper - b.lower).array()).matrix();
}

}  // namespace vda
