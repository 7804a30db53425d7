#pragma once

#include <random>

#include "vda/integrator.hpp"
#include "vda/model.hpp"
#include "vda/observation.hpp"
#include "vda/phasefield.hpp"
#include "vda/types.hpp"

namespace vda::test {

/// Deterministic uniform vector in [lo, hi].
inline Vector random_vector(Index n, Real lo, Real hi, unsigned seed) {
  std::mt19937 eng(seed);
  std::uniform_real_distribution<Real> dist(lo, hi);
  Vector out(n);
  for (Index i = 0; i < n; ++i) out(i) = dist(eng);
  return out;
}

/// Central finite difference of a scalar functional, component by component.
template <typename F>
Vector fd_gradient(const F& f, const Vector& x, Real step) {
  Vector g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    Vector xp = x;
    Vector xm = x;
    xp(i) += step;
    xm(i) -= step;
    g(i) = (f(xp) - f(xm)) / (2 * step);
  }
  return g;
}

/// Scalar reference for the phase-field rhs: naive loops, no shared code
/// with the production stencil.
inline Vector naive_pf_rhs(const Vector& theta, Index nx, Index ny, Real h,
                           Real tau, Real eps) {
  const Index m = nx * ny;
  const Real b = theta(m);
  Vector out(m + 1);
  for (Index y = 0; y < ny; ++y) {
    for (Index x = 0; x < nx; ++x) {
      const Index i = y * nx + x;
      Real lap = 0;
      const Index xs[2] = {(x + nx - 1) % nx, (x + 1) % nx};
      const Index ys[2] = {(y + ny - 1) % ny, (y + 1) % ny};
      lap += theta(y * nx + xs[0]) - theta(i);
      lap += theta(y * nx + xs[1]) - theta(i);
      lap += theta(ys[0] * nx + x) - theta(i);
      lap += theta(ys[1] * nx + x) - theta(i);
      lap /= h * h;
      const Real p = theta(i);
      out(i) = (eps * eps * lap + p * (1 - p) * (p + b - 1)) / tau;
    }
  }
  out(m) = 0;
  return out;
}

/// Small random phase-field configuration used across the adjoint tests:
/// interior values in (0.2, 0.8), b strictly inside (0, 1).
inline Vector random_pf_state(const PfGrid& grid, unsigned seed,
                              Real lo = 0.2, Real hi = 0.8) {
  Vector theta = random_vector(grid.cells() + 1, lo, hi, seed);
  return theta;
}

}  // namespace vda::test
