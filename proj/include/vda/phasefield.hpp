#pragma once

#include "vda/model.hpp"
#include "vda/types.hpp"

namespace vda {

/// Periodic rectangular grid, row-major (cell i = y * nx + x), spacing in
/// units of the interface width.
struct PfGrid {
  Index nx = 0;
  Index ny = 0;
  Real spacing = 1.0;

  PfGrid() = default;
  PfGrid(Index nx_, Index ny_, Real spacing_ = 1.0);

  Index cells() const { return nx * ny; }
  Index cell(Index x, Index y) const { return y * nx + x; }
};

/// Time and length scales of the phase-field dynamics.
struct PfParams {
  Real tau = 1.0;
  Real eps = 1.0;
};

/// Two-phase interface dynamics on a periodic grid:
///
///   tau d(phi_i)/dt = eps^2 lap_i(phi) + phi_i (1 - phi_i)(phi_i + b - 1),
///
/// with the five-point Laplacian lap_i(phi) = sum_{j in nbrs(i)}
/// (phi_j - phi_i) / h^2 and the normalized velocity parameter b = m + 1/2
/// carried as the last state component (M + 1 in total, frozen in time).
/// phi = 0 and phi = 1 are fixed points, so fields initialized in [0,1]
/// stay there. jvp/vjp/soa_term are the hand-derived linearizations.
class PhaseFieldModel : public Model {
 public:
  PhaseFieldModel(PfGrid grid, PfParams params = {});

  using Model::rhs;
  using Model::jvp;
  using Model::vjp;
  using Model::soa_term;

  Index state_size() const override { return grid_.cells(); }
  Index param_size() const override { return 1; }
  const PfGrid& grid() const { return grid_; }
  const PfParams& params() const { return params_; }

  void rhs(ConstVectorRef theta, VectorRef out) const override;
  void jvp(ConstVectorRef theta, ConstVectorRef v, VectorRef out) const override;
  void vjp(ConstVectorRef theta, ConstVectorRef w, VectorRef out) const override;
  void soa_term(ConstVectorRef theta, ConstVectorRef lambda, ConstVectorRef xi,
                VectorRef out) const override;

  /// State vector (phi..., b) from a field and the velocity parameter m.
  Vector pack(const Vector& field, Real m) const;

 private:
  PfGrid grid_;
  PfParams params_;

  template <typename Fn>
  void for_each_cell(Fn&& fn) const;
};

/// Five-point periodic Laplacian of a field (no reaction term); exposed
/// for tests of self-adjointness and the discrete divergence theorem.
Vector periodic_laplacian(const Vector& field, const PfGrid& grid);

/// Circular spot of the given radius centered at (cx, cy), with a tanh
/// edge profile of the given width (grid units); width <= 0 gives a sharp
/// 0/1 disk. Distances honor the periodic wrap.
Vector disk_field(const PfGrid& grid, Real cx, Real cy, Real radius,
                  Real edge_width);

/// Settings for the critical-radius bisection. Radii in units of eps;
/// lo/hi <= 0 pick a bracket scaled by 1/m around the sharp-interface
/// estimate eps / (sqrt(2) m).
struct CriticalRadiusConfig {
  Real spacing = 1.0;
  Real dt = 0.1;
  Real t_fate = 50.0;      // horizon at which growth/decay is judged
  Real radius_tol = 0.05;  // bisection stops when the bracket is this wide
  Real lo = -1.0;
  Real hi = -1.0;
  Index min_grid = 64;     // lower bound on the (square) fate grid edge
  Real domain_factor = 8.0;  // grid edge >= factor * candidate radius
};

/// Smallest initial spot radius whose spot grows under the dynamics with
/// the given m, found by bisection on full 2-D simulations of a centered
/// circular seed; a spot "grows" when its mean phi at t_fate exceeds the
/// initial mean. Throws NoBracketingError when the search range does not
/// straddle the growth/decay boundary.
Real critical_radius(Real m, const CriticalRadiusConfig& cfg = {});

/// Fate of a single seed: true when the spot grows.
bool spot_grows(Real m, Real radius, const CriticalRadiusConfig& cfg = {});

}  // namespace vda
