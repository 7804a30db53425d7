#include "vda/phasefield.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vda/errors.hpp"
#include "vda/integrator.hpp"

namespace vda {

PfGrid::PfGrid(Index nx_, Index ny_, Real spacing_)
    : nx(nx_), ny(ny_), spacing(spacing_) {
  if (nx < 3 || ny < 3) throw Error("PfGrid: need at least 3x3 cells");
  if (!(spacing > Real(0))) throw Error("PfGrid: spacing must be positive");
}

PhaseFieldModel::PhaseFieldModel(PfGrid grid, PfParams params)
    : grid_(grid), params_(params) {
  if (!(params_.tau > Real(0)) || !(params_.eps > Real(0))) {
    throw Error("PhaseFieldModel: tau and eps must be positive");
  }
}

// Visits every cell with its periodic neighbor indices. The wrap branches
// are mispredicted only on the grid edges.
template <typename Fn>
void PhaseFieldModel::for_each_cell(Fn&& fn) const {
  const Index nx = grid_.nx;
  const Index ny = grid_.ny;
  for (Index y = 0; y < ny; ++y) {
    const Index row = y * nx;
    const Index up = (y + 1 == ny ? 0 : y + 1) * nx;
    const Index down = (y == 0 ? ny - 1 : y - 1) * nx;
    for (Index x = 0; x < nx; ++x) {
      const Index i = row + x;
      const Index left = row + (x == 0 ? nx - 1 : x - 1);
      const Index right = row + (x + 1 == nx ? 0 : x + 1);
      fn(i, left, right, down + x, up + x);
    }
  }
}

void PhaseFieldModel::rhs(ConstVectorRef theta, VectorRef out) const {
  const Index m = grid_.cells();
  const Real b = theta(m);
  const Real inv_tau = Real(1) / params_.tau;
  const Real diff = params_.eps * params_.eps /
                    (grid_.spacing * grid_.spacing);
  for_each_cell([&](Index i, Index l, Index r, Index d, Index u) {
    const Real p = theta(i);
    const Real lap = theta(l) + theta(r) + theta(d) + theta(u) - Real(4) * p;
    out(i) = inv_tau * (diff * lap + p * (Real(1) - p) * (p + b - Real(1)));
  });
  out(m) = 0;
}

void PhaseFieldModel::jvp(ConstVectorRef theta, ConstVectorRef v,
                          VectorRef out) const {
  const Index m = grid_.cells();
  const Real b = theta(m);
  const Real vb = v(m);
  const Real inv_tau = Real(1) / params_.tau;
  const Real diff = params_.eps * params_.eps /
                    (grid_.spacing * grid_.spacing);
  for_each_cell([&](Index i, Index l, Index r, Index d, Index u) {
    const Real p = theta(i);
    const Real lap = v(l) + v(r) + v(d) + v(u) - Real(4) * v(i);
    // d/dphi of phi (1 - phi)(phi + b - 1)
    const Real reaction =
        -Real(3) * p * p + (Real(4) - Real(2) * b) * p + b - Real(1);
    out(i) = inv_tau *
             (diff * lap + reaction * v(i) + p * (Real(1) - p) * vb);
  });
  out(m) = 0;
}

void PhaseFieldModel::vjp(ConstVectorRef theta, ConstVectorRef w,
                          VectorRef out) const {
  const Index m = grid_.cells();
  const Real b = theta(m);
  const Real inv_tau = Real(1) / params_.tau;
  const Real diff = params_.eps * params_.eps /
                    (grid_.spacing * grid_.spacing);
  Real param_accum = 0;
  // The Laplacian is self-adjoint under periodic wrap, so the field rows
  // reuse the forward stencil; the parameter column transposes into a sum
  // over cells.
  for_each_cell([&](Index i, Index l, Index r, Index d, Index u) {
    const Real p = theta(i);
    const Real lap = w(l) + w(r) + w(d) + w(u) - Real(4) * w(i);
    const Real reaction =
        -Real(3) * p * p + (Real(4) - Real(2) * b) * p + b - Real(1);
    out(i) = inv_tau * (diff * lap + reaction * w(i));
    param_accum += p * (Real(1) - p) * w(i);
  });
  out(m) = inv_tau * param_accum;
}

void PhaseFieldModel::soa_term(ConstVectorRef theta, ConstVectorRef lambda,
                               ConstVectorRef xi, VectorRef out) const {
  const Index m = grid_.cells();
  const Real b = theta(m);
  const Real xb = xi(m);
  const Real inv_tau = Real(1) / params_.tau;
  Real param_accum = 0;
  for (Index i = 0; i < m; ++i) {
    const Real p = theta(i);
    const Real li = lambda(i);
    // Second derivative of the reaction term against (xi_i, xi_b).
    out(i) = inv_tau * (-(Real(6) * p + Real(2) * b - Real(4)) * li * xi(i) -
                        (Real(2) * p - Real(1)) * li * xb);
    param_accum += (Real(1) - Real(2) * p) * li * xi(i);
  }
  out(m) = inv_tau * param_accum;
}

Vector PhaseFieldModel::pack(const Vector& field, Real m) const {
  if (field.size() != grid_.cells()) {
    throw Error("PhaseFieldModel::pack: field size mismatch");
  }
  Vector theta(field.size() + 1);
  theta.head(field.size()) = field;
  theta(field.size()) = m + Real(0.5);
  return theta;
}

Vector periodic_laplacian(const Vector& field, const PfGrid& grid) {
  if (field.size() != grid.cells()) {
    throw Error("periodic_laplacian: field size mismatch");
  }
  const Real inv_h2 = Real(1) / (grid.spacing * grid.spacing);
  Vector out(field.size());
  for (Index y = 0; y < grid.ny; ++y) {
    const Index row = y * grid.nx;
    const Index up = (y + 1 == grid.ny ? 0 : y + 1) * grid.nx;
    const Index down = (y == 0 ? grid.ny - 1 : y - 1) * grid.nx;
    for (Index x = 0; x < grid.nx; ++x) {
      const Index i = row + x;
      const Index l = row + (x == 0 ? grid.nx - 1 : x - 1);
      const Index r = row + (x + 1 == grid.nx ? 0 : x + 1);
      out(i) = (field(l) + field(r) + field(down + x) + field(up + x) -
                Real(4) * field(i)) *
               inv_h2;
    }
  }
  return out;
}

Vector disk_field(const PfGrid& grid, Real cx, Real cy, Real radius,
                  Real edge_width) {
  Vector field(grid.cells());
  const Real lx = static_cast<Real>(grid.nx) * grid.spacing;
  const Real ly = static_cast<Real>(grid.ny) * grid.spacing;
  for (Index y = 0; y < grid.ny; ++y) {
    for (Index x = 0; x < grid.nx; ++x) {
      Real dx = std::abs(static_cast<Real>(x) * grid.spacing - cx);
      Real dy = std::abs(static_cast<Real>(y) * grid.spacing - cy);
      dx = std::min(dx, lx - dx);
      dy = std::min(dy, ly - dy);
      const Real dist = std::hypot(dx, dy);
      Real value;
      if (edge_width > Real(0)) {
        value = Real(0.5) * (Real(1) + std::tanh((radius - dist) / edge_width));
      } else {
        value = dist <= radius ? Real(1) : Real(0);
      }
      field(grid.cell(x, y)) = value;
    }
  }
  return field;
}

bool spot_grows(Real m, Real radius, const CriticalRadiusConfig& cfg) {
  if (!(radius > Real(0))) throw Error("spot_grows: radius must be positive");
  Index edge = static_cast<Index>(
      std::ceil(cfg.domain_factor * radius / cfg.spacing));
  edge = std::max(edge, cfg.min_grid);
  const PfGrid grid(edge, edge, cfg.spacing);
  const PhaseFieldModel model(grid, PfParams{});

  const Real center = Real(edge) * cfg.spacing / Real(2);
  const Vector seed = disk_field(grid, center, center, radius, Real(0));
  const Vector theta0 = model.pack(seed, m);

  const TimeGrid time = TimeGrid::covering(cfg.dt, cfg.t_fate);
  Vector theta = theta0;
  Vector rhs_buf(model.size());
  for (Index k = 0; k < time.n_steps; ++k) {
    euler_step_inplace(model, theta, time.dt, rhs_buf);
  }
  if (!theta.allFinite()) {
    throw NonFiniteStateError("spot_grows: simulation blew up", time.n_steps);
  }
  const Real mean0 = seed.mean();
  const Real mean_final = theta.head(grid.cells()).mean();
  return mean_final > mean0;
}

Real critical_radius(Real m, const CriticalRadiusConfig& cfg) {
  if (!(m > Real(0)) || !(m < Real(0.5))) {
    throw Error("critical_radius: need 0 < m < 0.5");
  }
  // Sharp-interface estimate eps / (sqrt(2) m) anchors the default bracket.
  const Real estimate = Real(1) / (std::sqrt(Real(2)) * m);
  Real lo = cfg.lo > Real(0) ? cfg.lo : std::max(Real(2) * cfg.spacing,
                                                 Real(0.4) * estimate);
  Real hi = cfg.hi > Real(0) ? cfg.hi : Real(2.5) * estimate;
  if (!(lo < hi)) throw NoBracketingError("critical_radius: empty bracket");

  if (spot_grows(m, lo, cfg)) {
    throw NoBracketingError(
        "critical_radius: lower bracket already grows; decrease lo");
  }
  if (!spot_grows(m, hi, cfg)) {
    throw NoBracketingError(
        "critical_radius: upper bracket still decays; increase hi");
  }
  while (hi - lo > cfg.radius_tol) {
    const Real mid = Real(0.5) * (lo + hi);
    if (spot_grows(m, mid, cfg)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return Real(0.5) * (lo + hi);
}

}  // namespace vda
