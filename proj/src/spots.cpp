#include "vda/spots.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "vda/errors.hpp"

namespace vda {

std::vector<Spot> spot_diagnostics(const Vector& field, const PfGrid& grid,
                                   Real critical_radius_value, Real threshold,
                                   std::vector<Index>* cell_labels) {
  if (field.size() != grid.cells()) {
    throw Error("spot_diagnostics: field size mismatch");
  }
  const Index nx = grid.nx;
  const Index ny = grid.ny;
  std::vector<Index> label(static_cast<std::size_t>(grid.cells()), -1);
  std::vector<Spot> spots;
  std::vector<Index> stack;

  Index next_label = 0;
  for (Index start = 0; start < grid.cells(); ++start) {
    if (label[static_cast<std::size_t>(start)] >= 0 ||
        !(field(start) > threshold)) {
      continue;
    }
    Index area = 0;
    stack.assign(1, start);
    label[static_cast<std::size_t>(start)] = next_label;
    while (!stack.empty()) {
      const Index i = stack.back();
      stack.pop_back();
      ++area;
      const Index x = i % nx;
      const Index y = i / nx;
      const Index nbrs[4] = {
          y * nx + (x == 0 ? nx - 1 : x - 1),
          y * nx + (x + 1 == nx ? 0 : x + 1),
          (y == 0 ? ny - 1 : y - 1) * nx + x,
          (y + 1 == ny ? 0 : y + 1) * nx + x,
      };
      for (Index j : nbrs) {
        if (label[static_cast<std::size_t>(j)] < 0 && field(j) > threshold) {
          label[static_cast<std::size_t>(j)] = next_label;
          stack.push_back(j);
        }
      }
    }
    Spot spot;
    spot.label = next_label;
    spot.area = area;
    spot.radius = std::sqrt(static_cast<Real>(area) /
                            std::numbers::pi_v<Real>) *
                  grid.spacing;
    spot.above_critical = spot.radius > critical_radius_value;
    spots.push_back(spot);
    ++next_label;
  }
  if (cell_labels != nullptr) *cell_labels = std::move(label);
  return spots;
}

}  // namespace vda
