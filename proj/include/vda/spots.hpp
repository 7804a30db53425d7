#pragma once

#include <vector>

#include "vda/phasefield.hpp"
#include "vda/types.hpp"

namespace vda {

/// One connected component of the thresholded field.
struct Spot {
  Index label = 0;
  Index area = 0;        // cell count
  Real radius = 0;       // equivalent radius sqrt(area / pi) * h
  bool above_critical = false;
};

/// Connected components of {phi > threshold} under periodic
/// 4-connectivity, each with its equivalent radius compared against the
/// supplied critical radius. Labels are assigned in scan order;
/// cell_labels, when given, receives the per-cell label (-1 outside).
std::vector<Spot> spot_diagnostics(const Vector& field, const PfGrid& grid,
                                   Real critical_radius_value,
                                   Real threshold = 0.5,
                                   std::vector<Index>* cell_labels = nullptr);

}  // namespace vda
