#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "vda/types.hpp"

namespace vda {

/// Deterministic stream of standard normal deviates.
///
/// The seed-to-stream mapping is pinned so that runs are reproducible
/// across platforms and standard-library versions: draws come from
/// std::mt19937_64 (whose output sequence the standard fixes) mapped to
/// uniforms via (x >> 11) * 2^-53, fed through Box-Muller. Deviates are
/// produced in pairs; the second of each pair is served before the engine
/// advances again.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  Real next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite; u2 in [0, 1).
    const Real u1 = (static_cast<Real>(engine_() >> 11) + Real(1)) * 0x1.0p-53;
    const Real u2 = static_cast<Real>(engine_() >> 11) * 0x1.0p-53;
    const Real radius = std::sqrt(Real(-2) * std::log(u1));
    const Real angle = Real(2) * std::numbers::pi_v<Real> * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Vector of iid standard normals.
  Vector draw(Index n) {
    Vector out(n);
    for (Index i = 0; i < n; ++i) out(i) = next();
    return out;
  }

  /// Uniform in [lo, hi).
  Real uniform(Real lo, Real hi) {
    const Real u = static_cast<Real>(engine_() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

 private:
  std::mt19937_64 engine_;
  Real spare_ = 0;
  bool have_spare_ = false;
};

}  // namespace vda
