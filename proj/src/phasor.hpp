#pragma once

#include <cmath>

#include "isac/common.hpp"

namespace isac::detail {

/// exp(sign * j2pi * k * step_cycles) for k = 0..count-1, re-anchored every 64 terms.
inline Eigen::VectorXcd phasor_ramp(Eigen::Index count, double step_cycles, double sign) {
  Eigen::VectorXcd out(count);
  constexpr Eigen::Index kAnchor = 64;
  const cplx rot = std::polar(1.0, sign * kTwoPi * (step_cycles - std::floor(step_cycles)));
  for (Eigen::Index k0 = 0; k0 < count; k0 += kAnchor) {
    const double cyc = static_cast<double>(k0) * step_cycles;
    cplx z = std::polar(1.0, sign * kTwoPi * (cyc - std::floor(cyc)));
    const Eigen::Index end = std::min(count, k0 + kAnchor);
    for (Eigen::Index k = k0; k < end; ++k) {
      out(k) = z;
      z *= rot;
    }
  }
  return out;
}

}  // namespace isac::detail
