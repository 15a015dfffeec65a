#pragma once

// Seedable randomness used anywhere the toolkit is stochastic. Draws go
// through std::mt19937_64 and the fully specified mappings below rather
// than std::*_distribution, so a given seed reproduces identical output on
// every platform.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

namespace evanon {

using Rng = std::mt19937_64;

// Uniform in [0, 1) from the top 53 bits of one engine draw.
inline double uniform53(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal, Box-Muller cosine branch; consumes two uniforms.
inline double standard_normal(Rng& rng) {
  const double u1 = uniform53(rng);
  const double u2 = uniform53(rng);
  constexpr double kTwoPi = 6.28318530717958647692;
  return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(kTwoPi * u2);
}

// Uniform direction on the unit sphere: a normalized 3D normal draw.
inline std::array<double, 3> unit_sphere_direction(Rng& rng) {
  for (;;) {
    const double a = standard_normal(rng);
    const double b = standard_normal(rng);
    const double c = standard_normal(rng);
    const double norm = std::sqrt(a * a + b * b + c * c);
    if (norm > 1e-12) {
      return {a / norm, b / norm, c / norm};
    }
  }
}

}  // namespace evanon
