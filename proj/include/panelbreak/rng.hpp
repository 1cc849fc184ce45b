#pragma once

#include <cmath>
#include <cstdint>

namespace panelbreak {

// Counter-based generator: every draw is a pure function of (seed, key parts),
// so generation order and thread schedule cannot change the stream. Used for
// DGP draws keyed by (seed, unit, period, variable) and for simulation reps.
namespace rng {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t keyed_u64(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                               std::uint64_t c = 0) {
  std::uint64_t x = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  x = mix64(x ^ a);
  x = mix64(x ^ b);
  x = mix64(x ^ c);
  return x;
}

// Uniform on (0,1); never returns 0 so log() is safe.
inline double keyed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                            std::uint64_t c = 0) {
  std::uint64_t u = keyed_u64(seed, a, b, c);
  return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53;
}

// Standard normal via Box-Muller; two independent uniforms come from two
// sub-keys, keeping the draw a pure function of the key.
inline double keyed_normal(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                           std::uint64_t c = 0) {
  std::uint64_t base = keyed_u64(seed, a, b, c);
  double u1 = (static_cast<double>(mix64(base ^ 0xd1b54a32d192ed03ULL) >> 11) + 0.5) * 0x1.0p-53;
  double u2 = (static_cast<double>(mix64(base ^ 0x8cb92ba72f3d8dd7ULL) >> 11) + 0.5) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace rng
}  // namespace panelbreak
