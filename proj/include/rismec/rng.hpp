// SPDX-License-Identifier: Apache-2.0
//
// rismec — RIS-assisted secure NOMA-MEC energy minimization
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

#include "rismec/types.hpp"

namespace rismec {

// Stable link identifiers so that parallel runs draw identical channels
// regardless of sampling order.
namespace link {
inline constexpr std::uint64_t kGeometry = 1;
inline constexpr std::uint64_t kUserAp = 2;
inline constexpr std::uint64_t kUserRis = 3;
inline constexpr std::uint64_t kUserEve = 4;
inline constexpr std::uint64_t kRisAp = 5;
inline constexpr std::uint64_t kRisEve = 6;
inline constexpr std::uint64_t kInitPhases = 7;
inline constexpr std::uint64_t kRandomization = 8;
inline constexpr std::uint64_t kBaselinePhases = 9;
inline std::uint64_t per_user(std::uint64_t base, int user) {
  return base * 1024 + static_cast<std::uint64_t>(user);
}
}  // namespace link

/// Counter-based splittable generator keyed by (master seed, realization,
/// link id). Draws are platform-independent and independent across keys.
class RandomStream {
 public:
  RandomStream(std::uint64_t master, std::uint64_t realization, std::uint64_t link_id)
      : key_(mix(mix(master ^ 0x9E3779B97F4A7C15ull) ^
                 mix(realization * 0xBF58476D1CE4E5B9ull + 0x94D049BB133111EBull) ^
                 mix(link_id * 0xD6E8FEB86659FD93ull + 0x2545F4914F6CDD1Dull))) {}

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ull); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1].
  double uniform_open() { return 1.0 - uniform(); }

  double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (implementation-independent).
  double gauss() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform_open();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = kTwoPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Circularly-symmetric complex normal with unit variance (E|z|^2 = 1).
  cxd cgauss() {
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    double re = gauss();
    double im = gauss();
    return {re * inv_sqrt2, im * inv_sqrt2};
  }

  /// Uniform point on the disk of given radius about the center.
  Vec2 disk_point(const Vec2& center, double radius) {
    double r = radius * std::sqrt(uniform());
    double a = kTwoPi * uniform();
    return center + Vec2{r * std::cos(a), r * std::sin(a)};
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finalizer
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace rismec
