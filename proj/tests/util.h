#pragma once

// Shared helpers for the test suites: seeded sampling of families, admissible
// spectral values, and ruling coordinates kept clear of chart poles.

#include <random>
#include <utility>

#include "qdef/quadric.h"

namespace qtest {

using namespace qdef;

struct Rng {
  std::mt19937_64 g;
  explicit Rng(uint64_t seed) : g(seed) {}
  double uniform(double a, double b) {
    std::uniform_real_distribution<double> d(a, b);
    return d(g);
  }
  int pick(int n) {
    std::uniform_int_distribution<int> d(0, n - 1);
    return d(g);
  }
  bool coin() { return pick(2) == 1; }
};

// Axis ranges chosen so that the sign pattern and distinctness hold by
// construction, and min(a1, a3) = a3 for Central.
inline ConfocalFamily random_family(Rng& rng, FamilyKind kind) {
  if (kind == FamilyKind::Central)
    return make_family(kind, rng.uniform(2.0, 6.0), rng.uniform(-3.0, -0.5),
                       rng.uniform(0.5, 1.8));
  return make_family(kind, rng.uniform(0.5, 4.0), rng.uniform(-4.0, -0.5));
}

inline double z_band_lo(const ConfocalFamily& f) { return f.a2; }
inline double z_band_hi(const ConfocalFamily& f) {
  return f.central() ? std::min(f.a1, f.a3) : f.a1;
}

inline double random_admissible_z(Rng& rng, const ConfocalFamily& f,
                                  double margin = 0.1) {
  double lo = z_band_lo(f), hi = z_band_hi(f);
  double m = margin * (hi - lo);
  return rng.uniform(lo + m, hi - m);
}

// Nonzero admissible z, bounded away from 0 so that 1/z quantities stay tame.
inline double random_admissible_z_nonzero(Rng& rng, const ConfocalFamily& f,
                                          double margin = 0.1) {
  for (;;) {
    double z = random_admissible_z(rng, f, margin);
    if (std::abs(z) > 0.05 * (z_band_hi(f) - z_band_lo(f))) return z;
  }
}

inline std::pair<double, double> random_uv(Rng& rng, const ConfocalFamily& f,
                                           double lo = -2.0, double hi = 2.0) {
  for (;;) {
    double u = rng.uniform(lo, hi), v = rng.uniform(lo, hi);
    if (!f.central() || std::abs(u - v) > 0.3) return {u, v};
  }
}

}  // namespace qtest
