#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "setmember/geometry.hpp"
#include "setmember/vector.hpp"

namespace support {

using setmember::Vector;

inline Vector random_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline Vector random_unit(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> g;
  Vector v(n);
  do {
    for (auto& x : v) x = g(rng);
  } while (setmember::norm(v) < 1e-6);
  return v * (1.0 / setmember::norm(v));
}

/// A random slab through `anchor`, with half-widths on each side in [lo, hi].
inline setmember::Slab slab_through(std::mt19937_64& rng, const Vector& anchor, double lo, double hi) {
  std::uniform_real_distribution<double> w(lo, hi);
  const Vector phi = random_unit(rng, anchor.size());
  const double c = setmember::dot(phi, anchor);
  return setmember::Slab(phi, c - w(rng), c + w(rng));
}

/// Brute-force argmin ||p - z|| over z in the intersection of `slabs`
/// (2-D only). A point outside the set projects onto its boundary, so the
/// search walks a uniform grid along each of the 2k bounding lines and keeps
/// the closest feasible grid point. Grid spacing bounds the error.
inline Vector grid_project_2d(const std::vector<setmember::Slab>& slabs, const Vector& p,
                              const Vector& feasible_point, double spacing = 1e-4) {
  auto inside = [&](double x, double y, double tol) {
    for (const auto& s : slabs) {
      const double t = s.direction()[0] * x + s.direction()[1] * y;
      if (t < s.lower() - tol || t > s.upper() + tol) return false;
    }
    return true;
  };
  if (inside(p[0], p[1], 0.0)) return p;
  const double reach = setmember::distance(p, feasible_point) + 1e-2;
  Vector best = feasible_point;
  double best_d = setmember::squared_distance(p, feasible_point);
  for (const auto& s : slabs) {
    const double ux = s.direction()[0], uy = s.direction()[1];
    const double vx = -uy, vy = ux;  // along the line
    const double centre = vx * p[0] + vy * p[1];
    const long steps = static_cast<long>(std::ceil(2.0 * reach / spacing));
    for (double level : {s.lower(), s.upper()}) {
      for (long a = 0; a <= steps; ++a) {
        const double t = centre - reach + static_cast<double>(a) * spacing;
        const double x = level * ux + t * vx;
        const double y = level * uy + t * vy;
        if (!inside(x, y, 1e-12)) continue;
        const double d = (x - p[0]) * (x - p[0]) + (y - p[1]) * (y - p[1]);
        if (d < best_d) {
          best_d = d;
          best = Vector{x, y};
        }
      }
    }
  }
  return best;
}

}  // namespace support
