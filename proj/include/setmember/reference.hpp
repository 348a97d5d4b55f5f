#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "setmember/error.hpp"
#include "setmember/geometry.hpp"

namespace setmember {

/// Intersection of one slab per node: the set the stopping distance is
/// measured against.
class ReferenceSet {
 public:
  explicit ReferenceSet(std::vector<Slab> slabs) : slabs_(std::move(slabs)) {
    if (slabs_.empty()) throw InvalidArgument("reference set needs at least one slab");
    for (const auto& s : slabs_) {
      if (s.dimension() != slabs_.front().dimension()) {
        throw DimensionMismatch("reference slabs differ in dimension");
      }
    }
    build_affine();
  }

  const std::vector<Slab>& slabs() const noexcept { return slabs_; }
  std::size_t dimension() const noexcept { return slabs_.front().dimension(); }
  bool is_empty() const {
    return std::any_of(slabs_.begin(), slabs_.end(), [](const Slab& s) { return s.is_empty(); });
  }

  /// max_m dist(x, slab_m), a lower bound on the distance to the intersection.
  double distance_lower_bound(const Vector& x) const {
    double lb = 0.0;
    for (const auto& s : slabs_) lb = std::max(lb, slab_distance(s, x));
    return lb;
  }

  /// True when every slab is a hyperplane and they share a point, so the set
  /// is an affine subspace with a closed-form projection.
  bool is_affine() const noexcept { return affine_.has_value(); }

  /// Exact projection onto the affine subspace; requires is_affine().
  Vector affine_projection(const Vector& x) const {
    if (!affine_) throw InvalidArgument("reference set is not an affine subspace");
    Vector z = x;
    for (std::size_t k = 0; k < affine_->basis.size(); ++k) {
      z.axpy(affine_->offsets[k] - dot(affine_->basis[k], x), affine_->basis[k]);
    }
    return z;
  }

 private:
  struct Affine {
    std::vector<Vector> basis;    // orthonormal rows spanning the normals
    std::vector<double> offsets;  // basis[k]' z = offsets[k] on the set
  };

  // Gram-Schmidt (two passes) over the hyperplane normals, carrying the
  // offsets along. A dependent normal must carry a consistent offset, else
  // the hyperplanes do not meet and Dykstra is left to report it.
  void build_affine() {
    if (is_empty()) return;
    for (const auto& s : slabs_) {
      if (s.lower() != s.upper()) return;
    }
    Affine a;
    for (const auto& s : slabs_) {
      Vector q = s.direction();
      double d = s.lower();
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < a.basis.size(); ++k) {
          const double c = dot(q, a.basis[k]);
          q.axpy(-c, a.basis[k]);
          d -= c * a.offsets[k];
        }
      }
      const double len = norm(q);
      if (len > 1e-9) {
        a.basis.push_back(q * (1.0 / len));
        a.offsets.push_back(d / len);
      } else if (std::abs(d) > 1e-9 * (1.0 + std::abs(s.lower()))) {
        return;
      }
    }
    affine_ = std::move(a);
  }

  std::vector<Slab> slabs_;
  std::optional<Affine> affine_;
};

/// ||x - P_ref[x]||. Exact for an affine reference, otherwise Dykstra to
/// `tol`.
inline double distance_to_reference(const Vector& x, const ReferenceSet& ref,
                                    double tol = kDykstraTol) {
  if (ref.is_empty()) throw EmptySetError("reference set is empty");
  if (ref.distance_lower_bound(x) == 0.0) return 0.0;
  if (ref.is_affine()) return distance(x, ref.affine_projection(x));
  return distance(x, dykstra_project(ref.slabs(), x, tol));
}

/// Decides distance_to_reference(x, ref) <= delta. Skips Dykstra whenever a
/// single slab is already farther than delta.
inline bool within_reference(const Vector& x, const ReferenceSet& ref, double delta,
                             double tol = kDykstraTol) {
  if (ref.is_empty()) throw EmptySetError("reference set is empty");
  const double lb = ref.distance_lower_bound(x);
  if (lb > delta) return false;
  if (lb == 0.0) return true;
  return distance_to_reference(x, ref, tol) <= delta;
}

}  // namespace setmember
