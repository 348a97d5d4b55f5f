#pragma once

// Convex sets in R^n with exact Euclidean projections, and projection onto
// finite intersections of them via Dykstra's cyclic algorithm.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "setmember/error.hpp"
#include "setmember/vector.hpp"

namespace setmember {

inline constexpr double kMembershipTol = 1e-9;
inline constexpr double kDykstraTol = 1e-6;
inline constexpr std::size_t kDykstraMaxSweeps = 100000;

namespace detail {

inline void require_dim(std::size_t expected, const Vector& p) {
  if (p.size() != expected) {
    throw DimensionMismatch("point has dimension " + std::to_string(p.size()) +
                            ", set has dimension " + std::to_string(expected));
  }
}

// Returns the unit vector along `v` and its original norm.
inline std::pair<Vector, double> normalized(Vector v, const char* what) {
  if (v.empty()) throw InvalidArgument(std::string(what) + " must have n >= 1");
  if (!v.all_finite()) throw InvalidArgument(std::string(what) + " is not finite");
  const double s = norm(v);
  if (!(s > 0.0)) throw InvalidArgument(std::string(what) + " is the zero vector");
  v *= 1.0 / s;
  return {std::move(v), s};
}

}  // namespace detail

/// Strip {x : lower <= direction' x <= upper} with a unit-norm direction.
///
/// Construction normalizes the direction and rescales the bounds so that the
/// represented set is unchanged. Infinite bounds are allowed; the all-space
/// sentinel `Slab::unbounded(n)` is the initial local set of every node.
/// Bounds that cross put the slab in an explicit empty state: every
/// projection or membership query on it then throws EmptySetError.
class Slab {
 public:
  Slab(Vector direction, double lower, double upper) {
    if (std::isnan(lower) || std::isnan(upper)) {
      throw InvalidArgument("slab bounds must not be NaN");
    }
    auto [unit, scale] = detail::normalized(std::move(direction), "slab direction");
    direction_ = std::move(unit);
    lower_ = lower / scale;
    upper_ = upper / scale;
    empty_ = lower_ > upper_;
  }

  static Slab unbounded(std::size_t n) {
    if (n == 0) throw InvalidArgument("dimension must be >= 1");
    Vector e(n);
    e[0] = 1.0;
    constexpr double inf = std::numeric_limits<double>::infinity();
    return Slab(std::move(e), -inf, inf);
  }

  std::size_t dimension() const noexcept { return direction_.size(); }
  const Vector& direction() const noexcept { return direction_; }
  double lower() const noexcept { return lower_; }
  double upper() const noexcept { return upper_; }
  bool is_empty() const noexcept { return empty_; }
  bool is_unbounded() const noexcept {
    return std::isinf(lower_) && lower_ < 0 && std::isinf(upper_) && upper_ > 0;
  }

  /// Same direction, bounds intersected with [lower, upper].
  Slab tightened(double lower, double upper) const {
    Slab s = *this;
    s.lower_ = std::max(lower_, lower);
    s.upper_ = std::min(upper_, upper);
    s.empty_ = s.lower_ > s.upper_;
    return s;
  }

  void require_nonempty() const {
    if (empty_) throw EmptySetError("slab is empty (lower bound exceeds upper bound)");
  }

 private:
  Vector direction_;
  double lower_ = 0.0;
  double upper_ = 0.0;
  bool empty_ = false;
};

/// Axis-aligned box [lower, upper] (componentwise).
class Box {
 public:
  Box(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.empty()) throw InvalidArgument("box must have n >= 1");
    lower_.check_same(upper_);
    for (std::size_t i = 0; i < lower_.size(); ++i) {
      if (!(lower_[i] <= upper_[i])) {
        throw InvalidArgument("box lower bound exceeds upper bound in coordinate " +
                              std::to_string(i));
      }
    }
  }

  static Box cube(std::size_t n, double lo, double hi) {
    return Box(Vector(n, lo), Vector(n, hi));
  }

  std::size_t dimension() const noexcept { return lower_.size(); }
  const Vector& lower() const noexcept { return lower_; }
  const Vector& upper() const noexcept { return upper_; }

 private:
  Vector lower_;
  Vector upper_;
};

/// {x : normal' x <= offset} with a unit-norm normal.
class Halfspace {
 public:
  Halfspace(Vector normal, double offset) {
    if (!std::isfinite(offset)) throw InvalidArgument("halfspace offset is not finite");
    auto [unit, scale] = detail::normalized(std::move(normal), "halfspace normal");
    normal_ = std::move(unit);
    offset_ = offset / scale;
  }

  std::size_t dimension() const noexcept { return normal_.size(); }
  const Vector& normal() const noexcept { return normal_; }
  double offset() const noexcept { return offset_; }

 private:
  Vector normal_;
  double offset_ = 0.0;
};

/// Closed Euclidean ball.
class Ball {
 public:
  Ball(Vector center, double radius) : center_(std::move(center)), radius_(radius) {
    if (center_.empty()) throw InvalidArgument("ball must have n >= 1");
    if (!(radius_ >= 0.0) || !std::isfinite(radius_)) {
      throw InvalidArgument("ball radius must be finite and >= 0");
    }
  }

  std::size_t dimension() const noexcept { return center_.size(); }
  const Vector& center() const noexcept { return center_; }
  double radius() const noexcept { return radius_; }

 private:
  Vector center_;
  double radius_ = 0.0;
};

struct FeasibleSet;

/// Finite intersection of convex sets. Projection goes through Dykstra.
class Intersection {
 public:
  explicit Intersection(std::vector<FeasibleSet> members);

  std::size_t dimension() const noexcept;
  const std::vector<FeasibleSet>& members() const noexcept { return members_; }

 private:
  std::vector<FeasibleSet> members_;
};

/// Closed convex set: one of the concrete shapes above.
struct FeasibleSet {
  using Shape = std::variant<Slab, Box, Halfspace, Ball, Intersection>;

  template <class T>
    requires std::is_constructible_v<Shape, T&&> &&
             (!std::is_same_v<std::remove_cvref_t<T>, FeasibleSet>)
  FeasibleSet(T&& s) : shape(std::forward<T>(s)) {}  // NOLINT(implicit)

  std::size_t dimension() const {
    return std::visit([](const auto& s) { return s.dimension(); }, shape);
  }

  template <class T>
  const T* get_if() const noexcept {
    return std::get_if<T>(&shape);
  }

  Shape shape;
};

inline Intersection::Intersection(std::vector<FeasibleSet> members)
    : members_(std::move(members)) {
  if (members_.empty()) throw InvalidArgument("intersection needs at least one member");
  const std::size_t n = members_.front().dimension();
  for (const auto& m : members_) {
    if (m.dimension() != n) throw DimensionMismatch("intersection members differ in dimension");
  }
}

inline std::size_t Intersection::dimension() const noexcept {
  return members_.front().dimension();
}

// ---------------------------------------------------------------------------
// Projection

inline Vector project(const Slab& s, const Vector& p) {
  s.require_nonempty();
  detail::require_dim(s.dimension(), p);
  const double t = dot(s.direction(), p);
  const double clamped = std::clamp(t, s.lower(), s.upper());
  if (clamped == t) return p;
  Vector q = p;
  q.axpy(clamped - t, s.direction());
  return q;
}

inline Vector project(const Box& b, const Vector& p) {
  detail::require_dim(b.dimension(), p);
  Vector q = p;
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = std::clamp(q[i], b.lower()[i], b.upper()[i]);
  return q;
}

inline Vector project(const Halfspace& h, const Vector& p) {
  detail::require_dim(h.dimension(), p);
  const double excess = dot(h.normal(), p) - h.offset();
  if (excess <= 0.0) return p;
  Vector q = p;
  q.axpy(-excess, h.normal());
  return q;
}

inline Vector project(const Ball& b, const Vector& p) {
  detail::require_dim(b.dimension(), p);
  const double d = distance(p, b.center());
  if (d <= b.radius()) return p;
  Vector q = p - b.center();
  q *= b.radius() / d;
  q += b.center();
  return q;
}

inline Vector project(const Intersection& x, const Vector& p);

inline Vector project(const FeasibleSet& s, const Vector& p) {
  return std::visit([&](const auto& shape) { return project(shape, p); }, s.shape);
}

/// Distance from `p` to a slab: max(0, phi'p - u, l - phi'p).
inline double slab_distance(const Slab& s, const Vector& p) {
  s.require_nonempty();
  detail::require_dim(s.dimension(), p);
  const double t = dot(s.direction(), p);
  return std::max({0.0, t - s.upper(), s.lower() - t});
}

// ---------------------------------------------------------------------------
// Dykstra

/// Projection of `p` onto the intersection of `members` by Dykstra's cyclic
/// algorithm with correction terms. Iterates full sweeps until the iterate
/// and its correction terms both move less than tol/10 over a sweep (the
/// iterate alone can stall while corrections still shift). Throws NoConvergence after
/// `max_sweeps`, which usually means the intersection is empty.
template <class Set>
Vector dykstra_project(std::span<const Set> members, const Vector& p,
                       double tol = kDykstraTol,
                       std::size_t max_sweeps = kDykstraMaxSweeps) {
  if (!(tol > 0.0)) throw InvalidArgument("dykstra tolerance must be > 0");
  if (members.empty()) throw InvalidArgument("dykstra needs at least one member");
  for (const auto& m : members) {
    detail::require_dim(m.dimension(), p);
    if constexpr (std::is_same_v<Set, Slab>) m.require_nonempty();
  }
  const double move_tol = tol / 10.0;
  Vector x = p;
  Vector previous = p;

  if constexpr (std::is_same_v<Set, Slab>) {
    // Correction terms of a slab are always parallel to its direction, so a
    // scalar per member is enough.
    std::vector<double> correction(members.size(), 0.0);
    const std::size_t n = p.size();
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
      double correction_change = 0.0;
      for (std::size_t m = 0; m < members.size(); ++m) {
        const Slab& s = members[m];
        const double* phi = s.direction().data();
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += phi[i] * x[i];
        const double t = proj + correction[m];
        const double clamped = std::clamp(t, s.lower(), s.upper());
        const double next = t - clamped;
        const double step = correction[m] - next;
        if (step != 0.0) {
          for (std::size_t i = 0; i < n; ++i) x[i] += step * phi[i];
        }
        correction_change += step * step;
        correction[m] = next;
      }
      if (correction_change < move_tol * move_tol && distance(x, previous) < move_tol) return x;
      previous = x;
    }
  } else {
    std::vector<Vector> correction(members.size(), Vector(p.size()));
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
      double correction_change = 0.0;
      for (std::size_t m = 0; m < members.size(); ++m) {
        Vector shifted = x + correction[m];
        Vector z = project(members[m], shifted);
        Vector next = shifted - z;
        correction_change += squared_distance(next, correction[m]);
        correction[m] = std::move(next);
        x = std::move(z);
      }
      if (correction_change < move_tol * move_tol && distance(x, previous) < move_tol) return x;
      previous = x;
    }
  }
  throw NoConvergence("dykstra did not converge in " + std::to_string(max_sweeps) +
                      " sweeps; the intersection may be empty");
}

template <class Set>
Vector dykstra_project(const std::vector<Set>& members, const Vector& p,
                       double tol = kDykstraTol,
                       std::size_t max_sweeps = kDykstraMaxSweeps) {
  return dykstra_project(std::span<const Set>(members), p, tol, max_sweeps);
}

inline Vector project(const Intersection& x, const Vector& p) {
  return dykstra_project(x.members(), p);
}

// ---------------------------------------------------------------------------
// Membership

inline double distance_to(const Slab& s, const Vector& p) { return slab_distance(s, p); }

inline double distance_to(const Box& b, const Vector& p) {
  detail::require_dim(b.dimension(), p);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = std::max({0.0, b.lower()[i] - p[i], p[i] - b.upper()[i]});
    acc += d * d;
  }
  return std::sqrt(acc);
}

inline double distance_to(const Halfspace& h, const Vector& p) {
  detail::require_dim(h.dimension(), p);
  return std::max(0.0, dot(h.normal(), p) - h.offset());
}

inline double distance_to(const Ball& b, const Vector& p) {
  detail::require_dim(b.dimension(), p);
  return std::max(0.0, distance(p, b.center()) - b.radius());
}

inline double distance_to(const Intersection& x, const Vector& p) {
  return distance(p, project(x, p));
}

inline double distance_to(const FeasibleSet& s, const Vector& p) {
  return std::visit([&](const auto& shape) { return distance_to(shape, p); }, s.shape);
}

inline bool contains(const FeasibleSet& s, const Vector& p, double tol);

inline bool contains(const Slab& s, const Vector& p, double tol) {
  return slab_distance(s, p) <= tol;
}
inline bool contains(const Box& b, const Vector& p, double tol) { return distance_to(b, p) <= tol; }
inline bool contains(const Halfspace& h, const Vector& p, double tol) {
  return distance_to(h, p) <= tol;
}
inline bool contains(const Ball& b, const Vector& p, double tol) { return distance_to(b, p) <= tol; }
inline bool contains(const Intersection& x, const Vector& p, double tol) {
  return std::all_of(x.members().begin(), x.members().end(),
                     [&](const FeasibleSet& m) { return contains(m, p, tol); });
}

inline bool contains(const FeasibleSet& s, const Vector& p, double tol) {
  if (tol < 0.0) throw InvalidArgument("membership tolerance must be >= 0");
  return std::visit([&](const auto& shape) { return contains(shape, p, tol); }, s.shape);
}

// ---------------------------------------------------------------------------
// Intersection with a new strip

namespace detail {

inline bool same_direction(const Vector& a, const Vector& b) {
  return a.size() == b.size() && distance(a, b) <= 1e-12;
}

// Merges `m` into `s` when the two slabs are parallel.
inline bool merge_parallel(Slab& s, const Slab& m) {
  if (same_direction(s.direction(), m.direction())) {
    s = s.tightened(m.lower(), m.upper());
    return true;
  }
  if (same_direction(s.direction(), -1.0 * m.direction())) {
    s = s.tightened(-m.upper(), -m.lower());
    return true;
  }
  return false;
}

}  // namespace detail

/// Returns `set` intersected with the strip `m`. Parallel strips are merged by
/// tightening bounds, so a node that always measures along the same regressor
/// keeps a single slab. The result may be an empty Slab; callers check.
inline FeasibleSet intersect(const FeasibleSet& set, const Slab& m) {
  if (set.dimension() != m.dimension()) {
    throw DimensionMismatch("measurement strip dimension differs from the set");
  }
  if (const Slab* s = set.get_if<Slab>()) {
    if (s->is_unbounded()) return m;
    Slab merged = *s;
    if (detail::merge_parallel(merged, m)) return merged;
    return Intersection({*s, m});
  }
  if (const Intersection* x = set.get_if<Intersection>()) {
    std::vector<FeasibleSet> members = x->members();
    for (auto& member : members) {
      if (auto* ms = std::get_if<Slab>(&member.shape)) {
        Slab merged = *ms;
        if (detail::merge_parallel(merged, m)) {
          member = merged;
          return Intersection(std::move(members));
        }
      }
    }
    members.emplace_back(m);
    return Intersection(std::move(members));
  }
  return Intersection({set, m});
}

/// True if any slab reachable in `set` is flagged empty.
inline bool has_empty_member(const FeasibleSet& set) {
  if (const Slab* s = set.get_if<Slab>()) return s->is_empty();
  if (const Intersection* x = set.get_if<Intersection>()) {
    return std::any_of(x->members().begin(), x->members().end(), has_empty_member);
  }
  return false;
}

}  // namespace setmember
