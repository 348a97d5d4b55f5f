#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "setmember/geometry.hpp"
#include "support.hpp"

using namespace setmember;

namespace {

void expect_near(const Vector& a, const Vector& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "component " << i;
}

}  // namespace

TEST(Project, SlabClampsAlongDirection) {
  expect_near(project(Slab({1, 0}, -1, 1), Vector{2, 3}), Vector{1, 3}, 1e-15);
}

TEST(Project, BallCentreIsFixed) {
  expect_near(project(Ball({0, 0}, 1), Vector{0, 0}), Vector{0, 0}, 0);
}

TEST(Project, DiagonalHyperplane) {
  const double r = 1.0 / std::sqrt(2.0);
  expect_near(project(Slab({r, r}, 0, 0), Vector{1, 0}), Vector{0.5, -0.5}, 1e-12);
}

TEST(Project, UnnormalizedDirectionRescalesBounds) {
  // 2x in [0, 2] is x in [0, 1].
  const Slab s({2, 0}, 0, 2);
  EXPECT_NEAR(s.lower(), 0.0, 1e-15);
  EXPECT_NEAR(s.upper(), 1.0, 1e-15);
  expect_near(project(s, Vector{3, 1}), Vector{1, 1}, 1e-15);
}

TEST(Project, BoxHalfspaceBall) {
  expect_near(project(Box::cube(2, 0, 1), Vector{-1, 0.5}), Vector{0, 0.5}, 0);
  expect_near(project(Halfspace({0, 1}, 0), Vector{3, 2}), Vector{3, 0}, 1e-15);
  expect_near(project(Halfspace({0, 1}, 0), Vector{3, -2}), Vector{3, -2}, 0);
  expect_near(project(Ball({0, 0}, 1), Vector{3, 4}), Vector{0.6, 0.8}, 1e-15);
}

TEST(Project, DimensionMismatchThrows) {
  EXPECT_THROW(project(Slab({1, 0}, 0, 1), Vector{1, 2, 3}), DimensionMismatch);
}

TEST(Contains, Examples) {
  EXPECT_TRUE(contains(FeasibleSet(Box::cube(2, 0, 1)), Vector{0.5, 0.5}, 0));
  EXPECT_TRUE(contains(FeasibleSet(Halfspace({0, 1}, 0)), Vector{0, 1e-4}, 1e-3));
  EXPECT_FALSE(contains(FeasibleSet(Slab({1, 0}, 0, 1)), Vector{1.5, 0}, 0.1));
}

TEST(Contains, NegativeToleranceRejected) {
  EXPECT_THROW(contains(FeasibleSet(Slab({1, 0}, 0, 1)), Vector{0, 0}, -1.0), InvalidArgument);
}

TEST(EmptySlab, OperationsThrow) {
  const Slab empty({1, 0}, 1, 0);
  EXPECT_TRUE(empty.is_empty());
  EXPECT_THROW(project(empty, Vector{0, 0}), EmptySetError);
  EXPECT_THROW(slab_distance(empty, Vector{0, 0}), EmptySetError);
  EXPECT_THROW(contains(FeasibleSet(empty), Vector{0, 0}, 0), EmptySetError);
}

TEST(Slab, RejectsDegenerateDirection) {
  EXPECT_THROW(Slab({0, 0}, 0, 1), InvalidArgument);
  EXPECT_THROW(Slab({NAN, 1}, 0, 1), InvalidArgument);
}

TEST(Dykstra, TwoOrthogonalSlabsGiveBoxCorner) {
  const std::vector<Slab> members{Slab({1, 0}, 0, 1), Slab({0, 1}, 0, 1)};
  expect_near(dykstra_project(members, Vector{2, 2}), Vector{1, 1}, 1e-9);
}

TEST(Dykstra, SingleMemberIsPlainProjection) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 50; ++t) {
    const Vector p = support::random_vector(rng, 3, -5, 5);
    const Slab s = support::slab_through(rng, support::random_vector(rng, 3, -1, 1), 0.1, 1);
    expect_near(dykstra_project(std::vector<Slab>{s}, p), project(s, p), 1e-12);
    const Ball b({0, 0, 0}, 1.5);
    expect_near(dykstra_project(std::vector<FeasibleSet>{b}, p), project(b, p), 1e-12);
  }
}

TEST(Dykstra, SlabPairMatchesGridOracle) {
  const double r = 1.0 / std::sqrt(2.0);
  const std::vector<Slab> members{Slab({1, 0}, 0, 1), Slab({r, r}, 1.2, 2)};
  const Vector p{0, 0};
  // (0.6, 0.6)*sqrt2 ... any point of the intersection works as the anchor.
  const Vector anchor{0.9, 0.9};
  ASSERT_TRUE(contains(FeasibleSet(Intersection({members[0], members[1]})), anchor, 0));
  const Vector oracle = support::grid_project_2d(members, p, anchor);
  expect_near(dykstra_project(members, p), oracle, 1e-3);
}

TEST(Dykstra, RandomInstancesMatchGridOracle) {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int t = 0; t < 60; ++t) {
    const Vector anchor = support::random_vector(rng, 2, -1, 1);
    const int count = 2 + t % 2;
    std::vector<Slab> members;
    for (int m = 0; m < count; ++m) members.push_back(support::slab_through(rng, anchor, 0.2, 1.5));
    const Vector p = support::random_vector(rng, 2, -3, 3);
    const Vector oracle = support::grid_project_2d(members, p, anchor);
    const Vector dyk = dykstra_project(members, p, 1e-10);
    EXPECT_LE(distance(dyk, oracle), 1e-3) << "instance " << t;
    ++checked;
  }
  EXPECT_GE(checked, 50);
}

TEST(Dykstra, HandlesMixedShapes) {
  const std::vector<FeasibleSet> members{Ball({0, 0}, 1), Halfspace({1, 0}, 0.5)};
  const Vector q = dykstra_project(members, Vector{2, 0}, 1e-10);
  expect_near(q, Vector{0.5, 0}, 1e-6);
}

TEST(Dykstra, RejectsEmptyInput) {
  EXPECT_THROW(dykstra_project(std::vector<Slab>{}, Vector{0.0}), InvalidArgument);
}

TEST(SlabDistance, Examples) {
  EXPECT_DOUBLE_EQ(slab_distance(Slab({1, 0}, -1, 1), Vector{3, 7}), 2.0);
  EXPECT_DOUBLE_EQ(slab_distance(Slab({1, 0}, -1, 1), Vector{0.5, 7}), 0.0);
  EXPECT_NEAR(slab_distance(Slab({0.6, 0.8}, 0, 1), Vector{2, 1}), 1.0, 1e-15);
}

TEST(SlabDistance, EqualsDistanceToProjection) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 1 + t % 6;
    const Slab s = support::slab_through(rng, support::random_vector(rng, n, -2, 2), 0, 2);
    const Vector p = support::random_vector(rng, n, -10, 10);
    EXPECT_NEAR(slab_distance(s, p), distance(p, project(s, p)), 1e-12);
  }
}

TEST(Intersect, MergesParallelSlabs) {
  const FeasibleSet a = Slab({1, 0}, 0, 2);
  const FeasibleSet b = intersect(a, Slab({-1, 0}, -1.5, 0.5));  // x in [-0.5, 1.5]
  const Slab* s = b.get_if<Slab>();
  ASSERT_NE(s, nullptr);
  EXPECT_NEAR(s->lower(), 0.0, 1e-15);
  EXPECT_NEAR(s->upper(), 1.5, 1e-15);
}

TEST(Intersect, UnboundedIsReplaced) {
  const FeasibleSet b = intersect(Slab::unbounded(2), Slab({0, 1}, 1, 2));
  const Slab* s = b.get_if<Slab>();
  ASSERT_NE(s, nullptr);
  EXPECT_EQ(s->lower(), 1.0);
  EXPECT_EQ(s->upper(), 2.0);
}

TEST(Intersect, CrossedBoundsMarkEmpty) {
  const FeasibleSet b = intersect(Slab({1, 0}, 0, 1), Slab({1, 0}, 2, 3));
  EXPECT_TRUE(has_empty_member(b));
}

TEST(Intersect, NonParallelBuildsIntersection) {
  const FeasibleSet b = intersect(Slab({1, 0}, 0, 1), Slab({0, 1}, 0, 1));
  EXPECT_NE(b.get_if<Intersection>(), nullptr);
  expect_near(project(b, Vector{2, 2}), Vector{1, 1}, 1e-9);
}

// --- Fuzzed projection properties -----------------------------------------

namespace {

struct Case {
  FeasibleSet set;
  Vector anchor;  // a point of the set
};

Case random_case(std::mt19937_64& rng, int kind, std::size_t n) {
  const Vector anchor = support::random_vector(rng, n, -1, 1);
  switch (kind) {
    case 0: return {support::slab_through(rng, anchor, 0, 1.5), anchor};
    case 1: {
      Vector lo = anchor, hi = anchor;
      std::uniform_real_distribution<double> w(0, 1.5);
      for (std::size_t i = 0; i < n; ++i) {
        lo[i] -= w(rng);
        hi[i] += w(rng);
      }
      return {Box(lo, hi), anchor};
    }
    case 2: {
      const Vector normal = support::random_unit(rng, n);
      return {Halfspace(normal, dot(normal, anchor) + 0.5), anchor};
    }
    case 3: return {Ball(anchor, std::uniform_real_distribution<double>(0.1, 2)(rng)), anchor};
    default: {
      std::vector<FeasibleSet> members;
      for (int m = 0; m < 3; ++m) members.push_back(support::slab_through(rng, anchor, 0.3, 1.5));
      return {Intersection(members), anchor};
    }
  }
}

// Exact projections for simple shapes; a tight Dykstra for intersections.
Vector tight_project(const FeasibleSet& s, const Vector& p) {
  if (const Intersection* x = s.get_if<Intersection>()) return dykstra_project(x->members(), p, 1e-13);
  return project(s, p);
}

std::vector<Vector> sample_members(std::mt19937_64& rng, const Case& c, std::size_t count) {
  std::vector<Vector> out;
  const std::size_t n = c.anchor.size();
  while (out.size() < count) {
    Vector z = c.anchor + support::random_vector(rng, n, -1.5, 1.5);
    if (contains(c.set, z, 0)) out.push_back(std::move(z));
  }
  return out;
}

}  // namespace

TEST(ProjectionProperties, IdempotentOnFuzzedSets) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 1500; ++t) {
    const Case c = random_case(rng, t % 5, 1 + t % 4);
    const Vector p = support::random_vector(rng, c.anchor.size(), -6, 6);
    const Vector q = tight_project(c.set, p);
    const Vector qq = tight_project(c.set, q);
    EXPECT_LE(distance(q, qq), 1e-9) << "case " << t;
  }
}

TEST(ProjectionProperties, ObtuseAngleOnFuzzedSets) {
  std::mt19937_64 rng(78);
  for (int t = 0; t < 1000; ++t) {
    const Case c = random_case(rng, t % 5, 1 + t % 4);
    const Vector p = support::random_vector(rng, c.anchor.size(), -6, 6);
    const Vector q = tight_project(c.set, p);
    for (const Vector& z : sample_members(rng, c, 100)) {
      EXPECT_LE(dot(p - q, z - q), 1e-9) << "case " << t;
    }
  }
}

TEST(ProjectionProperties, NonexpansiveTowardMembers) {
  std::mt19937_64 rng(79);
  for (int t = 0; t < 1000; ++t) {
    const Case c = random_case(rng, t % 5, 1 + t % 4);
    const Vector p = support::random_vector(rng, c.anchor.size(), -6, 6);
    const Vector q = tight_project(c.set, p);
    for (const Vector& z : sample_members(rng, c, 10)) {
      EXPECT_LE(distance(q, z), distance(p, z) + 1e-9) << "case " << t;
    }
  }
}

TEST(ProjectionProperties, ProjectionLandsInSet) {
  std::mt19937_64 rng(80);
  for (int t = 0; t < 1000; ++t) {
    const Case c = random_case(rng, t % 5, 1 + t % 4);
    const Vector p = support::random_vector(rng, c.anchor.size(), -6, 6);
    EXPECT_TRUE(contains(c.set, tight_project(c.set, p), 1e-9)) << "case " << t;
  }
}
