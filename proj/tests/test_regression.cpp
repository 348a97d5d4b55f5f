#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "setmember/regression.hpp"
#include "support.hpp"

using namespace setmember;

namespace {

Scenario two_sensor_scenario(double eps) {
  Scenario sc;
  sc.theta_star = Vector{1, 1};
  sc.sensors.emplace_back(Vector{0.6, 0.8}, eps);
  sc.sensors.emplace_back(Vector{1, 0}, eps);
  sc.initial_estimates = {Vector{0, 0}, Vector{0, 0}};
  sc.noise_seed = 99;
  return sc;
}

bool same_scenario(const Scenario& a, const Scenario& b) {
  if (!(a.theta_star == b.theta_star) || a.noise_seed != b.noise_seed) return false;
  if (a.sensors.size() != b.sensors.size()) return false;
  for (std::size_t i = 0; i < a.sensors.size(); ++i) {
    if (!(a.sensors[i].regressor == b.sensors[i].regressor)) return false;
    if (a.sensors[i].noise_bound != b.sensors[i].noise_bound) return false;
    if (!(a.initial_estimates[i] == b.initial_estimates[i])) return false;
  }
  return true;
}

}  // namespace

TEST(Measure, ZeroNoiseIsExact) {
  const Scenario sc = two_sensor_scenario(0.0);
  for (long k = 1; k < 20; ++k) {
    EXPECT_DOUBLE_EQ(measure(sc, 0, k).value, 1.4);
    EXPECT_DOUBLE_EQ(measure(sc, 1, k).value, 1.0);
  }
}

TEST(Measure, NoiseWithinBound) {
  const Scenario sc = generate_scenario(5, 20, 4);
  for (std::size_t i = 0; i < sc.node_count(); ++i) {
    const double clean = dot(sc.sensors[i].regressor, sc.theta_star);
    for (long k = 1; k <= 500; ++k) {
      EXPECT_LE(std::abs(measure(sc, i, k).value - clean), sc.sensors[i].noise_bound);
    }
  }
}

TEST(Measure, PureFunctionOfKey) {
  const Scenario sc = generate_scenario(3, 4, 8);
  const double first = measure(sc, 2, 17).value;
  for (long k = 1; k < 40; ++k) measure(sc, 1, k);
  EXPECT_EQ(measure(sc, 2, 17).value, first);
  EXPECT_NE(measure(sc, 2, 18).value, first);
}

TEST(MeasurementSet, StripAroundSample) {
  const Slab s = measurement_set(Measurement{0, 1, 2.0}, SensorModel(Vector{1, 0}, 0.1));
  EXPECT_DOUBLE_EQ(s.lower(), 1.9);
  EXPECT_DOUBLE_EQ(s.upper(), 2.1);
  EXPECT_EQ(s.direction(), (Vector{1, 0}));
}

TEST(MeasurementSet, ZeroNoiseIsHyperplane) {
  const Slab s = measurement_set(Measurement{0, 1, 0.7}, SensorModel(Vector{0, 1}, 0.0));
  EXPECT_EQ(s.lower(), s.upper());
  EXPECT_FALSE(s.is_empty());
}

TEST(MeasurementSet, ContainsTruthUnderHonestNoise) {
  const Scenario sc = generate_scenario(5, 10, 12);
  for (std::size_t i = 0; i < sc.node_count(); ++i) {
    for (long k = 1; k <= 200; ++k) {
      const Slab s = measurement_set(measure(sc, i, k), sc.sensors[i]);
      EXPECT_TRUE(contains(FeasibleSet(s), sc.theta_star, 0.0));
    }
  }
}

TEST(SensorModel, NormalizesRegressor) {
  const SensorModel m(Vector{3, 4}, 0.5);
  EXPECT_NEAR(norm(m.regressor), 1.0, 1e-15);
}

TEST(RunningSlab, ThreeSamples) {
  RunningSlab rs(0, SensorModel(Vector{1}, 0.1));
  for (double y : {1.0, 1.05, 0.98}) rs = update_running_slab(rs, Measurement{0, 0, y});
  const Slab s = rs.slab();
  EXPECT_NEAR(s.lower(), 0.95, 1e-15);
  EXPECT_NEAR(s.upper(), 1.08, 1e-15);
  EXPECT_EQ(rs.count(), 3u);
}

TEST(RunningSlab, SingleSampleMatchesMeasurementSet) {
  const SensorModel model(Vector{0.6, 0.8}, 0.12);
  const Measurement m{0, 1, 0.33};
  const Slab a = update_running_slab(RunningSlab(0, model), m).slab();
  const Slab b = measurement_set(m, model);
  EXPECT_EQ(a.lower(), b.lower());
  EXPECT_EQ(a.upper(), b.upper());
}

TEST(RunningSlab, WideSpreadIsEmpty) {
  RunningSlab rs(0, SensorModel(Vector{1}, 0.1));
  rs = update_running_slab(rs, Measurement{0, 1, 0.0});
  rs = update_running_slab(rs, Measurement{0, 2, 0.21});
  EXPECT_TRUE(rs.is_empty());
  EXPECT_TRUE(rs.slab().is_empty());
}

TEST(RunningSlab, RejectsForeignNode) {
  const RunningSlab rs(1, SensorModel(Vector{1}, 0.1));
  EXPECT_THROW(update_running_slab(rs, Measurement{0, 1, 0.0}), WrongNode);
}

TEST(RunningSlab, UnboundedBeforeSamples) {
  EXPECT_TRUE(RunningSlab(0, SensorModel(Vector{1, 1}, 0.1)).slab().is_unbounded());
}

TEST(RunningSlab, MembershipMatchesBruteForceIntersection) {
  std::mt19937_64 rng(21);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const Scenario sc = generate_scenario(4, 3, seed);
    for (std::size_t i = 0; i < sc.node_count(); ++i) {
      const SensorModel& model = sc.sensors[i];
      RunningSlab rs(i, model);
      std::vector<Slab> strips;
      for (long k = 1; k <= 60; ++k) {
        const Measurement m = measure(sc, i, k);
        rs = update_running_slab(rs, m);
        strips.push_back(measurement_set(m, model));
      }
      const Slab derived = rs.slab();
      EXPECT_TRUE(contains(FeasibleSet(derived), sc.theta_star, 0.0));
      // Points straddling both faces of the derived slab.
      std::uniform_real_distribution<double> along(derived.lower() - 0.02, derived.upper() + 0.02);
      int inside = 0;
      for (int t = 0; t < 1000; ++t) {
        Vector side = support::random_vector(rng, sc.dimension(), -1, 1);
        side.axpy(-dot(side, model.regressor), model.regressor);
        const Vector z = along(rng) * model.regressor + side;
        bool brute = true;
        for (const Slab& s : strips) brute = brute && contains(FeasibleSet(s), z, 0.0);
        ASSERT_EQ(contains(FeasibleSet(derived), z, 0.0), brute);
        inside += brute;
      }
      EXPECT_GT(inside, 0);
      EXPECT_LT(inside, 1000);
    }
  }
}

TEST(GenerateScenario, DeterministicForSeed) {
  EXPECT_TRUE(same_scenario(generate_scenario(5, 7, 3), generate_scenario(5, 7, 3)));
  EXPECT_FALSE(same_scenario(generate_scenario(5, 7, 3), generate_scenario(5, 7, 4)));
}

TEST(GenerateScenario, DefaultRanges) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Scenario sc = generate_scenario(5, 30, seed);
    for (const auto& s : sc.sensors) {
      EXPECT_GE(s.noise_bound, 0.10);
      EXPECT_LE(s.noise_bound, 0.13);
      EXPECT_NEAR(norm(s.regressor), 1.0, 1e-12);
    }
    for (double v : sc.theta_star) {
      EXPECT_GE(v, -5.0);
      EXPECT_LE(v, 5.0);
    }
    for (const auto& x : sc.initial_estimates) {
      for (double v : x) {
        EXPECT_GE(v, -5.0);
        EXPECT_LE(v, 5.0);
      }
    }
  }
}

TEST(GenerateScenario, BoxLawStaysInNonnegativeOrthant) {
  ScenarioConfig cfg;
  cfg.regressor_law = RegressorLaw::Box;
  const Scenario sc = generate_scenario(5, 50, 2, cfg);
  for (const auto& s : sc.sensors) {
    for (double v : s.regressor) EXPECT_GE(v, 0.0);
    EXPECT_NEAR(norm(s.regressor), 1.0, 1e-12);
  }
}

TEST(GenerateScenario, InvalidConfigs) {
  ScenarioConfig cfg;
  cfg.eps_lo = 0.2;
  cfg.eps_hi = 0.1;
  EXPECT_THROW(generate_scenario(5, 7, 1, cfg), InvalidConfig);
  EXPECT_THROW(generate_scenario(0, 7, 1), InvalidConfig);
  EXPECT_THROW(generate_scenario(5, 0, 1), InvalidConfig);
  ScenarioConfig zero;
  zero.regressor_law = RegressorLaw::Box;
  zero.regressor_lo = zero.regressor_hi = 0.0;
  EXPECT_THROW(generate_scenario(2, 1, 1, zero), InvalidConfig);
}

TEST(ZeroNoise, IndependentRegressorsPinTheTruth) {
  // With exact measurements the strips are hyperplanes meeting only at theta*.
  Scenario sc;
  sc.theta_star = Vector{1, 2};
  sc.sensors.emplace_back(Vector{1, 0}, 0.0);
  sc.sensors.emplace_back(Vector{1, 1}, 0.0);
  sc.initial_estimates = {Vector{0, 0}, Vector{0, 0}};
  std::vector<Slab> strips;
  for (std::size_t i = 0; i < 2; ++i) strips.push_back(measurement_set(measure(sc, i, 1), sc.sensors[i]));
  const Vector q = dykstra_project(strips, Vector{-3, 5}, 1e-12);
  EXPECT_NEAR(q[0], 1.0, 1e-9);
  EXPECT_NEAR(q[1], 2.0, 1e-9);
}

TEST(CounterRng, Reproducible) {
  const CounterRng a(5), b(5), c(6);
  EXPECT_EQ(a.bits(1, 2, 3), b.bits(1, 2, 3));
  EXPECT_NE(a.bits(1, 2, 3), c.bits(1, 2, 3));
  EXPECT_NE(a.bits(1, 2, 3), a.bits(1, 3, 2));
  double sum = 0.0;
  for (std::uint64_t k = 0; k < 20000; ++k) {
    const double u = a.unit(1, 0, k);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 20000.0, 0.5, 0.01);
}
