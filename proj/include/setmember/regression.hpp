#pragma once

// Linear-regression measurement model with unknown-but-bounded noise:
//   y_i(k) = phi_i' theta* + w_i(k),   |w_i(k)| <= eps_i.
// Each measurement defines a strip; a node's local feasible set is the
// running intersection of its strips, tracked by the max and min sample.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "setmember/error.hpp"
#include "setmember/geometry.hpp"
#include "setmember/vector.hpp"

namespace setmember {

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, a, b), built from the SplitMix64 finalizer. Draws never
/// depend on call order, so measurement streams are reproducible under any
/// schedule.
class CounterRng {
 public:
  enum Stream : std::uint64_t {
    kNoise = 1,
    kTheta = 2,
    kRegressor = 3,
    kNoiseBound = 4,
    kInitial = 5,
    kRunSeed = 6,
  };

  explicit constexpr CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  constexpr std::uint64_t bits(std::uint64_t stream, std::uint64_t a,
                               std::uint64_t b = 0) const noexcept {
    std::uint64_t h = mix(seed_);
    h = mix(h ^ (stream * 0xd1b54a32d192ed03ULL));
    h = mix(h ^ a);
    h = mix(h ^ (b + 0x632be59bd9b4e019ULL));
    return h;
  }

  /// Uniform in [0, 1) with 53 random bits.
  constexpr double unit(std::uint64_t stream, std::uint64_t a, std::uint64_t b = 0) const noexcept {
    return static_cast<double>(bits(stream, a, b) >> 11) * 0x1.0p-53;
  }

  constexpr double uniform(double lo, double hi, std::uint64_t stream, std::uint64_t a,
                           std::uint64_t b = 0) const noexcept {
    return lo + (hi - lo) * unit(stream, a, b);
  }

  /// Standard normal by Box-Muller over two keyed draws.
  double gaussian(std::uint64_t stream, std::uint64_t a, std::uint64_t b = 0) const {
    const double u1 = 1.0 - unit(stream, a, 2 * b);
    const double u2 = unit(stream, a, 2 * b + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
};

struct SensorModel {
  Vector regressor;      // unit norm
  double noise_bound;    // eps_i >= 0

  SensorModel(Vector phi, double eps) : noise_bound(eps) {
    if (!(eps >= 0.0) || !std::isfinite(eps)) {
      throw InvalidArgument("noise bound must be finite and >= 0");
    }
    if (phi.empty() || !phi.all_finite()) throw InvalidArgument("regressor must be finite, n >= 1");
    const double s = norm(phi);
    if (!(s > 0.0)) throw InvalidArgument("regressor is the zero vector");
    if (std::abs(s - 1.0) > 1e-12) phi *= 1.0 / s;
    regressor = std::move(phi);
  }
};

struct Measurement {
  std::size_t node;
  long instant;  // sample index of this node, >= 1
  double value;
};

/// M = {theta : |phi' theta - y| <= eps}.
inline Slab measurement_set(const Measurement& m, const SensorModel& model) {
  return Slab(model.regressor, m.value - model.noise_bound, m.value + model.noise_bound);
}

/// Intersection of all strips seen by one node, kept as the extreme samples.
class RunningSlab {
 public:
  RunningSlab(std::size_t node, SensorModel model) : node_(node), model_(std::move(model)) {}

  std::size_t node() const noexcept { return node_; }
  const SensorModel& model() const noexcept { return model_; }
  std::size_t count() const noexcept { return count_; }
  double max_y() const noexcept { return max_y_; }
  double min_y() const noexcept { return min_y_; }

  /// Bounds cross once the sample spread exceeds 2 eps.
  bool is_empty() const noexcept { return count_ > 0 && max_y_ - min_y_ > 2.0 * model_.noise_bound; }

  /// Derived slab [max_y - eps, min_y + eps]; all of R^n before any sample.
  Slab slab() const {
    if (count_ == 0) return Slab::unbounded(model_.regressor.size());
    return Slab(model_.regressor, max_y_ - model_.noise_bound, min_y_ + model_.noise_bound);
  }

 private:
  friend RunningSlab update_running_slab(RunningSlab rs, const Measurement& m);

  std::size_t node_;
  SensorModel model_;
  double max_y_ = -std::numeric_limits<double>::infinity();
  double min_y_ = std::numeric_limits<double>::infinity();
  std::size_t count_ = 0;
};

inline RunningSlab update_running_slab(RunningSlab rs, const Measurement& m) {
  if (m.node != rs.node_) {
    throw WrongNode("measurement from node " + std::to_string(m.node) +
                    " offered to the running slab of node " + std::to_string(rs.node_));
  }
  rs.max_y_ = std::max(rs.max_y_, m.value);
  rs.min_y_ = std::min(rs.min_y_, m.value);
  ++rs.count_;
  return rs;
}

/// How regressor directions are drawn before normalization.
enum class RegressorLaw {
  Sphere,  // standard Gaussian, normalized: uniform on the unit sphere
  Box,     // uniform in [regressor_lo, regressor_hi]^n, normalized
};

/// Sampling ranges for generated scenarios. Defaults reproduce the
/// reference Monte Carlo setup.
struct ScenarioConfig {
  double theta_lo = -5.0, theta_hi = 5.0;
  RegressorLaw regressor_law = RegressorLaw::Sphere;
  double regressor_lo = 0.0, regressor_hi = 1.0;  // Box law only
  double eps_lo = 0.10, eps_hi = 0.13;
  double init_lo = -5.0, init_hi = 5.0;
  /// Ratio of the bound used to build strips over the true noise bound.
  /// Values below 1 underestimate the noise and can empty local sets.
  double bound_scale = 1.0;

  void validate() const {
    auto range = [](double lo, double hi, const char* name) {
      if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) {
        throw InvalidConfig(std::string("invalid ") + name + " range");
      }
    };
    range(theta_lo, theta_hi, "theta");
    range(regressor_lo, regressor_hi, "regressor");
    range(eps_lo, eps_hi, "noise bound");
    range(init_lo, init_hi, "initial estimate");
    if (eps_lo < 0.0) throw InvalidConfig("noise bound range must be nonnegative");
    if (!(bound_scale >= 0.0) || !std::isfinite(bound_scale)) {
      throw InvalidConfig("bound_scale must be finite and >= 0");
    }
  }
};

/// True parameter, per-node sensors, per-node initial estimates and the
/// noise seed. Immutable once built; measurements are pure functions of it.
struct Scenario {
  Vector theta_star;
  std::vector<SensorModel> sensors;
  std::vector<Vector> initial_estimates;
  std::uint64_t noise_seed = 0;
  double bound_scale = 1.0;

  std::size_t dimension() const noexcept { return theta_star.size(); }
  std::size_t node_count() const noexcept { return sensors.size(); }

  /// The sensor model nodes use to build strips (true bound times bound_scale).
  SensorModel assumed_model(std::size_t node) const {
    const SensorModel& s = sensors.at(node);
    return SensorModel(s.regressor, s.noise_bound * bound_scale);
  }

  void validate() const {
    if (theta_star.empty()) throw InvalidConfig("theta_star must have n >= 1");
    if (sensors.empty()) throw InvalidConfig("scenario needs at least one sensor");
    for (const auto& s : sensors) {
      if (s.regressor.size() != dimension()) throw DimensionMismatch("regressor dimension");
    }
    if (initial_estimates.size() != sensors.size()) {
      throw InvalidConfig("need one initial estimate per node");
    }
    for (const auto& x : initial_estimates) {
      if (x.size() != dimension()) throw DimensionMismatch("initial estimate dimension");
    }
    if (!(bound_scale >= 0.0)) throw InvalidConfig("bound_scale must be >= 0");
  }
};

/// y = phi_i' theta* + w with w uniform on [-eps_i, eps_i], keyed by
/// (noise_seed, node, instant).
inline Measurement measure(const Scenario& sc, std::size_t node, long instant) {
  const SensorModel& s = sc.sensors.at(node);
  const CounterRng rng(sc.noise_seed);
  const double u = rng.unit(CounterRng::kNoise, node, static_cast<std::uint64_t>(instant));
  const double w = s.noise_bound * (2.0 * u - 1.0);
  return Measurement{node, instant, dot(s.regressor, sc.theta_star) + w};
}

/// Draws theta*, unit regressors, noise bounds and initial estimates from
/// `seed`.
inline Scenario generate_scenario(std::size_t n, std::size_t node_count, std::uint64_t seed,
                                  const ScenarioConfig& cfg = {}) {
  if (n < 1) throw InvalidConfig("parameter dimension must be >= 1");
  if (node_count < 1) throw InvalidConfig("node count must be >= 1");
  cfg.validate();
  const CounterRng rng(seed);
  Scenario sc;
  sc.noise_seed = rng.bits(CounterRng::kNoise, 0, 0);
  sc.bound_scale = cfg.bound_scale;
  sc.theta_star = Vector(n);
  for (std::size_t c = 0; c < n; ++c) {
    sc.theta_star[c] = rng.uniform(cfg.theta_lo, cfg.theta_hi, CounterRng::kTheta, c);
  }
  sc.sensors.reserve(node_count);
  sc.initial_estimates.reserve(node_count);
  for (std::size_t i = 0; i < node_count; ++i) {
    Vector phi(n);
    // Redraw in the measure-zero event of an all-zero regressor.
    for (std::uint64_t attempt = 0;; ++attempt) {
      for (std::size_t c = 0; c < n; ++c) {
        const std::uint64_t slot = attempt * n + c;
        if (cfg.regressor_law == RegressorLaw::Sphere) {
          phi[c] = rng.gaussian(CounterRng::kRegressor, i, slot);
        } else {
          phi[c] = rng.uniform(cfg.regressor_lo, cfg.regressor_hi, CounterRng::kRegressor, i, slot);
        }
      }
      if (norm(phi) > 0.0) break;
      if (attempt > 64) throw InvalidConfig("regressor range only produces zero vectors");
    }
    phi *= 1.0 / norm(phi);
    const double eps = rng.uniform(cfg.eps_lo, cfg.eps_hi, CounterRng::kNoiseBound, i);
    sc.sensors.emplace_back(std::move(phi), eps);
    Vector x0(n);
    for (std::size_t c = 0; c < n; ++c) {
      x0[c] = rng.uniform(cfg.init_lo, cfg.init_hi, CounterRng::kInitial, i, c);
    }
    sc.initial_estimates.push_back(std::move(x0));
  }
  return sc;
}

/// Strip source over a scenario: node i's k-th strip is built from
/// measure(scenario, i, k) and the node's assumed noise bound.
class ScenarioSource {
 public:
  explicit ScenarioSource(const Scenario& sc) : scenario_(&sc) {
    sc.validate();
    models_.reserve(sc.node_count());
    for (std::size_t i = 0; i < sc.node_count(); ++i) models_.push_back(sc.assumed_model(i));
  }

  Slab strip(std::size_t node, long sample) const {
    return measurement_set(measure(*scenario_, node, sample), models_.at(node));
  }

  const Scenario& scenario() const noexcept { return *scenario_; }

 private:
  const Scenario* scenario_;
  std::vector<SensorModel> models_;
};

}  // namespace setmember
