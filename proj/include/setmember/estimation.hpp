#pragma once

// Set-membership estimators over a network of nodes.
//
//  * Incremental, N-step: one estimate travels around the cycle 0..N-1 and
//    every node projects it onto its local set during a single instant.
//  * Incremental, 1-step: one node is active per instant; it projects the
//    estimate handed over by the previously active node.
//  * Distributed: every node averages its in-neighbors' estimates from the
//    previous instant and projects the average onto its local set.

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "setmember/error.hpp"
#include "setmember/geometry.hpp"
#include "setmember/network.hpp"
#include "setmember/reference.hpp"
#include "setmember/vector.hpp"

namespace setmember {

enum class Mode { IncrementalNStep, Incremental1Step, Distributed };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::IncrementalNStep: return "incremental_nstep";
    case Mode::Incremental1Step: return "incremental_1step";
    case Mode::Distributed: return "distributed";
  }
  return "unknown";
}

struct NodeState {
  Vector estimate;
  FeasibleSet feasible_set;
};

/// Maximum pairwise distance between estimates.
inline double disagreement(std::span<const NodeState> nodes) {
  double worst = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      worst = std::max(worst, distance(nodes[i].estimate, nodes[j].estimate));
    }
  }
  return worst;
}

class Estimator {
 public:
  /// Incremental estimator (N-step or 1-step). Only the last node's initial
  /// estimate is ever read: it seeds the first projection.
  static Estimator incremental(std::vector<Vector> initial, Mode mode, bool onestep_batched = false) {
    if (mode == Mode::Distributed) throw InvalidArgument("use Estimator::distributed");
    return Estimator(mode, std::move(initial), std::nullopt, onestep_batched);
  }

  /// Distributed estimator. The weights must satisfy validate_weights on `g`;
  /// the check (including strong connectivity) happens here, once.
  static Estimator distributed(std::vector<Vector> initial, const Graph& g, WeightMatrix weights) {
    if (g.node_count() != initial.size()) {
      throw BatchSizeMismatch("graph size differs from the number of initial estimates");
    }
    const WeightReport report = validate_weights(g, weights);
    if (!report.ok()) {
      std::string msg = "weights violate:";
      for (const auto& v : report.violations) msg += " [" + v + "]";
      throw InvalidArgument(msg);
    }
    return Estimator(Mode::Distributed, std::move(initial), std::move(weights), false);
  }

  Mode mode() const noexcept { return mode_; }
  bool onestep_batched() const noexcept { return batched_; }
  long clock() const noexcept { return clock_; }
  std::size_t active_index() const noexcept { return active_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t dimension() const noexcept { return nodes_.front().estimate.size(); }
  const std::vector<NodeState>& nodes() const noexcept { return nodes_; }
  const std::optional<WeightMatrix>& weights() const noexcept { return weights_; }

  /// Intersects every local set with its new strip, then projects the
  /// travelling estimate through nodes 0..N-1 in order.
  void incremental_cycle_step(std::span<const Slab> batch) {
    require_mode(Mode::IncrementalNStep, "incremental_cycle_step");
    require_batch(batch);
    std::vector<FeasibleSet> sets = intersected(batch);
    std::vector<Vector> estimates;
    estimates.reserve(nodes_.size());
    const Vector* carry = &nodes_.back().estimate;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      estimates.push_back(project(sets[i], *carry));
      carry = &estimates.back();
    }
    commit(std::move(sets), std::move(estimates));
  }

  /// The active node intersects its set with `strip` and projects the
  /// estimate of the previously active node. Activation is cyclic.
  void incremental_onestep(std::size_t node, const Slab& strip) {
    require_mode(Mode::Incremental1Step, "incremental_onestep");
    if (batched_) throw InvalidArgument("estimator was built for batched 1-step updates");
    if (node != active_) {
      throw WrongNode("measurement from node " + std::to_string(node) + " but node " +
                      std::to_string(active_) + " is active");
    }
    if (strip.dimension() != dimension()) throw DimensionMismatch("strip dimension");
    FeasibleSet set = intersect(nodes_[node].feasible_set, strip);
    if (has_empty_member(set)) throw empty_at(node);
    Vector x = project(set, nodes_[source_index()].estimate);
    nodes_[node].feasible_set = std::move(set);
    nodes_[node].estimate = std::move(x);
    advance_clock();
  }

  /// Variant where every node measures at every instant but only the active
  /// node projects.
  void incremental_onestep_batched(std::span<const Slab> batch) {
    require_mode(Mode::Incremental1Step, "incremental_onestep_batched");
    if (!batched_) throw InvalidArgument("estimator was built for single-measurement 1-step updates");
    require_batch(batch);
    std::vector<FeasibleSet> sets = intersected(batch);
    Vector x = project(sets[active_], nodes_[source_index()].estimate);
    for (std::size_t i = 0; i < nodes_.size(); ++i) nodes_[i].feasible_set = std::move(sets[i]);
    nodes_[active_].estimate = std::move(x);
    advance_clock();
  }

  /// Synchronous update: z_i = sum_j a_ij x_j(k) for all i, then
  /// x_i(k+1) = P_{X_i(k+1)}[z_i]. All reads precede all writes.
  void distributed_step(std::span<const Slab> batch) {
    require_mode(Mode::Distributed, "distributed_step");
    require_batch(batch);
    std::vector<FeasibleSet> sets = intersected(batch);
    const std::size_t n = dimension();
    std::vector<Vector> estimates;
    estimates.reserve(nodes_.size());
    Vector z(n);
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      std::fill(z.begin(), z.end(), 0.0);
      for (const auto& [j, w] : in_weights_[i]) z.axpy(w, nodes_[j].estimate);
      estimates.push_back(project(sets[i], z));
    }
    commit(std::move(sets), std::move(estimates));
  }

  /// Node whose estimate the active node projects in 1-step mode.
  std::size_t source_index() const noexcept {
    return (active_ + nodes_.size() - 1) % nodes_.size();
  }

  /// Current intersection of all local sets as slabs, if every local set is
  /// a single slab.
  std::optional<ReferenceSet> slab_reference() const {
    std::vector<Slab> slabs;
    slabs.reserve(nodes_.size());
    for (const auto& node : nodes_) {
      const Slab* s = node.feasible_set.get_if<Slab>();
      if (s == nullptr) return std::nullopt;
      slabs.push_back(*s);
    }
    return ReferenceSet(std::move(slabs));
  }

  /// Distance from `x` to the intersection of all current local sets.
  double distance_to_current_reference(const Vector& x, double tol = kDykstraTol) const {
    if (auto ref = slab_reference()) return distance_to_reference(x, *ref, tol);
    std::vector<FeasibleSet> sets;
    sets.reserve(nodes_.size());
    for (const auto& node : nodes_) sets.push_back(node.feasible_set);
    return distance(x, dykstra_project(sets, x, tol));
  }

 private:
  Estimator(Mode mode, std::vector<Vector> initial, std::optional<WeightMatrix> weights,
            bool batched)
      : mode_(mode), batched_(batched), weights_(std::move(weights)) {
    if (initial.empty()) throw InvalidSize("estimator needs at least one node");
    const std::size_t n = initial.front().size();
    if (n == 0) throw InvalidArgument("estimates must have n >= 1");
    nodes_.reserve(initial.size());
    for (auto& x : initial) {
      if (x.size() != n) throw DimensionMismatch("initial estimates differ in dimension");
      if (!x.all_finite()) throw InvalidArgument("initial estimate is not finite");
      nodes_.push_back(NodeState{std::move(x), Slab::unbounded(n)});
    }
    if (weights_) {
      const std::size_t count = nodes_.size();
      in_weights_.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < count; ++j) {
          const double w = (*weights_)(i, j);
          if (w != 0.0) in_weights_[i].emplace_back(j, w);
        }
      }
    }
  }

  void require_mode(Mode m, const char* op) const {
    if (mode_ != m) {
      throw InvalidArgument(std::string(op) + " called on a " + to_string(mode_) + " estimator");
    }
  }

  void require_batch(std::span<const Slab> batch) const {
    if (batch.size() != nodes_.size()) {
      throw BatchSizeMismatch("batch has " + std::to_string(batch.size()) +
                              " strips for " + std::to_string(nodes_.size()) + " nodes");
    }
    for (const auto& s : batch) {
      if (s.dimension() != dimension()) throw DimensionMismatch("strip dimension");
    }
  }

  EmptySetError empty_at(std::size_t node) const {
    return EmptySetError("local feasible set of node " + std::to_string(node) +
                             " became empty at instant " + std::to_string(clock_ + 1),
                         node, clock_ + 1);
  }

  std::vector<FeasibleSet> intersected(std::span<const Slab> batch) const {
    std::vector<FeasibleSet> sets;
    sets.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      sets.push_back(intersect(nodes_[i].feasible_set, batch[i]));
      if (has_empty_member(sets.back())) throw empty_at(i);
    }
    return sets;
  }

  void commit(std::vector<FeasibleSet> sets, std::vector<Vector> estimates) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      nodes_[i].feasible_set = std::move(sets[i]);
      nodes_[i].estimate = std::move(estimates[i]);
    }
    advance_clock();
  }

  void advance_clock() {
    ++clock_;
    if (mode_ == Mode::Incremental1Step) active_ = (active_ + 1) % nodes_.size();
  }

  Mode mode_;
  bool batched_ = false;
  long clock_ = 0;
  std::size_t active_ = 0;
  std::vector<NodeState> nodes_;
  std::optional<WeightMatrix> weights_;
  std::vector<std::vector<std::pair<std::size_t, double>>> in_weights_;
};

// ---------------------------------------------------------------------------
// Running an estimator against a measurement source

/// Anything that yields node `node`'s strip for its `sample`-th measurement
/// (1-based).
template <class S>
concept StripSource = requires(const S& s, std::size_t node, long sample) {
  { s.strip(node, sample) } -> std::convertible_to<Slab>;
};

/// When `reference` is set, distances are measured against that fixed set;
/// otherwise against the intersection of the estimator's current local sets.
struct StoppingRule {
  enum class Kind { DistanceToReferenceSet, MaxSteps, Disagreement };
  Kind kind = Kind::MaxSteps;
  double threshold = 0.0;
  long steps = 0;
  std::optional<ReferenceSet> reference;

  static StoppingRule distance_to_reference(double delta,
                                            std::optional<ReferenceSet> ref = std::nullopt) {
    if (!(delta > 0.0)) throw InvalidArgument("delta must be > 0");
    return {Kind::DistanceToReferenceSet, delta, 0, std::move(ref)};
  }
  static StoppingRule max_steps(long k) {
    if (k < 1) throw InvalidArgument("step budget must be >= 1");
    return {Kind::MaxSteps, 0.0, k, std::nullopt};
  }
  static StoppingRule disagreement(double eta) {
    if (!(eta > 0.0)) throw InvalidArgument("disagreement threshold must be > 0");
    return {Kind::Disagreement, eta, 0, std::nullopt};
  }
};

struct StepRecord {
  long k = 0;
  std::vector<Vector> estimates;
  std::vector<double> distances;  // to the reference set of the stopping rule
  double disagreement = 0.0;
};

struct Trajectory {
  std::vector<StepRecord> records;  // empty unless recording was requested
  long steps = 0;
  bool stopped = false;  // false: step budget exhausted (NoStop)
  std::vector<Vector> final_estimates;
  std::vector<double> final_distances;
  double final_disagreement = 0.0;
};

enum class Recording { Summary, Full };

namespace detail {

inline std::vector<double> node_distances(const Estimator& est, const ReferenceSet* fixed) {
  std::vector<double> d;
  d.reserve(est.node_count());
  if (fixed != nullptr) {
    for (const auto& node : est.nodes()) d.push_back(distance_to_reference(node.estimate, *fixed));
  } else if (auto ref = est.slab_reference()) {
    for (const auto& node : est.nodes()) d.push_back(distance_to_reference(node.estimate, *ref));
  } else {
    for (const auto& node : est.nodes()) d.push_back(est.distance_to_current_reference(node.estimate));
  }
  return d;
}

inline bool all_within_reference(const Estimator& est, double delta, const ReferenceSet* fixed) {
  std::optional<ReferenceSet> current;
  if (fixed == nullptr) {
    current = est.slab_reference();
    if (current) fixed = &*current;
  }
  if (fixed != nullptr) {
    return std::all_of(est.nodes().begin(), est.nodes().end(), [&](const NodeState& node) {
      return within_reference(node.estimate, *fixed, delta);
    });
  }
  return std::all_of(est.nodes().begin(), est.nodes().end(), [&](const NodeState& node) {
    return est.distance_to_current_reference(node.estimate) <= delta;
  });
}

template <StripSource Source>
void advance(Estimator& est, const Source& source) {
  const std::size_t count = est.node_count();
  const long k = est.clock();
  auto batch_at = [&](long sample) {
    std::vector<Slab> batch;
    batch.reserve(count);
    for (std::size_t i = 0; i < count; ++i) batch.push_back(source.strip(i, sample));
    return batch;
  };
  switch (est.mode()) {
    case Mode::IncrementalNStep: est.incremental_cycle_step(batch_at(k + 1)); break;
    case Mode::Distributed: est.distributed_step(batch_at(k + 1)); break;
    case Mode::Incremental1Step:
      if (est.onestep_batched()) {
        est.incremental_onestep_batched(batch_at(k + 1));
      } else {
        // Only the active node samples; its sample index is its own turn count.
        const std::size_t node = est.active_index();
        const long sample = k / static_cast<long>(count) + 1;
        est.incremental_onestep(node, source.strip(node, sample));
      }
      break;
  }
}

}  // namespace detail

/// Steps `est` until `stop` fires or `max_steps` instants have elapsed.
///
/// The distance rule compares every node's estimate against the rule's
/// reference set, or the intersection of the current local sets when the
/// rule carries none. In unbatched 1-step mode the
/// distance and disagreement rules are evaluated only after every node has
/// had its turn (clock a multiple of N), so the instant count there is
/// exactly N times the cycle count of the N-step estimator. EmptySetError
/// from a step propagates with the offending node and instant.
template <StripSource Source>
Trajectory run_until(Estimator& est, const Source& source, const StoppingRule& stop,
                     long max_steps, Recording recording = Recording::Summary) {
  if (max_steps < 1) throw InvalidArgument("max_steps must be >= 1");
  Trajectory traj;
  const long count = static_cast<long>(est.node_count());
  const bool cycle_gated = est.mode() == Mode::Incremental1Step && !est.onestep_batched();
  const ReferenceSet* fixed = stop.reference ? &*stop.reference : nullptr;
  if (fixed != nullptr && fixed->dimension() != est.dimension()) {
    throw DimensionMismatch("reference set dimension differs from the estimator");
  }
  for (long step = 0; step < max_steps; ++step) {
    detail::advance(est, source);
    ++traj.steps;
    if (recording == Recording::Full) {
      StepRecord rec;
      rec.k = est.clock();
      rec.estimates.reserve(est.node_count());
      for (const auto& node : est.nodes()) rec.estimates.push_back(node.estimate);
      rec.distances = detail::node_distances(est, fixed);
      rec.disagreement = disagreement(est.nodes());
      traj.records.push_back(std::move(rec));
    }
    bool fired = false;
    switch (stop.kind) {
      case StoppingRule::Kind::MaxSteps: fired = traj.steps >= stop.steps; break;
      case StoppingRule::Kind::DistanceToReferenceSet:
        if (!cycle_gated || est.clock() % count == 0) {
          fired = detail::all_within_reference(est, stop.threshold, fixed);
        }
        break;
      case StoppingRule::Kind::Disagreement:
        if (!cycle_gated || est.clock() % count == 0) {
          fired = disagreement(est.nodes()) <= stop.threshold;
        }
        break;
    }
    if (fired) {
      traj.stopped = true;
      break;
    }
  }
  for (const auto& node : est.nodes()) traj.final_estimates.push_back(node.estimate);
  traj.final_distances = detail::node_distances(est, fixed);
  traj.final_disagreement = disagreement(est.nodes());
  return traj;
}

}  // namespace setmember
