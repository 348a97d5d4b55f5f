#pragma once

// Monte Carlo campaigns over (estimator variant, N, run) with per-run seeds,
// and summary statistics of the iteration counts.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "setmember/error.hpp"
#include "setmember/estimation.hpp"
#include "setmember/network.hpp"
#include "setmember/reference.hpp"
#include "setmember/regression.hpp"

namespace setmember {

enum class Topology { Complete, Ring, DirectedRing };
enum class WeightRule { NeighborAverage, Metropolis, MaxDegree };

inline const char* to_string(Topology t) {
  switch (t) {
    case Topology::Complete: return "complete";
    case Topology::Ring: return "ring";
    case Topology::DirectedRing: return "directed_ring";
  }
  return "unknown";
}

inline const char* to_string(WeightRule w) {
  switch (w) {
    case WeightRule::NeighborAverage: return "neighbor_average";
    case WeightRule::Metropolis: return "metropolis";
    case WeightRule::MaxDegree: return "max_degree";
  }
  return "unknown";
}

inline Graph build_topology(Topology t, std::size_t n) {
  switch (t) {
    case Topology::Complete: return build_complete(n);
    case Topology::Ring: return build_ring(n, true);
    case Topology::DirectedRing: return build_ring(n, false);
  }
  throw InvalidConfig("unknown topology");
}

inline WeightMatrix build_weights(WeightRule w, const Graph& g) {
  switch (w) {
    case WeightRule::NeighborAverage: return weights_neighbor_average(g);
    case WeightRule::Metropolis: return weights_metropolis(g);
    case WeightRule::MaxDegree: return weights_max_degree(g);
  }
  throw InvalidConfig("unknown weight rule");
}

/// One estimator configuration of a campaign (one curve of the figure).
struct Variant {
  std::string label;
  Mode mode = Mode::IncrementalNStep;
  Topology topology = Topology::Complete;  // distributed mode only
  WeightRule weights = WeightRule::NeighborAverage;

  static Variant incremental_nstep() { return {"incremental_nstep", Mode::IncrementalNStep}; }
  static Variant incremental_1step() { return {"incremental_1step", Mode::Incremental1Step}; }
  static Variant distributed_complete() {
    return {"distributed_complete", Mode::Distributed, Topology::Complete};
  }
  static Variant distributed_ring() {
    return {"distributed_ring", Mode::Distributed, Topology::Ring};
  }
};

inline constexpr long kDefaultMaxSteps = 100000;

/// Set the stopping distance is measured against.
enum class ReferenceKind {
  Asymptotic,      // limit of every local set under the scenario's noise law
  CurrentHorizon,  // intersection of the current local sets X_i(k)
};

inline const char* to_string(ReferenceKind r) {
  return r == ReferenceKind::Asymptotic ? "asymptotic" : "current";
}

/// Limit of each node's running slab as k grows. With noise uniform on
/// [-eps, eps] the extreme samples approach phi'theta* +/- eps, so a strip
/// built with bound s*eps tends to [phi'theta* + (1-s)eps, phi'theta* - (1-s)eps]:
/// the hyperplane phi'theta = phi'theta* for s = 1, empty for s < 1.
inline ReferenceSet asymptotic_reference(const Scenario& sc) {
  sc.validate();
  std::vector<Slab> slabs;
  slabs.reserve(sc.node_count());
  for (const auto& s : sc.sensors) {
    const double centre = dot(s.regressor, sc.theta_star);
    const double gap = (1.0 - sc.bound_scale) * s.noise_bound;
    slabs.emplace_back(s.regressor, centre + gap, centre - gap);
  }
  return ReferenceSet(std::move(slabs));
}

/// Stopping rule for `sc`. An empty asymptotic set means the noise bound is
/// underestimated; the rule then falls back to the current local sets, so
/// the run ends with EmptySetError at the instant a local set empties.
inline StoppingRule reference_stop(const Scenario& sc, ReferenceKind kind, double delta) {
  if (kind == ReferenceKind::Asymptotic) {
    ReferenceSet ref = asymptotic_reference(sc);
    if (!ref.is_empty()) return StoppingRule::distance_to_reference(delta, std::move(ref));
  }
  return StoppingRule::distance_to_reference(delta);
}

struct CampaignConfig {
  std::size_t n = 5;
  std::vector<std::size_t> node_counts{7};
  std::size_t runs_per_n = 100;
  std::vector<Variant> variants{Variant::incremental_nstep(), Variant::distributed_complete(),
                                Variant::distributed_ring(), Variant::incremental_1step()};
  double delta = 1e-3;
  long max_steps = kDefaultMaxSteps;
  std::uint64_t seed = 1;
  ReferenceKind reference = ReferenceKind::Asymptotic;
  ScenarioConfig scenario;

  void validate() const {
    if (n < 1) throw InvalidConfig("n must be >= 1");
    if (node_counts.empty()) throw InvalidConfig("campaign needs at least one N");
    if (runs_per_n < 1) throw InvalidConfig("runs_per_N must be >= 1");
    if (variants.empty()) throw InvalidConfig("campaign needs at least one mode");
    if (!(delta > 0.0)) throw InvalidConfig("delta must be > 0");
    if (max_steps < 1) throw InvalidConfig("max_steps must be >= 1");
    for (std::size_t count : node_counts) {
      if (count < 1) throw InvalidConfig("N must be >= 1");
    }
    scenario.validate();
  }
};

enum class RunStatus { Converged, NoStop, EmptySet };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "converged";
    case RunStatus::NoStop: return "no_stop";
    case RunStatus::EmptySet: return "empty_set";
  }
  return "unknown";
}

struct RunRecord {
  std::string label;
  std::size_t node_count = 0;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  long iterations = 0;
  RunStatus status = RunStatus::Converged;
  double final_disagreement = 0.0;
  double max_final_distance = 0.0;
};

struct CampaignResult {
  CampaignConfig config;
  std::vector<RunRecord> runs;  // ordered by (variant, N, run) as configured

  std::vector<const RunRecord*> cell(const std::string& label, std::size_t node_count) const {
    std::vector<const RunRecord*> out;
    for (const auto& r : runs) {
      if (r.label == label && r.node_count == node_count) out.push_back(&r);
    }
    return out;
  }
};

/// Seed of run `run` at network size `node_count`; the same for every variant.
inline std::uint64_t derive_run_seed(std::uint64_t campaign_seed, std::size_t node_count,
                                     std::size_t run) {
  return CounterRng(campaign_seed).bits(CounterRng::kRunSeed, node_count, run);
}

inline Estimator make_estimator(const Variant& v, const Scenario& sc) {
  if (v.mode == Mode::Distributed) {
    const std::size_t count = sc.node_count();
    if (count == 1) {
      return Estimator::distributed(sc.initial_estimates, Graph(1), WeightMatrix(1, {1.0}));
    }
    const Graph g = build_topology(v.topology, count);
    return Estimator::distributed(sc.initial_estimates, g, build_weights(v.weights, g));
  }
  return Estimator::incremental(sc.initial_estimates, v.mode);
}

/// One Monte Carlo run: generate the scenario from `seed`, run to the
/// distance-to-reference rule, classify the outcome.
inline RunRecord run_single(const Variant& v, std::size_t n, std::size_t node_count,
                            std::uint64_t seed, double delta, long max_steps,
                            const ScenarioConfig& scfg = {},
                            ReferenceKind reference = ReferenceKind::Asymptotic) {
  RunRecord rec;
  rec.label = v.label;
  rec.node_count = node_count;
  rec.seed = seed;
  const Scenario sc = generate_scenario(n, node_count, seed, scfg);
  const ScenarioSource source(sc);
  Estimator est = make_estimator(v, sc);
  try {
    const Trajectory t = run_until(est, source, reference_stop(sc, reference, delta), max_steps);
    rec.iterations = t.steps;
    rec.status = t.stopped ? RunStatus::Converged : RunStatus::NoStop;
    rec.final_disagreement = t.final_disagreement;
    rec.max_final_distance = *std::max_element(t.final_distances.begin(), t.final_distances.end());
  } catch (const EmptySetError& e) {
    rec.status = RunStatus::EmptySet;
    rec.iterations = e.instant().value_or(est.clock());
  }
  return rec;
}

/// Runs every (variant, N, run) cell. `threads` workers pull tasks from a
/// shared counter; results land in fixed slots, so the outcome does not
/// depend on the thread count or completion order.
inline CampaignResult run_campaign(const CampaignConfig& cfg, unsigned threads = 1) {
  cfg.validate();
  struct Task {
    const Variant* variant;
    std::size_t node_count;
    std::size_t run;
  };
  std::vector<Task> tasks;
  for (const auto& v : cfg.variants) {
    for (std::size_t count : cfg.node_counts) {
      for (std::size_t r = 0; r < cfg.runs_per_n; ++r) tasks.push_back({&v, count, r});
    }
  }
  CampaignResult result;
  result.config = cfg;
  result.runs.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= tasks.size() || failed.load()) return;
      const Task& t = tasks[idx];
      try {
        RunRecord rec = run_single(*t.variant, cfg.n, t.node_count,
                                   derive_run_seed(cfg.seed, t.node_count, t.run), cfg.delta,
                                   cfg.max_steps, cfg.scenario, cfg.reference);
        rec.run = t.run;
        result.runs[idx] = std::move(rec);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return result;
}

struct SummaryRow {
  std::string label;
  std::size_t node_count = 0;
  double mean = 0.0;  // over converged runs
  double stddev = 0.0;
  std::size_t runs = 0;
  std::size_t failures = 0;  // NoStop + EmptySet
  std::size_t censored = 0;  // NoStop only
};

/// One row per (variant, N), sorted by label then N. NoStop runs count as
/// failures and are excluded from the statistics.
inline std::vector<SummaryRow> summarize(const CampaignResult& result) {
  if (result.runs.empty()) throw InvalidArgument("cannot summarize an empty campaign");
  std::map<std::pair<std::string, std::size_t>, std::vector<const RunRecord*>> cells;
  for (const auto& r : result.runs) cells[{r.label, r.node_count}].push_back(&r);
  std::vector<SummaryRow> rows;
  for (const auto& [key, recs] : cells) {
    SummaryRow row;
    row.label = key.first;
    row.node_count = key.second;
    row.runs = recs.size();
    std::vector<double> its;
    for (const RunRecord* r : recs) {
      if (r->status == RunStatus::Converged) {
        its.push_back(static_cast<double>(r->iterations));
      } else {
        ++row.failures;
        if (r->status == RunStatus::NoStop) ++row.censored;
      }
    }
    if (!its.empty()) {
      double sum = 0.0;
      for (double x : its) sum += x;
      row.mean = sum / static_cast<double>(its.size());
      if (its.size() > 1) {
        double ss = 0.0;
        for (double x : its) ss += (x - row.mean) * (x - row.mean);
        row.stddev = std::sqrt(ss / static_cast<double>(its.size() - 1));
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace setmember
