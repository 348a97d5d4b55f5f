#pragma once

// JSON experiment configs, CSV/JSONL writers, atomic file output.
//
// Config document (every key optional; defaults reproduce the reference
// Monte Carlo setup):
//
//   {
//     "seed": 1,
//     "scenario": { "n": 5, "N": 7, "theta_range": [-5, 5],
//                   "regressor_law": "sphere" | "box", "regressor_range": [0, 1],
//                   "eps_range": [0.10, 0.13], "init_range": [-5, 5],
//                   "bound_scale": 1.0,
//                   // fully explicit alternative to the generated scenario:
//                   "theta_star": [...], "sensors": [{"regressor": [...], "noise_bound": e}],
//                   "initial_estimates": [[...]], "noise_seed": 7 },
//     "estimator": { "mode": "incremental_nstep" | "incremental_1step" | "distributed",
//                    "onestep_batched": false, "stop": "distance" | "max_steps" | "disagreement",
//                    "delta": 1e-3, "eta": 1e-3, "stop_steps": 0, "max_steps": 100000,
//                    "reference": "asymptotic" | "current" },
//     "network":   { "topology": "ring" | "directed_ring" | "complete" | "edges",
//                    "N": 7, "edges": [[from, to], ...],
//                    "weights": "neighbor_average" | "metropolis" | "max_degree" | "explicit",
//                    "matrix": [[...], ...] },
//     "campaign":  { "n": 5, "N_list": [7, 20, 100], "runs_per_N": 100,
//                    "modes": ["incremental_nstep", "distributed_complete", ...],
//                    "delta": 1e-3, "max_steps": 100000, "reference": "asymptotic" }
//   }

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "setmember/error.hpp"
#include "setmember/estimation.hpp"
#include "setmember/harness.hpp"
#include "setmember/network.hpp"
#include "setmember/regression.hpp"

namespace setmember {

inline constexpr int kSchemaVersion = 1;

class IoError : public Error {
 public:
  using Error::Error;
};

struct ScenarioSpec {
  std::size_t n = 5;
  std::size_t node_count = 7;
  ScenarioConfig ranges;
  std::optional<Scenario> explicit_scenario;
};

struct EstimatorSpec {
  Mode mode = Mode::IncrementalNStep;
  bool onestep_batched = false;
  std::string stop = "distance";
  double delta = 1e-3;
  double eta = 1e-3;
  long stop_steps = 0;
  long max_steps = kDefaultMaxSteps;
  ReferenceKind reference = ReferenceKind::Asymptotic;
};

struct NetworkSpec {
  std::string topology = "ring";
  std::optional<std::size_t> node_count;
  std::vector<Graph::Edge> edges;
  std::string weights = "neighbor_average";
  std::vector<std::vector<double>> matrix;
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  ScenarioSpec scenario;
  EstimatorSpec estimator;
  NetworkSpec network;
  CampaignConfig campaign;
};

namespace detail {

using nlohmann::json;

inline Mode parse_mode(const std::string& s) {
  if (s == "incremental_nstep") return Mode::IncrementalNStep;
  if (s == "incremental_1step") return Mode::Incremental1Step;
  if (s == "distributed") return Mode::Distributed;
  throw InvalidConfig("unknown estimator mode '" + s + "'");
}

inline ReferenceKind parse_reference(const std::string& s) {
  if (s == "asymptotic") return ReferenceKind::Asymptotic;
  if (s == "current") return ReferenceKind::CurrentHorizon;
  throw InvalidConfig("unknown reference '" + s + "'");
}

inline Topology parse_topology(const std::string& s) {
  if (s == "complete") return Topology::Complete;
  if (s == "ring") return Topology::Ring;
  if (s == "directed_ring") return Topology::DirectedRing;
  throw InvalidConfig("unknown topology '" + s + "'");
}

inline WeightRule parse_weight_rule(const std::string& s) {
  if (s == "neighbor_average") return WeightRule::NeighborAverage;
  if (s == "metropolis") return WeightRule::Metropolis;
  if (s == "max_degree") return WeightRule::MaxDegree;
  throw InvalidConfig("unknown weight rule '" + s + "'");
}

inline Variant parse_variant(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "incremental_nstep") return Variant::incremental_nstep();
    if (s == "incremental_1step") return Variant::incremental_1step();
    if (s == "distributed_complete") return Variant::distributed_complete();
    if (s == "distributed_ring") return Variant::distributed_ring();
    throw InvalidConfig("unknown campaign mode '" + s + "'");
  }
  Variant v;
  v.mode = parse_mode(j.at("mode").get<std::string>());
  v.topology = parse_topology(j.value("topology", std::string("complete")));
  v.weights = parse_weight_rule(j.value("weights", std::string("neighbor_average")));
  v.label = j.value("label", std::string(to_string(v.mode)) +
                                 (v.mode == Mode::Distributed
                                      ? std::string("_") + to_string(v.topology)
                                      : std::string()));
  return v;
}

inline json variant_json(const Variant& v) {
  return json{{"label", v.label},
              {"mode", to_string(v.mode)},
              {"topology", to_string(v.topology)},
              {"weights", to_string(v.weights)}};
}

inline std::pair<double, double> parse_range(const json& j, const char* key,
                                             std::pair<double, double> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& r = j.at(key);
  if (!r.is_array() || r.size() != 2) throw InvalidConfig(std::string(key) + " must be [lo, hi]");
  return {r[0].get<double>(), r[1].get<double>()};
}

inline Vector parse_vector(const json& j) { return Vector(j.get<std::vector<double>>()); }

inline json vector_json(const Vector& v) { return json(v.values()); }

inline void require_known_keys(const json& j, std::initializer_list<const char*> keys, const char* where) {
  if (!j.is_object()) throw InvalidConfig(std::string(where) + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw InvalidConfig("unknown key '" + it.key() + "' in " + where);
  }
}

}  // namespace detail

inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  using detail::json;
  using detail::require_known_keys;
  ExperimentConfig cfg;
  try {
    require_known_keys(j, {"seed", "scenario", "estimator", "network", "campaign"}, "config");
    cfg.seed = j.value("seed", cfg.seed);

    if (j.contains("scenario")) {
      const json& s = j.at("scenario");
      require_known_keys(s, {"n", "N", "theta_range", "regressor_law", "regressor_range",
                                   "eps_range", "init_range", "bound_scale", "theta_star",
                                   "sensors", "initial_estimates", "noise_seed"},
                               "scenario");
      ScenarioSpec& sp = cfg.scenario;
      ScenarioConfig& r = sp.ranges;
      sp.n = s.value("n", sp.n);
      sp.node_count = s.value("N", sp.node_count);
      std::tie(r.theta_lo, r.theta_hi) = detail::parse_range(s, "theta_range", {r.theta_lo, r.theta_hi});
      std::tie(r.regressor_lo, r.regressor_hi) =
          detail::parse_range(s, "regressor_range", {r.regressor_lo, r.regressor_hi});
      std::tie(r.eps_lo, r.eps_hi) = detail::parse_range(s, "eps_range", {r.eps_lo, r.eps_hi});
      std::tie(r.init_lo, r.init_hi) = detail::parse_range(s, "init_range", {r.init_lo, r.init_hi});
      const std::string law = s.value("regressor_law", std::string("sphere"));
      if (law == "sphere") r.regressor_law = RegressorLaw::Sphere;
      else if (law == "box") r.regressor_law = RegressorLaw::Box;
      else throw InvalidConfig("unknown regressor_law '" + law + "'");
      r.bound_scale = s.value("bound_scale", r.bound_scale);
      if (s.contains("theta_star")) {
        Scenario sc;
        sc.theta_star = detail::parse_vector(s.at("theta_star"));
        for (const auto& sensor : s.at("sensors")) {
          sc.sensors.emplace_back(detail::parse_vector(sensor.at("regressor")),
                                  sensor.at("noise_bound").get<double>());
        }
        for (const auto& x : s.at("initial_estimates")) {
          sc.initial_estimates.push_back(detail::parse_vector(x));
        }
        sc.noise_seed = s.value("noise_seed", std::uint64_t{0});
        sc.bound_scale = r.bound_scale;
        sc.validate();
        sp.n = sc.dimension();
        sp.node_count = sc.node_count();
        sp.explicit_scenario = std::move(sc);
      }
      r.validate();
    }

    if (j.contains("estimator")) {
      const json& e = j.at("estimator");
      require_known_keys(e, {"mode", "onestep_batched", "stop", "delta", "eta",
                                   "stop_steps", "max_steps", "reference"},
                               "estimator");
      EstimatorSpec& es = cfg.estimator;
      if (e.contains("mode")) es.mode = detail::parse_mode(e.at("mode").get<std::string>());
      es.onestep_batched = e.value("onestep_batched", es.onestep_batched);
      es.stop = e.value("stop", es.stop);
      if (es.stop != "distance" && es.stop != "max_steps" && es.stop != "disagreement") {
        throw InvalidConfig("unknown stop rule '" + es.stop + "'");
      }
      es.delta = e.value("delta", es.delta);
      es.eta = e.value("eta", es.eta);
      es.stop_steps = e.value("stop_steps", es.stop_steps);
      es.max_steps = e.value("max_steps", es.max_steps);
      if (e.contains("reference")) es.reference = detail::parse_reference(e.at("reference").get<std::string>());
      if (!(es.delta > 0.0) || !(es.eta > 0.0) || es.max_steps < 1) {
        throw InvalidConfig("estimator delta, eta and max_steps must be positive");
      }
    }

    if (j.contains("network")) {
      const json& nw = j.at("network");
      require_known_keys(nw, {"topology", "N", "edges", "weights", "matrix"}, "network");
      NetworkSpec& ns = cfg.network;
      ns.topology = nw.value("topology", ns.topology);
      if (ns.topology != "edges") detail::parse_topology(ns.topology);
      if (nw.contains("N")) ns.node_count = nw.at("N").get<std::size_t>();
      if (nw.contains("edges")) {
        for (const auto& e : nw.at("edges")) {
          if (!e.is_array() || e.size() != 2) throw InvalidConfig("edges must be [from, to] pairs");
          ns.edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
        }
      }
      ns.weights = nw.value("weights", ns.weights);
      if (ns.weights != "explicit") detail::parse_weight_rule(ns.weights);
      if (nw.contains("matrix")) ns.matrix = nw.at("matrix").get<std::vector<std::vector<double>>>();
      if (ns.weights == "explicit" && ns.matrix.empty()) {
        throw InvalidConfig("explicit weights need a matrix");
      }
    }

    if (j.contains("campaign")) {
      const json& c = j.at("campaign");
      require_known_keys(c, {"n", "N_list", "runs_per_N", "modes", "delta", "max_steps",
                                   "reference"},
                               "campaign");
      CampaignConfig& cc = cfg.campaign;
      cc.n = c.value("n", cc.n);
      if (c.contains("N_list")) cc.node_counts = c.at("N_list").get<std::vector<std::size_t>>();
      cc.runs_per_n = c.value("runs_per_N", cc.runs_per_n);
      if (c.contains("modes")) {
        cc.variants.clear();
        for (const auto& m : c.at("modes")) cc.variants.push_back(detail::parse_variant(m));
      }
      cc.delta = c.value("delta", cc.delta);
      cc.max_steps = c.value("max_steps", cc.max_steps);
      if (c.contains("reference")) cc.reference = detail::parse_reference(c.at("reference").get<std::string>());
    }
    cfg.campaign.seed = cfg.seed;
    cfg.campaign.scenario = cfg.scenario.ranges;
    cfg.campaign.validate();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

inline nlohmann::json experiment_to_json(const ExperimentConfig& cfg) {
  using detail::json;
  const ScenarioConfig& r = cfg.scenario.ranges;
  json scenario{{"n", cfg.scenario.n},
                {"N", cfg.scenario.node_count},
                {"theta_range", {r.theta_lo, r.theta_hi}},
                {"regressor_law", r.regressor_law == RegressorLaw::Sphere ? "sphere" : "box"},
                {"regressor_range", {r.regressor_lo, r.regressor_hi}},
                {"eps_range", {r.eps_lo, r.eps_hi}},
                {"init_range", {r.init_lo, r.init_hi}},
                {"bound_scale", r.bound_scale}};
  if (const auto& sc = cfg.scenario.explicit_scenario) {
    scenario["theta_star"] = detail::vector_json(sc->theta_star);
    json sensors = json::array();
    for (const auto& s : sc->sensors) {
      sensors.push_back({{"regressor", detail::vector_json(s.regressor)}, {"noise_bound", s.noise_bound}});
    }
    scenario["sensors"] = std::move(sensors);
    json inits = json::array();
    for (const auto& x : sc->initial_estimates) inits.push_back(detail::vector_json(x));
    scenario["initial_estimates"] = std::move(inits);
    scenario["noise_seed"] = sc->noise_seed;
  }
  const EstimatorSpec& e = cfg.estimator;
  json estimator{{"mode", to_string(e.mode)},     {"onestep_batched", e.onestep_batched},
                 {"stop", e.stop},                {"delta", e.delta},
                 {"eta", e.eta},                  {"stop_steps", e.stop_steps},
                 {"max_steps", e.max_steps},      {"reference", to_string(e.reference)}};
  const NetworkSpec& ns = cfg.network;
  json network{{"topology", ns.topology}, {"weights", ns.weights}};
  if (ns.node_count) network["N"] = *ns.node_count;
  if (!ns.edges.empty()) {
    json edges = json::array();
    for (const auto& [from, to] : ns.edges) edges.push_back({from, to});
    network["edges"] = std::move(edges);
  }
  if (!ns.matrix.empty()) network["matrix"] = ns.matrix;
  const CampaignConfig& c = cfg.campaign;
  json modes = json::array();
  for (const auto& v : c.variants) modes.push_back(detail::variant_json(v));
  json campaign{{"n", c.n},
                {"N_list", c.node_counts},
                {"runs_per_N", c.runs_per_n},
                {"modes", std::move(modes)},
                {"delta", c.delta},
                {"max_steps", c.max_steps},
                {"reference", to_string(c.reference)}};
  return json{{"seed", cfg.seed},
              {"scenario", std::move(scenario)},
              {"estimator", std::move(estimator)},
              {"network", std::move(network)},
              {"campaign", std::move(campaign)}};
}

/// Replaces the seed everywhere it is consumed.
inline void override_seed(ExperimentConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.campaign.seed = seed;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return experiment_from_json(j);
}

/// FNV-1a over the canonical JSON dump.
inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : experiment_to_json(cfg).dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Building library objects from a config

inline Scenario build_scenario(const ExperimentConfig& cfg) {
  if (cfg.scenario.explicit_scenario) return *cfg.scenario.explicit_scenario;
  return generate_scenario(cfg.scenario.n, cfg.scenario.node_count, cfg.seed, cfg.scenario.ranges);
}

inline Graph build_graph(const NetworkSpec& ns, std::size_t node_count) {
  if (ns.node_count && *ns.node_count != node_count) {
    throw InvalidConfig("network N differs from the scenario's node count");
  }
  if (ns.topology == "edges") {
    std::set<Graph::Edge> edges(ns.edges.begin(), ns.edges.end());
    return Graph(node_count, std::move(edges));
  }
  if (node_count == 1) return Graph(1);
  return build_topology(detail::parse_topology(ns.topology), node_count);
}

inline WeightMatrix build_weight_matrix(const NetworkSpec& ns, const Graph& g) {
  if (ns.weights == "explicit") {
    const std::size_t n = g.node_count();
    if (ns.matrix.size() != n) throw InvalidConfig("weight matrix row count differs from N");
    std::vector<double> flat;
    flat.reserve(n * n);
    for (const auto& row : ns.matrix) {
      if (row.size() != n) throw InvalidConfig("weight matrix is not square");
      flat.insert(flat.end(), row.begin(), row.end());
    }
    return WeightMatrix(n, std::move(flat));
  }
  return build_weights(detail::parse_weight_rule(ns.weights), g);
}

/// Node count the network section describes on its own (for `validate`).
inline std::size_t network_node_count(const ExperimentConfig& cfg) {
  if (cfg.network.node_count) return *cfg.network.node_count;
  if (!cfg.network.matrix.empty()) return cfg.network.matrix.size();
  return cfg.scenario.node_count;
}

inline Estimator build_estimator(const ExperimentConfig& cfg, const Scenario& sc) {
  if (cfg.estimator.mode == Mode::Distributed) {
    const Graph g = build_graph(cfg.network, sc.node_count());
    return Estimator::distributed(sc.initial_estimates, g, build_weight_matrix(cfg.network, g));
  }
  return Estimator::incremental(sc.initial_estimates, cfg.estimator.mode,
                                cfg.estimator.onestep_batched);
}

inline StoppingRule build_stop(const ExperimentConfig& cfg, const Scenario& sc) {
  const EstimatorSpec& e = cfg.estimator;
  if (e.stop == "max_steps") return StoppingRule::max_steps(e.stop_steps > 0 ? e.stop_steps : e.max_steps);
  if (e.stop == "disagreement") return StoppingRule::disagreement(e.eta);
  return reference_stop(sc, e.reference, e.delta);
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes through a temporary sibling and renames, so `path` either holds
/// the full content or is untouched.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) {
      out.close();
      std::filesystem::remove(tmp);
      throw IoError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

/// Columns: k, node, x0..x{n-1}, dist_to_reference, disagreement.
inline std::string trajectory_csv(const Trajectory& t) {
  std::ostringstream out;
  const std::size_t n = t.records.empty() ? 0 : t.records.front().estimates.front().size();
  out << "k,node";
  for (std::size_t c = 0; c < n; ++c) out << ",x" << c;
  out << ",dist_to_reference,disagreement\n";
  for (const auto& rec : t.records) {
    for (std::size_t i = 0; i < rec.estimates.size(); ++i) {
      out << rec.k << ',' << i;
      for (double v : rec.estimates[i]) out << ',' << format_double(v);
      out << ',' << format_double(rec.distances[i]) << ',' << format_double(rec.disagreement) << '\n';
    }
  }
  return out.str();
}

/// Columns: mode, N, mean, std, failures, runs, censored.
inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream out;
  out << "mode,N,mean,std,failures,runs,censored\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.label << ',' << r.node_count << ',';
    std::snprintf(buf, sizeof buf, "%.6f,%.6f", r.mean, r.stddev);
    out << buf << ',' << r.failures << ',' << r.runs << ',' << r.censored << '\n';
  }
  return out.str();
}

/// One JSON object per run.
inline std::string runs_jsonl(const CampaignResult& result) {
  std::ostringstream out;
  for (const auto& r : result.runs) {
    nlohmann::json j{{"mode", r.label},
                     {"N", r.node_count},
                     {"run", r.run},
                     {"seed", r.seed},
                     {"iterations", r.iterations},
                     {"status", to_string(r.status)},
                     {"final_disagreement", r.final_disagreement},
                     {"max_final_distance", r.max_final_distance}};
    out << j.dump() << '\n';
  }
  return out.str();
}

}  // namespace setmember
