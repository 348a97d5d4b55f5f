#pragma once

// Command-line front end: `run`, `campaign` and `validate`.
//
// Exit codes: 0 ok, 1 I/O error, 2 usage or config error, 3 no convergence
// within the step budget, 4 infeasible (empty local set, or a network that
// fails validation).

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "setmember/error.hpp"
#include "setmember/harness.hpp"
#include "setmember/io.hpp"

namespace setmember::cli {

enum ExitCode : int { kOk = 0, kIoError = 1, kUsage = 2, kNoStop = 3, kInfeasible = 4 };

class UsageError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept { return kUsage; }
};

struct CliConfig {
  enum class Command { Run, Campaign, Validate, Help };
  Command command = Command::Help;
  std::filesystem::path config_path;
  std::filesystem::path output_dir = ".";
  std::optional<std::uint64_t> seed;
  int verbosity = 1;  // 0 quiet, 1 normal, 2 verbose
  bool dump_config = false;
  std::string help_text;
};

inline CliConfig parse_args(const std::vector<std::string>& args) {
  CliConfig cfg;
  CLI::App app{"Set-membership parameter estimation over sensor networks", "setmember"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::vector<CLI::Option*> verbose_flags;
  bool quiet = false;
  bool dump = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config, "JSON experiment config")->required();
    sub->add_option("-o,--out", out, "Output directory");
    sub->add_option("--seed", seed, "Override the config seed");
    verbose_flags.push_back(sub->add_flag("-v,--verbose", "More output (repeatable)"));
    sub->add_flag("-q,--quiet", quiet, "Only errors");
    sub->add_flag("--dump-config", dump, "Print the effective config and exit");
  };
  CLI::App* run = app.add_subcommand("run", "Run one scenario and write trajectory.csv");
  CLI::App* campaign = app.add_subcommand("campaign", "Monte Carlo campaign; writes summary.csv and runs.jsonl");
  CLI::App* validate = app.add_subcommand("validate", "Check the network section against the weight assumptions");
  add_common(run);
  add_common(campaign);
  add_common(validate);

  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("setmember");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    cfg.command = CliConfig::Command::Help;
    cfg.help_text = app.help();
    return cfg;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  if (run->parsed()) cfg.command = CliConfig::Command::Run;
  else if (campaign->parsed()) cfg.command = CliConfig::Command::Campaign;
  else if (validate->parsed()) cfg.command = CliConfig::Command::Validate;
  else throw UsageError("expected one command: run, campaign or validate");
  cfg.config_path = config;
  cfg.output_dir = out;
  cfg.seed = seed;
  int verbose = 0;
  for (const CLI::Option* opt : verbose_flags) verbose += static_cast<int>(opt->count());
  cfg.verbosity = quiet ? 0 : 1 + verbose;
  cfg.dump_config = dump;
  return cfg;
}

/// Parallelism for campaigns: SETMEMBER_THREADS if set, else the hardware
/// concurrency.
inline unsigned campaign_threads() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SETMEMBER_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<unsigned>(v);
  }
  return hw;
}

namespace detail {

inline ExperimentConfig load(const CliConfig& cli) {
  ExperimentConfig cfg = load_experiment(cli.config_path);
  if (cli.seed) override_seed(cfg, *cli.seed);
  return cfg;
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }
}

inline std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvalidConfig& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kIoError;
  }
}

}  // namespace detail

inline int cmd_run(const CliConfig& cli, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&]() -> int {
    const ExperimentConfig cfg = detail::load(cli);
    if (cli.dump_config) {
      out << experiment_to_json(cfg).dump(2) << '\n';
      return kOk;
    }
    detail::ensure_dir(cli.output_dir);
    const Scenario sc = build_scenario(cfg);
    const ScenarioSource source(sc);
    Estimator est = build_estimator(cfg, sc);
    const StoppingRule stop = build_stop(cfg, sc);

    nlohmann::json manifest{{"schema_version", kSchemaVersion},
                            {"command", "run"},
                            {"seed", cfg.seed},
                            {"config_hash", detail::hex(config_hash(cfg))},
                            {"mode", to_string(cfg.estimator.mode)},
                            {"N", sc.node_count()},
                            {"n", sc.dimension()},
                            {"stop", cfg.estimator.stop},
                            {"reference", to_string(cfg.estimator.reference)}};
    const std::filesystem::path manifest_path = cli.output_dir / "manifest.json";
    const std::filesystem::path traj_path = cli.output_dir / "trajectory.csv";
    try {
      const Trajectory t = run_until(est, source, stop, cfg.estimator.max_steps, Recording::Full);
      manifest["status"] = t.stopped ? "converged" : "no_stop";
      manifest["iterations"] = t.steps;
      manifest["final_distances"] = t.final_distances;
      manifest["final_disagreement"] = t.final_disagreement;
      manifest["trajectory_columns"] = "k,node,x0..x{n-1},dist_to_reference,disagreement";
      write_file_atomic(traj_path, trajectory_csv(t));
      write_file_atomic(manifest_path, manifest.dump(2) + "\n");
      if (cli.verbosity > 0) {
        double worst = 0.0;
        for (double d : t.final_distances) worst = std::max(worst, d);
        out << (t.stopped ? "converged" : "no stop") << " after " << t.steps
            << " iterations; max distance to reference " << worst << '\n';
      }
      return t.stopped ? kOk : kNoStop;
    } catch (const EmptySetError& e) {
      std::filesystem::remove(traj_path);
      manifest["status"] = "empty_set";
      manifest["iterations"] = est.clock();
      manifest["empty_node"] = e.node() ? nlohmann::json(*e.node()) : nlohmann::json();
      manifest["empty_instant"] = e.instant() ? nlohmann::json(*e.instant()) : nlohmann::json();
      manifest["error"] = e.what();
      write_file_atomic(manifest_path, manifest.dump(2) + "\n");
      err << "infeasible: " << e.what() << '\n';
      return kInfeasible;
    }
  });
}

inline std::string summary_table(const std::vector<SummaryRow>& rows) {
  std::ostringstream s;
  s << std::left << std::setw(24) << "mode" << std::right << std::setw(6) << "N" << std::setw(14)
    << "mean" << std::setw(14) << "std" << std::setw(10) << "failures" << '\n';
  for (const auto& r : rows) {
    s << std::left << std::setw(24) << r.label << std::right << std::setw(6) << r.node_count
      << std::setw(14) << std::fixed << std::setprecision(3) << r.mean << std::setw(14) << r.stddev
      << std::setw(10) << r.failures << '\n';
  }
  return s.str();
}

inline int cmd_campaign(const CliConfig& cli, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&]() -> int {
    const ExperimentConfig cfg = detail::load(cli);
    if (cli.dump_config) {
      out << experiment_to_json(cfg).dump(2) << '\n';
      return kOk;
    }
    detail::ensure_dir(cli.output_dir);
    const CampaignResult result = run_campaign(cfg.campaign, campaign_threads());
    const auto rows = summarize(result);
    write_file_atomic(cli.output_dir / "summary.csv", summary_csv(rows));
    write_file_atomic(cli.output_dir / "runs.jsonl", runs_jsonl(result));
    nlohmann::json manifest{
        {"schema_version", kSchemaVersion},
        {"command", "campaign"},
        {"seed", cfg.seed},
        {"config_hash", detail::hex(config_hash(cfg))},
        {"summary_columns", "mode,N,mean,std,failures,runs,censored"},
        {"runs_fields", "mode,N,run,seed,iterations,status,final_disagreement,max_final_distance"}};
    write_file_atomic(cli.output_dir / "manifest.json", manifest.dump(2) + "\n");
    if (cli.verbosity > 0) out << summary_table(rows);
    return kOk;
  });
}

inline int cmd_validate(const CliConfig& cli, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&]() -> int {
    const ExperimentConfig cfg = detail::load(cli);
    if (cli.dump_config) {
      out << experiment_to_json(cfg).dump(2) << '\n';
      return kOk;
    }
    const std::size_t count = network_node_count(cfg);
    const Graph g = build_graph(cfg.network, count);
    WeightReport report;
    try {
      report = validate_weights(g, build_weight_matrix(cfg.network, g));
    } catch (const AsymmetricGraph& e) {
      out << "weights: FAIL (" << e.what() << ")\n";
      return kInfeasible;
    }
    auto line = [&](const char* name, bool ok) {
      out << name << ": " << (ok ? "pass" : "FAIL") << '\n';
    };
    line("nonnegative", report.nonnegative);
    line("positive diagonal", report.positive_diagonal);
    line("row-stochastic", report.row_stochastic);
    line("graph-compatible", report.graph_compatible);
    line("strongly connected", report.strongly_connected);
    return report.ok() ? kOk : kInfeasible;
  });
}

/// Full dispatch, as used by the executable.
inline int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliConfig cli;
  try {
    cli = parse_args(args);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }
  switch (cli.command) {
    case CliConfig::Command::Run: return cmd_run(cli, out, err);
    case CliConfig::Command::Campaign: return cmd_campaign(cli, out, err);
    case CliConfig::Command::Validate: return cmd_validate(cli, out, err);
    case CliConfig::Command::Help: out << cli.help_text; return args.empty() ? kUsage : kOk;
  }
  return kUsage;
}

}  // namespace setmember::cli
