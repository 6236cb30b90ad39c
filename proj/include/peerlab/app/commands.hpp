#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "peerlab/app/config.hpp"
#include "peerlab/dram.hpp"

namespace peerlab::app {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,
  kNumericalError = 3,
  kIncentiveFailure = 4,
};

/// Maps a thrown exception to the documented process exit code.
int exit_code_for(const std::exception& e);

struct EpisodeSummary {
  std::uint64_t episode = 0;
  bool ok = false;
  std::string error;
  double final_regret = 0.0;
  double warm_regret = 0.0;
  double adaptive_regret = 0.0;
  double min_gap = 0.0;
  bool violation = false;
  std::size_t fallbacks = 0;
  OracleCalls oracle;
  std::vector<double> curve;  // regret at ResultBundle::curve_rounds
  Json epochs;                // per-epoch snapshot
};

struct ResultBundle {
  std::uint64_t seed = 0;
  std::string config_hash;
  Json config;
  EpisodePlan plan;
  std::vector<std::uint64_t> curve_rounds;
  std::vector<double> mean_regret;
  std::vector<double> std_regret;
  std::vector<EpisodeSummary> episodes;
};

/// Runs every episode (in parallel over `workers` threads) and folds the
/// results in episode order, so the bundle does not depend on `workers`.
ResultBundle run_experiment(const ExperimentConfig& cfg, unsigned workers = 1);

EpisodePlan make_plan(const ExperimentConfig& cfg);

Json summary_json(const ResultBundle& bundle);
std::string regret_csv(const ResultBundle& bundle);
std::string episodes_csv(const ResultBundle& bundle);

/// Writes summary.json, regret.csv and episodes.csv into `dir`.
void write_bundle(const ResultBundle& bundle, const std::filesystem::path& dir);

struct SimulateOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> episodes;
  std::optional<std::uint64_t> stride;
  std::optional<std::string> estimator;
  std::optional<std::string> out;
  unsigned workers = 1;
};

int cmd_solve(const std::filesystem::path& config, bool json_output, std::ostream& out);
int cmd_simulate(const std::filesystem::path& config, const SimulateOverrides& overrides,
                 std::ostream& out);
int cmd_audit(const std::filesystem::path& mechanism, const std::filesystem::path& world,
              std::ostream& out);
int cmd_schedule(const std::optional<std::filesystem::path>& config, const std::string& kind,
                 std::optional<std::uint64_t> tau, std::optional<std::uint64_t> horizon,
                 std::ostream& out);

}  // namespace peerlab::app
