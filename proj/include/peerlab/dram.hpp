#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "peerlab/audit.hpp"
#include "peerlab/environment.hpp"
#include "peerlab/estimation.hpp"
#include "peerlab/mechanism.hpp"
#include "peerlab/schedule.hpp"

namespace peerlab {

enum class AssignmentScheme { Cyclic, RandomPermutation };
enum class WarmStartReward { FactCheck, Agreement };
enum class MechanismSolver { RobustLP, Constructive };

std::string to_string(AssignmentScheme s);
std::string to_string(WarmStartReward s);
std::string to_string(MechanismSolver s);
AssignmentScheme assignment_from_string(const std::string& s);
WarmStartReward warm_start_reward_from_string(const std::string& s);
MechanismSolver solver_from_string(const std::string& s);

struct DramConfig {
  std::uint64_t horizon = 1'000'000;
  double epsilon = 1e-3;

  /// Observation-frequency bound. Unset: rho_factor × the true minimum.
  std::optional<double> rho;
  double rho_factor = 0.99;
  /// Per-agent bound on max_x P(X_i = x). Empty: the true values.
  std::vector<double> gamma;
  /// Ambiguity threshold. Unset: eta_safety × min over agents of the true
  /// threshold, then capped at 1/√2.
  std::optional<double> eta_tilde;
  double eta_safety = 0.9;
  /// Replaces the formula-derived warm-start length when set.
  std::optional<std::uint64_t> warm_start;

  ScheduleKind schedule = ScheduleKind::Doubling;
  std::vector<std::uint64_t> custom_boundaries;
  AssignmentScheme assignment = AssignmentScheme::Cyclic;
  WarmStartReward warm_reward = WarmStartReward::FactCheck;
  double warm_reward_scale = 1.0;
  MechanismSolver solver = MechanismSolver::RobustLP;

  /// Audit every deployed mechanism against the true joint law.
  bool audit = true;
  /// Keep every RoundOutcome in the trace (memory heavy for long runs).
  bool record_rounds = false;

  void validate() const;
};

/// Parameters actually used by a run after auto-resolution.
struct ResolvedParameters {
  double rho = 0.0;
  double rho_true = 0.0;
  std::vector<double> gamma;
  std::vector<double> gamma_true;
  double eta_tilde = 0.0;
  double eta_tilde_true = 0.0;
  std::vector<std::string> warnings;
};

/// Resolves ρ, γ and η̃ against the world. Threshold pairs are the cyclic
/// pairs for Cyclic assignment and all ordered pairs otherwise.
ResolvedParameters resolve_parameters(const World& world, const DramConfig& config);

/// Reference of agent i. Cyclic: (i+1) mod N. RandomPermutation: one
/// N-cycle through a uniformly shuffled order.
std::vector<std::size_t> assign_references(std::size_t n_agents, AssignmentScheme scheme,
                                           std::uint64_t seed, std::uint64_t episode);

/// Everything fixed before the first round: parameters, schedule and the
/// radius used in each adaptive epoch.
struct EpisodePlan {
  ResolvedParameters params;
  EpochSchedule schedule;
  std::vector<double> etas;  // etas[k-1] for epoch k
  EstimatorGuarantee estimator = EstimatorGuarantee::empirical();
  /// Epoch count m used to split ε (adaptive-estimator plans only).
  std::size_t epsilon_split_epochs = 0;
};

/// Plan for the fixed empirical-estimator algorithm: τ from the
/// warm-start formula, η_k from the confidence schedule (log T for
/// Doubling/Custom, log log T for KnownT).
EpisodePlan plan_dram(const World& world, const DramConfig& config);

/// Plan for the plug-in estimator variant: η_k = η_{ε/(N m (d+1))}(ρ τ_{k−1}/2)
/// and τ the smallest length whose radius falls below η̃, with m and τ
/// solved jointly.
EpisodePlan plan_dram_plus(const World& world, const DramConfig& config,
                           const EstimatorGuarantee& estimator);

struct AgentEpoch {
  std::size_t agent = 0;
  std::size_t reference = 0;
  double eta = 0.0;
  double delta = 0.0;
  Mechanism mechanism;
  bool fallback = false;
  std::string fallback_reason;
  /// max over conditioning rows (and the unconditional row) of the TV
  /// distance between the estimate and the truth.
  double estimation_error = 0.0;
  std::optional<IcGapReport> gap;
  /// Truthful expected payment under the true law.
  double true_payment = 0.0;
};

struct EpochRecord {
  std::size_t index = 0;
  std::uint64_t start = 0;
  std::uint64_t end = 0;
  double eta = 0.0;
  std::vector<AgentEpoch> agents;
};

struct OracleCalls {
  std::size_t mechanism_solves = 0;
  std::size_t estimator_calls = 0;
};

struct EpisodeTrace {
  std::uint64_t seed = 0;
  std::uint64_t episode = 0;
  std::size_t agents = 0;
  double cost = 0.0;
  double label_cost = 0.0;
  std::vector<std::size_t> references;
  EpochSchedule schedule;
  /// Σ_i payment in each round; index t−1 for round t.
  std::vector<double> round_payments;
  std::vector<EpochRecord> epochs;
  std::vector<RoundOutcome> rounds;
  std::vector<PairCounts> final_counts;
  std::uint64_t observing_actions = 0;
  double total_cost_incurred = 0.0;
  OracleCalls oracle;
  double min_gap = 0.0;
  bool violation = false;
  std::size_t fallbacks = 0;
};

/// Warm-start rounds 1..τ only; returns the per-agent pair counts.
struct WarmStartResult {
  EpisodeTrace trace;
  std::vector<PairCounts> counts;
};
WarmStartResult run_warm_start(const World& world, const DramConfig& config,
                               const std::vector<AgentStrategy>& strategies, std::uint64_t tau,
                               std::uint64_t seed, std::uint64_t episode);

/// Executes one episode under a fixed plan.
EpisodeTrace run_episode(const World& world, const DramConfig& config,
                         const std::vector<AgentStrategy>& strategies, const EpisodePlan& plan,
                         std::uint64_t seed, std::uint64_t episode);

EpisodeTrace run_dram(const World& world, const DramConfig& config,
                      const std::vector<AgentStrategy>& strategies, std::uint64_t seed,
                      std::uint64_t episode);

EpisodeTrace run_dram_plus(const World& world, const DramConfig& config,
                           const std::vector<AgentStrategy>& strategies,
                           const EstimatorGuarantee& estimator, std::uint64_t seed,
                           std::uint64_t episode);

/// Reg(t) = Σ_{s<=t} (payments_s − N c + 1{s <= τ} C_lab).
std::vector<double> regret_series(const std::vector<double>& round_payments, std::size_t n_agents,
                                  double cost, double label_cost, std::uint64_t warm_start);
std::vector<double> regret_series(const EpisodeTrace& trace);

}  // namespace peerlab
