#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "peerlab/distributions.hpp"
#include "peerlab/rng.hpp"

namespace peerlab {

struct PriorBounds {
  double lower = 0.0;
  double upper = 1.0;
};

/// The labeling game: label prior, one skill matrix per agent, the
/// observation cost c and the per-round external label cost.
class World {
 public:
  World(DiscreteDistribution prior, std::vector<SkillMatrix> skills, double cost,
        double label_cost, std::optional<PriorBounds> bounds = std::nullopt);

  const DiscreteDistribution& prior() const { return prior_; }
  const SkillMatrix& skill(std::size_t agent) const { return skills_.at(agent); }
  const std::vector<SkillMatrix>& skills() const { return skills_; }
  double cost() const { return cost_; }
  double label_cost() const { return label_cost_; }
  std::size_t agents() const { return skills_.size(); }
  std::size_t labels() const { return prior_.size(); }
  const std::optional<PriorBounds>& bounds() const { return bounds_; }

 private:
  DiscreteDistribution prior_;
  std::vector<SkillMatrix> skills_;
  double cost_;
  double label_cost_;
  std::optional<PriorBounds> bounds_;
};

class AgentStrategy {
 public:
  enum class Kind { Truthful, LazyConstant, LazyRandom, Misreport, Mixed };

  static AgentStrategy truthful();
  static AgentStrategy lazy_constant(std::size_t label);
  static AgentStrategy lazy_random(DiscreteDistribution reports);
  static AgentStrategy misreport(std::vector<std::size_t> mapping);
  static AgentStrategy mixed(std::vector<AgentStrategy> branches, std::vector<double> weights);

  Kind kind() const { return kind_; }
  std::size_t constant() const { return constant_; }
  const std::vector<std::size_t>& mapping() const { return mapping_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<AgentStrategy>& branches() const { return branches_; }
  const std::optional<DiscreteDistribution>& lazy_distribution() const { return lazy_; }

  /// True for the all-truthful pure strategy only.
  bool is_truthful() const { return kind_ == Kind::Truthful; }
  std::string describe() const;

 private:
  Kind kind_ = Kind::Truthful;
  std::size_t constant_ = 0;
  std::optional<DiscreteDistribution> lazy_;
  std::vector<std::size_t> mapping_;
  std::vector<AgentStrategy> branches_;
  std::vector<double> weights_;
};

struct Action {
  std::size_t report = 0;
  double cost = 0.0;
  bool observed = false;
};

struct RoundDraw {
  std::size_t label = 0;
  std::vector<std::size_t> observations;
};

struct RoundOutcome {
  std::uint64_t round = 0;
  std::size_t label = 0;
  std::vector<std::optional<std::size_t>> observations;
  std::vector<std::size_t> reports;
  std::vector<double> payments;
  std::vector<double> costs;
};

/// Label and every agent's potential observation for one round. The result
/// depends only on (seed, episode, round).
RoundDraw sample_round(const World& world, std::uint64_t seed, std::uint64_t episode,
                       std::uint64_t round);
void sample_round(const World& world, std::uint64_t seed, std::uint64_t episode,
                  std::uint64_t round, RoundDraw& out);

/// Resolves a strategy to a report. `observation` is what the agent would
/// see if it chose to look; lazy branches ignore it and pay nothing.
Action apply_strategy(const AgentStrategy& strategy, std::optional<std::size_t> observation,
                      double cost, CounterRng& rng, std::size_t labels);

SkillMatrix symmetric_skill(double accuracy, std::size_t d);

/// p(y|y) >= (upper/lower) p(y|x) for every observation y and label x != y,
/// with skill(label, observation). Under it the indicator reward makes
/// truthful reporting optimal. The row-wise variant
/// p(y|y) >= (upper/lower) p(x|y) does not; see the tests for a counterexample.
bool diagonal_dominance_holds(const SkillMatrix& skill, double prior_lower, double prior_upper);

inline double fact_check_reward(std::size_t report, std::size_t label) {
  return report == label ? 1.0 : 0.0;
}

/// Expected 1{g(X) = Y} for a deterministic map g from observation to report.
double expected_fact_check_reward(const DiscreteDistribution& prior, const SkillMatrix& skill,
                                  const std::vector<std::size_t>& mapping);

struct FactCheckWitness {
  bool truthful_optimal = true;
  double truthful_reward = 0.0;
  double best_reward = 0.0;
  std::vector<std::size_t> best_mapping;
};

/// Enumerates all dᵈ deterministic maps (constant maps are the lazy reports).
/// Throws LimitError for d > 8.
FactCheckWitness fact_check_audit(const DiscreteDistribution& prior, const SkillMatrix& skill,
                                  double tolerance = 1e-12);

}  // namespace peerlab
