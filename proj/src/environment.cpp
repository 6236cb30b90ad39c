#include "peerlab/environment.hpp"

#include <cmath>
#include <numeric>

#include "peerlab/errors.hpp"

namespace peerlab {

World::World(DiscreteDistribution prior, std::vector<SkillMatrix> skills, double cost,
             double label_cost, std::optional<PriorBounds> bounds)
    : prior_(std::move(prior)),
      skills_(std::move(skills)),
      cost_(cost),
      label_cost_(label_cost),
      bounds_(bounds) {
  if (skills_.size() < 2) throw InputError("a world needs at least two agents");
  for (const auto& s : skills_)
    if (s.size() != prior_.size()) throw InputError("skill matrix size differs from the prior");
  if (!(cost_ > 0.0) || !std::isfinite(cost_)) throw InputError("observation cost must be positive");
  if (!(label_cost_ >= 0.0) || !std::isfinite(label_cost_))
    throw InputError("label cost must be nonnegative");
  if (bounds_) {
    if (!(bounds_->lower > 0.0 && bounds_->lower <= bounds_->upper))
      throw InputError("prior bounds need 0 < lower <= upper");
    for (std::size_t y = 0; y < prior_.size(); ++y)
      if (prior_[y] < bounds_->lower - 1e-12 || prior_[y] > bounds_->upper + 1e-12)
        throw InputError("prior mass of label " + std::to_string(y) + " is outside the stated bounds");
  }
}

AgentStrategy AgentStrategy::truthful() { return {}; }

AgentStrategy AgentStrategy::lazy_constant(std::size_t label) {
  AgentStrategy s;
  s.kind_ = Kind::LazyConstant;
  s.constant_ = label;
  return s;
}

AgentStrategy AgentStrategy::lazy_random(DiscreteDistribution reports) {
  AgentStrategy s;
  s.kind_ = Kind::LazyRandom;
  s.lazy_ = std::move(reports);
  return s;
}

AgentStrategy AgentStrategy::misreport(std::vector<std::size_t> mapping) {
  if (mapping.empty()) throw InputError("misreport mapping is empty");
  bool identity = true;
  for (std::size_t x = 0; x < mapping.size(); ++x) {
    if (mapping[x] >= mapping.size()) throw InputError("misreport mapping leaves the alphabet");
    identity = identity && mapping[x] == x;
  }
  if (identity) throw InputError("misreport mapping must differ from the identity");
  AgentStrategy s;
  s.kind_ = Kind::Misreport;
  s.mapping_ = std::move(mapping);
  return s;
}

AgentStrategy AgentStrategy::mixed(std::vector<AgentStrategy> branches, std::vector<double> weights) {
  if (branches.empty() || branches.size() != weights.size())
    throw InputError("mixed strategy needs one weight per branch");
  AgentStrategy s;
  s.kind_ = Kind::Mixed;
  s.weights_ = normalize_probabilities(std::move(weights), "mixed strategy weights");
  s.branches_ = std::move(branches);
  return s;
}

std::string AgentStrategy::describe() const {
  switch (kind_) {
    case Kind::Truthful: return "truthful";
    case Kind::LazyConstant: return "lazy_constant(" + std::to_string(constant_) + ")";
    case Kind::LazyRandom: return "lazy_random";
    case Kind::Misreport: {
      std::string out = "misreport(";
      for (std::size_t x = 0; x < mapping_.size(); ++x)
        out += (x ? "," : "") + std::to_string(mapping_[x]);
      return out + ")";
    }
    case Kind::Mixed: return "mixed(" + std::to_string(branches_.size()) + ")";
  }
  return "unknown";
}

void sample_round(const World& world, std::uint64_t seed, std::uint64_t episode,
                  std::uint64_t round, RoundDraw& out) {
  CounterRng truth({seed, episode, round, lanes::kTruth});
  out.label = truth.categorical(world.prior().probabilities());
  out.observations.resize(world.agents());
  for (std::size_t i = 0; i < world.agents(); ++i) {
    CounterRng obs({seed, episode, round, lanes::kObservationBase + i});
    out.observations[i] = obs.categorical(world.skill(i).matrix().row(out.label));
  }
}

RoundDraw sample_round(const World& world, std::uint64_t seed, std::uint64_t episode,
                       std::uint64_t round) {
  RoundDraw draw;
  sample_round(world, seed, episode, round, draw);
  return draw;
}

Action apply_strategy(const AgentStrategy& strategy, std::optional<std::size_t> observation,
                      double cost, CounterRng& rng, std::size_t labels) {
  using Kind = AgentStrategy::Kind;
  switch (strategy.kind()) {
    case Kind::Truthful:
      if (!observation) throw ProtocolError("truthful strategy has no observation to report");
      return {*observation, cost, true};
    case Kind::Misreport:
      if (!observation) throw ProtocolError("misreport strategy has no observation to map");
      if (strategy.mapping().size() != labels) throw ProtocolError("misreport mapping has wrong size");
      return {strategy.mapping()[*observation], cost, true};
    case Kind::LazyConstant:
      if (strategy.constant() >= labels) throw ProtocolError("lazy report outside alphabet");
      return {strategy.constant(), 0.0, false};
    case Kind::LazyRandom: {
      const auto& dist = *strategy.lazy_distribution();
      if (dist.size() != labels) throw ProtocolError("lazy distribution has wrong size");
      return {rng.categorical(dist.probabilities()), 0.0, false};
    }
    case Kind::Mixed: {
      const std::size_t b = rng.categorical(strategy.weights());
      return apply_strategy(strategy.branches()[b], observation, cost, rng, labels);
    }
  }
  throw ProtocolError("unknown strategy kind");
}

SkillMatrix symmetric_skill(double accuracy, std::size_t d) {
  if (d < 2) throw InputError("alphabet size must be at least 2");
  if (!(accuracy > 0.0 && accuracy <= 1.0)) throw InputError("accuracy must lie in (0, 1]");
  const double off = (1.0 - accuracy) / static_cast<double>(d - 1);
  Matrix m(d, d, off);
  for (std::size_t y = 0; y < d; ++y) m(y, y) = accuracy;
  return SkillMatrix(std::move(m));
}

bool diagonal_dominance_holds(const SkillMatrix& skill, double prior_lower, double prior_upper) {
  const double ratio = prior_upper / prior_lower;
  for (std::size_t y = 0; y < skill.size(); ++y)
    for (std::size_t x = 0; x < skill.size(); ++x)
      if (x != y && skill(y, y) < ratio * skill(x, y)) return false;
  return true;
}

double expected_fact_check_reward(const DiscreteDistribution& prior, const SkillMatrix& skill,
                                  const std::vector<std::size_t>& mapping) {
  const std::size_t d = prior.size();
  if (skill.size() != d || mapping.size() != d) throw InputError("fact-check dimension mismatch");
  double total = 0.0;
  for (std::size_t y = 0; y < d; ++y)
    for (std::size_t x = 0; x < d; ++x)
      if (mapping[x] == y) total += prior[y] * skill(y, x);
  return total;
}

FactCheckWitness fact_check_audit(const DiscreteDistribution& prior, const SkillMatrix& skill,
                                  double tolerance) {
  const std::size_t d = prior.size();
  if (d > 8) throw LimitError("deterministic-map enumeration is limited to d <= 8");
  std::vector<std::size_t> identity(d);
  std::iota(identity.begin(), identity.end(), 0);
  FactCheckWitness w;
  w.truthful_reward = expected_fact_check_reward(prior, skill, identity);
  w.best_reward = w.truthful_reward;
  w.best_mapping = identity;

  std::vector<std::size_t> g(d, 0);
  while (true) {
    const double r = expected_fact_check_reward(prior, skill, g);
    if (r > w.best_reward + tolerance) {
      w.best_reward = r;
      w.best_mapping = g;
      w.truthful_optimal = false;
    }
    std::size_t pos = 0;
    while (pos < d && ++g[pos] == d) g[pos++] = 0;
    if (pos == d) break;
  }
  return w;
}

}  // namespace peerlab
