#include "peerlab/dram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "peerlab/errors.hpp"
#include "peerlab/rng.hpp"

namespace peerlab {

std::string to_string(AssignmentScheme s) {
  return s == AssignmentScheme::Cyclic ? "cyclic" : "random_permutation";
}
std::string to_string(WarmStartReward s) {
  return s == WarmStartReward::FactCheck ? "fact_check" : "agreement";
}
std::string to_string(MechanismSolver s) {
  return s == MechanismSolver::RobustLP ? "robust_lp" : "constructive";
}

AssignmentScheme assignment_from_string(const std::string& s) {
  if (s == "cyclic") return AssignmentScheme::Cyclic;
  if (s == "random_permutation") return AssignmentScheme::RandomPermutation;
  throw ConfigError("unknown assignment '" + s + "' (expected cyclic or random_permutation)");
}
WarmStartReward warm_start_reward_from_string(const std::string& s) {
  if (s == "fact_check") return WarmStartReward::FactCheck;
  if (s == "agreement") return WarmStartReward::Agreement;
  throw ConfigError("unknown warm-start reward '" + s + "' (expected fact_check or agreement)");
}
MechanismSolver solver_from_string(const std::string& s) {
  if (s == "robust_lp") return MechanismSolver::RobustLP;
  if (s == "constructive") return MechanismSolver::Constructive;
  throw ConfigError("unknown solver '" + s + "' (expected robust_lp or constructive)");
}

void DramConfig::validate() const {
  if (horizon < 2) throw ConfigError("horizon must be at least 2 rounds");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie in (0,1)");
  if (rho && !(*rho > 0.0 && *rho < 1.0)) throw ConfigError("rho must lie in (0,1)");
  if (!(rho_factor > 0.0 && rho_factor <= 1.0)) throw ConfigError("rho_factor must lie in (0,1]");
  for (double g : gamma)
    if (!(g > 0.0 && g < 1.0)) throw ConfigError("every gamma must lie in (0,1)");
  if (eta_tilde && !(*eta_tilde > 0.0)) throw ConfigError("eta_tilde must be positive");
  if (!(eta_safety > 0.0 && eta_safety <= 1.0)) throw ConfigError("eta_safety must lie in (0,1]");
  if (!(warm_reward_scale >= 0.0) || !std::isfinite(warm_reward_scale))
    throw ConfigError("warm-start reward scale must be nonnegative");
}

namespace {

Vector focal_marginal(const World& world, std::size_t agent) {
  const std::size_t d = world.labels();
  Vector m(d, 0.0);
  for (std::size_t y = 0; y < d; ++y)
    for (std::size_t x = 0; x < d; ++x) m[x] += world.prior()[y] * world.skill(agent)(y, x);
  return m;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

ResolvedParameters resolve_parameters(const World& world, const DramConfig& config) {
  config.validate();
  const std::size_t n = world.agents();
  ResolvedParameters p;
  p.rho_true = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Vector m = focal_marginal(world, i);
    p.rho_true = std::min(p.rho_true, *std::min_element(m.begin(), m.end()));
    p.gamma_true.push_back(*std::max_element(m.begin(), m.end()));
  }

  if (config.rho) {
    p.rho = *config.rho;
    if (p.rho >= p.rho_true)
      p.warnings.push_back("supplied rho " + fmt(p.rho) + " is not below the true minimum frequency " +
                           fmt(p.rho_true));
  } else {
    p.rho = config.rho_factor * p.rho_true;
  }

  if (config.gamma.empty()) {
    p.gamma = p.gamma_true;
  } else {
    if (config.gamma.size() != n) throw ConfigError("gamma needs one entry per agent");
    p.gamma = config.gamma;
    for (std::size_t i = 0; i < n; ++i)
      if (p.gamma[i] < p.gamma_true[i])
        p.warnings.push_back("supplied gamma for agent " + std::to_string(i) +
                             " is below the true maximum frequency " + fmt(p.gamma_true[i]));
  }

  p.eta_tilde_true = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (config.assignment == AssignmentScheme::Cyclic && j != (i + 1) % n) continue;
      const BeliefMatrix bm = belief_matrix(build_joint(world.prior(), world.skill(i), world.skill(j)));
      p.eta_tilde_true = std::min(p.eta_tilde_true, ambiguity_threshold(bm));
    }
  if (config.eta_tilde) {
    p.eta_tilde = *config.eta_tilde;
    if (p.eta_tilde > p.eta_tilde_true)
      p.warnings.push_back("supplied eta_tilde " + fmt(p.eta_tilde) + " exceeds the true threshold " +
                           fmt(p.eta_tilde_true));
  } else {
    p.eta_tilde = config.eta_safety * p.eta_tilde_true;
  }
  p.eta_tilde = std::min(p.eta_tilde, 1.0 / std::sqrt(2.0));
  return p;
}

std::vector<std::size_t> assign_references(std::size_t n_agents, AssignmentScheme scheme,
                                           std::uint64_t seed, std::uint64_t episode) {
  if (n_agents < 2) throw InputError("reference assignment needs at least two agents");
  std::vector<std::size_t> order(n_agents);
  std::iota(order.begin(), order.end(), 0);
  if (scheme == AssignmentScheme::RandomPermutation) {
    CounterRng rng({seed, episode, 0, lanes::kAssignment});
    for (std::size_t k = n_agents - 1; k > 0; --k)
      std::swap(order[k], order[rng.below(k + 1)]);
  }
  std::vector<std::size_t> ref(n_agents);
  for (std::size_t k = 0; k < n_agents; ++k) ref[order[k]] = order[(k + 1) % n_agents];
  return ref;
}

EpisodePlan plan_dram(const World& world, const DramConfig& config) {
  EpisodePlan plan;
  plan.params = resolve_parameters(world, config);
  const std::size_t d = world.labels();
  const std::size_t n = world.agents();
  const double T = static_cast<double>(config.horizon);

  std::uint64_t tau;
  if (config.schedule == ScheduleKind::Custom) {
    if (config.custom_boundaries.empty()) throw ConfigError("custom schedule needs boundaries");
    tau = config.custom_boundaries.front();
  } else if (config.warm_start) {
    tau = *config.warm_start;
  } else {
    tau = warm_start_length(plan.params.eta_tilde, plan.params.rho, d, n, T, config.epsilon);
  }
  plan.schedule = build_schedule(config.schedule, tau, config.horizon, config.custom_boundaries);

  const HorizonTerm term =
      config.schedule == ScheduleKind::KnownT ? HorizonTerm::LogLogT : HorizonTerm::LogT;
  for (std::size_t k = 1; k <= plan.schedule.adaptive_epochs(); ++k) {
    const auto prev = plan.schedule.boundaries[k - 1];
    plan.etas.push_back(prev == 0 ? std::numeric_limits<double>::infinity()
                                  : eta_schedule(static_cast<double>(prev), d, n, T,
                                                 config.epsilon, plan.params.rho, term));
  }
  return plan;
}

EpisodePlan plan_dram_plus(const World& world, const DramConfig& config,
                           const EstimatorGuarantee& estimator) {
  EpisodePlan plan;
  plan.params = resolve_parameters(world, config);
  plan.estimator = estimator;
  const std::size_t d = world.labels();
  const std::size_t n = world.agents();
  const double rho = plan.params.rho;
  const double target = plan.params.eta_tilde;

  auto split = [&](std::size_t m) {
    return config.epsilon / (static_cast<double>(n) * static_cast<double>(m) * static_cast<double>(d + 1));
  };
  auto smallest_tau = [&](double eps) {
    auto ok = [&](std::uint64_t t) { return estimator.radius(rho * static_cast<double>(t) / 2.0, eps, d) < target; };
    std::uint64_t hi = 1;
    while (!ok(hi)) {
      if (hi > (std::uint64_t{1} << 62)) throw ConfigError("no finite warm start reaches the threshold");
      hi *= 2;
    }
    std::uint64_t lo = hi / 2;  // ok(lo) is false or lo == 0
    while (hi - lo > 1) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      (ok(mid) ? hi : lo) = mid;
    }
    return hi;
  };

  if (config.schedule == ScheduleKind::Custom) {
    if (config.custom_boundaries.empty()) throw ConfigError("custom schedule needs boundaries");
    plan.schedule = build_schedule(config.schedule, config.custom_boundaries.front(), config.horizon,
                                   config.custom_boundaries);
    plan.epsilon_split_epochs = plan.schedule.adaptive_epochs();
  } else if (config.warm_start) {
    plan.schedule = build_schedule(config.schedule, *config.warm_start, config.horizon);
    plan.epsilon_split_epochs = plan.schedule.adaptive_epochs();
  } else {
    // m and τ depend on each other; m only grows, so the loop terminates.
    std::size_t m = 1;
    for (;;) {
      const std::uint64_t tau = smallest_tau(split(m));
      plan.schedule = build_schedule(config.schedule, tau, config.horizon);
      const std::size_t realized = plan.schedule.adaptive_epochs();
      if (realized <= m) break;
      m = realized;
    }
    plan.epsilon_split_epochs = m;
  }

  const double eps = split(plan.epsilon_split_epochs);
  for (std::size_t k = 1; k <= plan.schedule.adaptive_epochs(); ++k) {
    const auto prev = plan.schedule.boundaries[k - 1];
    plan.etas.push_back(prev == 0 ? std::numeric_limits<double>::infinity()
                                  : estimator.radius(rho * static_cast<double>(prev) / 2.0, eps, d));
  }
  return plan;
}

namespace {

AmbiguitySet estimate_set(const PairCounts& counts, const EstimatorGuarantee& estimator) {
  if (estimator.kind() == EstimatorGuarantee::Kind::Empirical) return empirical_conditional(counts);
  const std::size_t d = counts.size();
  AmbiguitySet set;
  set.conditional = Matrix(d, d);
  std::vector<std::uint64_t> focal(d);
  for (std::size_t x = 0; x < d; ++x) {
    const auto row = estimator.estimate(counts.row(x));
    for (std::size_t y = 0; y < d; ++y) set.conditional(x, y) = row[y];
    focal[x] = counts.row_total(x);
  }
  const auto fm = estimator.estimate(focal);
  set.focal_marginal.assign(fm.probabilities().begin(), fm.probabilities().end());
  set.prior_row.assign(d, 0.0);
  for (std::size_t x = 0; x < d; ++x)
    for (std::size_t y = 0; y < d; ++y) set.prior_row[y] += set.focal_marginal[x] * set.conditional(x, y);
  return set;
}

struct TruthPair {
  JointDistribution joint;
  BeliefMatrix belief;
};

class EpisodeRunner {
 public:
  EpisodeRunner(const World& world, const DramConfig& config,
                const std::vector<AgentStrategy>& strategies, std::uint64_t seed,
                std::uint64_t episode, std::uint64_t horizon)
      : world_(world), config_(config), strategies_(strategies), seed_(seed), episode_(episode) {
    const std::size_t n = world.agents();
    if (strategies.size() != n) throw ConfigError("need exactly one strategy per agent");
    trace_.seed = seed;
    trace_.episode = episode;
    trace_.agents = n;
    trace_.cost = world.cost();
    trace_.label_cost = world.label_cost();
    trace_.references = assign_references(n, config.assignment, seed, episode);
    trace_.round_payments.reserve(horizon);
    counts_.assign(n, PairCounts(world.labels()));
    actions_.resize(n);
    mechanisms_.resize(n);
  }

  void play(std::uint64_t first, std::uint64_t last, bool warm) {
    const std::size_t n = world_.agents();
    const std::size_t d = world_.labels();
    const double c = world_.cost();
    for (std::uint64_t t = first; t <= last; ++t) {
      sample_round(world_, seed_, episode_, t, draw_);
      for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng({seed_, episode_, t, lanes::kStrategyBase + i});
        actions_[i] = apply_strategy(strategies_[i], draw_.observations[i], c, rng, d);
        if (actions_[i].observed) {
          ++trace_.observing_actions;
          trace_.total_cost_incurred += actions_[i].cost;
        }
      }
      double total = 0.0;
      RoundOutcome* rec = nullptr;
      if (config_.record_rounds) {
        trace_.rounds.emplace_back();
        rec = &trace_.rounds.back();
        rec->round = t;
        rec->label = draw_.label;
      }
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t zi = actions_[i].report;
        const std::size_t zj = actions_[trace_.references[i]].report;
        double pay;
        if (warm) {
          const double hit = config_.warm_reward == WarmStartReward::FactCheck
                                 ? fact_check_reward(zi, draw_.label)
                                 : (zi == zj ? 1.0 : 0.0);
          pay = config_.warm_reward_scale * hit;
        } else {
          pay = mechanisms_[i]->reward(zi, zj);
        }
        counts_[i].add(zi, zj);
        total += pay;
        if (rec) {
          rec->observations.push_back(actions_[i].observed ? std::optional<std::size_t>(draw_.observations[i])
                                                           : std::nullopt);
          rec->reports.push_back(zi);
          rec->payments.push_back(pay);
          rec->costs.push_back(actions_[i].cost);
        }
      }
      trace_.round_payments.push_back(total);
    }
  }

  void run(const EpisodePlan& plan) {
    trace_.schedule = plan.schedule;
    const std::size_t n = world_.agents();
    const std::size_t d = world_.labels();
    const double c = world_.cost();

    std::vector<TruthPair> truth;
    truth.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      JointDistribution joint =
          build_joint(world_.prior(), world_.skill(i), world_.skill(trace_.references[i]));
      BeliefMatrix belief = belief_matrix(joint);
      truth.push_back({std::move(joint), std::move(belief)});
    }

    play(1, plan.schedule.warm_start(), true);

    trace_.min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k <= plan.schedule.adaptive_epochs(); ++k) {
      EpochRecord epoch;
      epoch.index = k;
      epoch.start = plan.schedule.epoch_start(k);
      epoch.end = plan.schedule.epoch_end(k);
      epoch.eta = plan.etas[k - 1];
      for (std::size_t i = 0; i < n; ++i) {
        AgentEpoch ae;
        ae.agent = i;
        ae.reference = trace_.references[i];
        ae.eta = epoch.eta;
        try {
          ++trace_.oracle.estimator_calls;
          AmbiguitySet set = estimate_set(counts_[i], plan.estimator);
          set.radius = epoch.eta;
          const BeliefMatrix bm = set.belief();
          const double inv = spectral_norm_inverse(bm);
          ae.delta = safety_margin(inv, plan.params.gamma[i], d, c, epoch.eta);
          ++trace_.oracle.mechanism_solves;
          ae.mechanism = config_.solver == MechanismSolver::RobustLP ? solve_robust(bm, c, ae.delta)
                                                                     : constructive_robust(bm, c, ae.delta);
          double err = tv_distance(set.prior_row, truth[i].joint.reference_marginal());
          for (std::size_t x = 0; x < d; ++x)
            err = std::max(err, tv_distance(set.conditional.row(x), truth[i].belief.matrix().row(x)));
          ae.estimation_error = err;
        } catch (const AmbiguityTooLarge& e) {
          if (!mechanisms_[i])
            throw ConfigError(std::string("first adaptive epoch: ") + e.what() +
                              "; lengthen the warm start or lower eta_tilde");
          fallback(ae, e.what());
        } catch (const InsufficientSupport& e) {
          if (!mechanisms_[i]) throw;
          fallback(ae, e.what());
        } catch (const DegenerateSupport& e) {
          if (!mechanisms_[i]) throw;
          fallback(ae, e.what());
        } catch (const SingularBelief& e) {
          if (!mechanisms_[i]) throw;
          fallback(ae, e.what());
        } catch (const InfeasibleMechanism& e) {
          if (!mechanisms_[i]) throw;
          fallback(ae, e.what());
        }
        mechanisms_[i] = ae.mechanism;
        ae.true_payment = expected_truthful_payment(ae.mechanism.reward, truth[i].belief);
        if (config_.audit) {
          ae.gap = ic_gap(ae.mechanism, truth[i].joint);
          trace_.min_gap = std::min(trace_.min_gap, ae.gap->gap);
          if (ae.gap->gap < 0.0) trace_.violation = true;
        }
        epoch.agents.push_back(std::move(ae));
      }
      trace_.epochs.push_back(std::move(epoch));
      play(trace_.epochs.back().start, trace_.epochs.back().end, false);
    }
    if (trace_.epochs.empty() || !config_.audit) trace_.min_gap = 0.0;
    trace_.final_counts = counts_;
  }

  EpisodeTrace take() {
    trace_.final_counts = counts_;
    return std::move(trace_);
  }
  const std::vector<PairCounts>& counts() const { return counts_; }

 private:
  void fallback(AgentEpoch& ae, const char* why) {
    ae.fallback = true;
    ae.fallback_reason = why;
    ae.mechanism = *mechanisms_[ae.agent];
    ae.delta = ae.mechanism.margin;
    ++trace_.fallbacks;
  }

  const World& world_;
  const DramConfig& config_;
  const std::vector<AgentStrategy>& strategies_;
  std::uint64_t seed_;
  std::uint64_t episode_;
  EpisodeTrace trace_;
  std::vector<PairCounts> counts_;
  std::vector<Action> actions_;
  std::vector<std::optional<Mechanism>> mechanisms_;
  RoundDraw draw_;
};

}  // namespace

WarmStartResult run_warm_start(const World& world, const DramConfig& config,
                               const std::vector<AgentStrategy>& strategies, std::uint64_t tau,
                               std::uint64_t seed, std::uint64_t episode) {
  config.validate();
  EpisodeRunner runner(world, config, strategies, seed, episode, tau);
  runner.play(1, tau, true);
  WarmStartResult out;
  out.counts = runner.counts();
  out.trace = runner.take();
  out.trace.schedule.horizon = tau;
  out.trace.schedule.boundaries = {tau};
  return out;
}

EpisodeTrace run_episode(const World& world, const DramConfig& config,
                         const std::vector<AgentStrategy>& strategies, const EpisodePlan& plan,
                         std::uint64_t seed, std::uint64_t episode) {
  config.validate();
  if (plan.etas.size() != plan.schedule.adaptive_epochs())
    throw ConfigError("plan needs one radius per adaptive epoch");
  if (plan.params.gamma.size() != world.agents()) throw ConfigError("plan gamma size mismatch");
  EpisodeRunner runner(world, config, strategies, seed, episode, plan.schedule.horizon);
  runner.run(plan);
  return runner.take();
}

EpisodeTrace run_dram(const World& world, const DramConfig& config,
                      const std::vector<AgentStrategy>& strategies, std::uint64_t seed,
                      std::uint64_t episode) {
  return run_episode(world, config, strategies, plan_dram(world, config), seed, episode);
}

EpisodeTrace run_dram_plus(const World& world, const DramConfig& config,
                           const std::vector<AgentStrategy>& strategies,
                           const EstimatorGuarantee& estimator, std::uint64_t seed,
                           std::uint64_t episode) {
  return run_episode(world, config, strategies, plan_dram_plus(world, config, estimator), seed,
                     episode);
}

std::vector<double> regret_series(const std::vector<double>& round_payments, std::size_t n_agents,
                                  double cost, double label_cost, std::uint64_t warm_start) {
  std::vector<double> out(round_payments.size());
  const double benchmark = static_cast<double>(n_agents) * cost;
  double acc = 0.0;
  for (std::size_t s = 0; s < round_payments.size(); ++s) {
    acc += round_payments[s] - benchmark + (s + 1 <= warm_start ? label_cost : 0.0);
    out[s] = acc;
  }
  return out;
}

std::vector<double> regret_series(const EpisodeTrace& trace) {
  return regret_series(trace.round_payments, trace.agents, trace.cost, trace.label_cost,
                       trace.schedule.boundaries.empty() ? 0 : trace.schedule.warm_start());
}

}  // namespace peerlab
