#include <doctest.h>

#include <cmath>
#include <set>

#include "peerlab/dram.hpp"
#include "peerlab/errors.hpp"

using namespace peerlab;

namespace {

World desk_world() {
  return World(DiscreteDistribution::uniform(3),
               {symmetric_skill(0.68, 3), symmetric_skill(0.70, 3), symmetric_skill(0.72, 3)}, 0.3, 3.0);
}

std::vector<AgentStrategy> truthful(std::size_t n) { return std::vector<AgentStrategy>(n, AgentStrategy::truthful()); }

// Small two-label world whose warm start stays in the low thousands.
World small_world() {
  return World(DiscreteDistribution::uniform(2), {symmetric_skill(0.95, 2), symmetric_skill(0.95, 2)}, 0.3, 1.0);
}

DramConfig small_config(std::uint64_t horizon) {
  DramConfig c;
  c.horizon = horizon;
  c.epsilon = 0.1;
  c.eta_safety = 0.7;
  return c;
}

}  // namespace

TEST_SUITE("schedule") {
  TEST_CASE("doubling with clipping") {
    const auto s = build_schedule(ScheduleKind::Doubling, 100, 1500);
    CHECK(s.boundaries == std::vector<std::uint64_t>{100, 200, 400, 800, 1500});
    CHECK(s.adaptive_epochs() == 4);
    CHECK(s.total_epochs() == 5);
    CHECK(s.epoch_start(1) == 101);
    CHECK(s.epoch_end(4) == 1500);
  }

  TEST_CASE("known-horizon schedule") {
    const auto s = build_schedule(ScheduleKind::KnownT, 10, 1000000);
    CHECK(s.boundaries.front() == 10);
    CHECK(s.boundaries.back() == 1000000);
    CHECK(s.adaptive_epochs() <= 6);
    // Epoch k has length ⌈T^{1−2^{−(k−1)}} τ⌉ until the clip.
    for (std::size_t k = 1; k + 1 < s.boundaries.size(); ++k) {
      const double len = std::ceil(std::pow(1e6, 1.0 - std::pow(2.0, -static_cast<double>(k - 1))) * 10.0);
      CHECK(static_cast<double>(s.boundaries[k] - s.boundaries[k - 1]) == len);
    }
  }

  TEST_CASE("custom boundaries pass through after validation") {
    const std::vector<std::uint64_t> b{0, 10, 50, 200};
    CHECK(build_schedule(ScheduleKind::Custom, 0, 200, b).boundaries == b);
    CHECK_THROWS(build_schedule(ScheduleKind::Custom, 0, 200, {0, 50, 50, 200}));
    CHECK_THROWS(build_schedule(ScheduleKind::Custom, 0, 200, {0, 50, 100}));
  }

  TEST_CASE("horizon not beyond the warm start") {
    CHECK_THROWS_AS(build_schedule(ScheduleKind::Doubling, 100, 100), DegenerateHorizon);
    CHECK_THROWS_AS(build_schedule(ScheduleKind::KnownT, 500, 100), DegenerateHorizon);
  }

  TEST_CASE("kind names round-trip") {
    for (auto k : {ScheduleKind::Doubling, ScheduleKind::KnownT, ScheduleKind::Custom})
      CHECK(schedule_kind_from_string(to_string(k)) == k);
  }
}

TEST_SUITE("dram") {
  TEST_CASE("reference assignment") {
    CHECK(assign_references(3, AssignmentScheme::Cyclic, 0, 0) == std::vector<std::size_t>{1, 2, 0});
    for (std::uint64_t e = 0; e < 50; ++e) {
      const auto r = assign_references(6, AssignmentScheme::RandomPermutation, 9, e);
      CHECK(r == assign_references(6, AssignmentScheme::RandomPermutation, 9, e));
      // One 6-cycle: following references from 0 visits every agent.
      std::set<std::size_t> seen;
      std::size_t a = 0;
      for (int k = 0; k < 6; ++k) {
        CHECK(r[a] != a);
        seen.insert(a);
        a = r[a];
      }
      CHECK(seen.size() == 6);
      CHECK(a == 0);
    }
    CHECK_THROWS_AS(assign_references(1, AssignmentScheme::Cyclic, 0, 0), InputError);
  }

  TEST_CASE("desk configuration plan") {
    DramConfig c;
    const auto plan = plan_dram(desk_world(), c);
    CHECK(plan.schedule.warm_start() > 50000);
    CHECK(plan.schedule.warm_start() < 500000);
    CHECK(plan.params.rho == doctest::Approx(0.99 / 3.0));
    CHECK(plan.params.eta_tilde == doctest::Approx(0.9 * plan.params.eta_tilde_true));
    // Radii halve whenever the previous boundary quadruples.
    for (std::size_t k = 2; k + 1 < plan.etas.size(); ++k)
      CHECK(plan.etas[k + 1] == doctest::Approx(plan.etas[k - 1] / 2.0).epsilon(1e-12));
    CHECK(plan.etas.front() <= plan.params.eta_tilde);
  }

  TEST_CASE("warm start collects one pair per round and pays the indicator") {
    const auto w = desk_world();
    DramConfig c;
    const auto ws = run_warm_start(w, c, truthful(3), 2000, 5, 0);
    for (const auto& k : ws.counts) CHECK(k.total() == 2000);
    CHECK(ws.trace.round_payments.size() == 2000);
    const auto reg = regret_series(ws.trace);
    // Each warm round: Σ indicator payments − N c + C_lab.
    double acc = 0.0;
    for (std::size_t t = 0; t < 2000; ++t) {
      acc += ws.trace.round_payments[t] - 0.9 + 3.0;
      CHECK(reg[t] == doctest::Approx(acc).epsilon(1e-12));
    }
    // Expected warm payment per round is Σ_i α_i.
    double mean = 0.0;
    for (double p : ws.trace.round_payments) mean += p;
    CHECK(mean / 2000 == doctest::Approx(2.1).epsilon(0.05));
  }

  TEST_CASE("regret accounting") {
    const std::vector<double> pays(10, 0.6);
    for (double r : regret_series(pays, 2, 0.3, 0.0, 3)) CHECK(r == doctest::Approx(0.0));
    const auto withlab = regret_series(pays, 2, 0.3, 1.5, 3);
    CHECK(withlab[2] == doctest::Approx(4.5));
    CHECK(withlab[9] == doctest::Approx(4.5));
  }

  TEST_CASE("episode trace invariants") {
    const auto w = small_world();
    auto c = small_config(60000);
    c.record_rounds = true;
    const auto trace = run_dram(w, c, truthful(2), 42, 0);
    CHECK(trace.round_payments.size() == c.horizon);
    CHECK(regret_series(trace).size() == c.horizon);
    CHECK(trace.epochs.size() == trace.schedule.adaptive_epochs());
    for (std::size_t k = 0; k < trace.epochs.size(); ++k) {
      CHECK(trace.epochs[k].start == trace.schedule.boundaries[k] + 1);
      CHECK(trace.epochs[k].end == trace.schedule.boundaries[k + 1]);
    }
    // Oracle budget: one estimate and one solve per agent per epoch.
    CHECK(trace.oracle.mechanism_solves == trace.epochs.size() * 2);
    CHECK(trace.oracle.estimator_calls == trace.epochs.size() * 2);
    // Cost accounting.
    CHECK(trace.total_cost_incurred == doctest::Approx(0.3 * static_cast<double>(trace.observing_actions)));
    CHECK(trace.observing_actions == 2 * c.horizon);
    // Epoch constancy: every payment in an epoch is read off that epoch's matrix.
    for (const auto& e : trace.epochs)
      for (std::uint64_t t = e.start; t <= e.end; ++t) {
        const auto& r = trace.rounds[t - 1];
        for (std::size_t i = 0; i < 2; ++i)
          CHECK(r.payments[i] == e.agents[i].mechanism.reward(r.reports[i], r.reports[e.agents[i].reference]));
      }
    CHECK_FALSE(trace.violation);
    CHECK(trace.min_gap > 0.0);
    // Expected payment stays within c + 2δ whenever the truth is inside the set.
    for (const auto& e : trace.epochs)
      for (const auto& a : e.agents)
        if (a.estimation_error <= a.eta) CHECK(a.true_payment <= 0.3 + 2 * a.delta + 1e-9);
  }

  TEST_CASE("identical seeds reproduce identical traces") {
    const auto w = small_world();
    const auto c = small_config(30000);
    const auto a = run_dram(w, c, truthful(2), 7, 3);
    const auto b = run_dram(w, c, truthful(2), 7, 3);
    CHECK(a.round_payments == b.round_payments);
    const auto other = run_dram(w, c, truthful(2), 7, 4);
    CHECK(a.round_payments != other.round_payments);
  }

  TEST_CASE("plug-in variant with the empirical estimator matches the fixed algorithm on equal radii") {
    const auto w = desk_world();
    DramConfig c;
    c.horizon = 400000;
    const auto plan = plan_dram(w, c);
    EpisodePlan plus = plan;
    plus.estimator = EstimatorGuarantee::empirical();
    plus.epsilon_split_epochs = plan.schedule.adaptive_epochs();
    const auto a = run_episode(w, c, truthful(3), plan, 11, 0);
    const auto b = run_episode(w, c, truthful(3), plus, 11, 0);
    REQUIRE(a.epochs.size() == b.epochs.size());
    for (std::size_t k = 0; k < a.epochs.size(); ++k)
      for (std::size_t i = 0; i < 3; ++i) CHECK(a.epochs[k].agents[i].mechanism == b.epochs[k].agents[i].mechanism);
    CHECK(a.round_payments == b.round_payments);
  }

  TEST_CASE("plug-in plan radii are nonincreasing and start below the threshold") {
    const auto w = desk_world();
    DramConfig c;
    for (const auto& est : {EstimatorGuarantee::empirical(), EstimatorGuarantee::laplace(1.0)}) {
      const auto plan = plan_dram_plus(w, c, est);
      CHECK(plan.etas.front() < plan.params.eta_tilde);
      for (std::size_t k = 1; k < plan.etas.size(); ++k) CHECK(plan.etas[k] <= plan.etas[k - 1]);
      CHECK(plan.epsilon_split_epochs >= plan.schedule.adaptive_epochs());
      // τ is the smallest length whose radius is below the threshold.
      const double eps = c.epsilon / (3.0 * static_cast<double>(plan.epsilon_split_epochs) * 4.0);
      const auto tau = plan.schedule.warm_start();
      CHECK(est.radius(plan.params.rho * static_cast<double>(tau - 1) / 2.0, eps, 3) >= plan.params.eta_tilde);
    }
  }

  TEST_CASE("plug-in variant with smoothing stays truthful") {
    const auto w = desk_world();
    DramConfig c;
    c.horizon = 300000;
    const auto plan = plan_dram_plus(w, c, EstimatorGuarantee::laplace(1.0));
    for (std::uint64_t e = 0; e < 10; ++e) {
      const auto t = run_episode(w, c, truthful(3), plan, 2025, e);
      CHECK_FALSE(t.violation);
      CHECK(t.min_gap > 0.0);
      CHECK(t.fallbacks == 0);
    }
  }

  TEST_CASE("empty warm start surfaces insufficient support at the first epoch") {
    const auto w = small_world();
    auto c = small_config(1000);
    c.schedule = ScheduleKind::Custom;
    c.custom_boundaries = {0, 100, 1000};
    CHECK_THROWS_AS(run_dram(w, c, truthful(2), 1, 0), InsufficientSupport);
  }

  TEST_CASE("short warm start is reported as a configuration error") {
    const auto w = small_world();
    auto c = small_config(100000);
    c.warm_start = 20;
    CHECK_THROWS_AS(run_dram(w, c, truthful(2), 1, 0), ConfigError);
  }

  TEST_CASE("a misreporting agent is paid by the deployed rules without crashing") {
    const auto w = desk_world();
    DramConfig c;
    c.horizon = 250000;
    std::vector<AgentStrategy> s = truthful(3);
    s[1] = AgentStrategy::misreport({1, 2, 0});
    const auto t = run_dram(w, c, s, 3, 0);
    CHECK(t.round_payments.size() == c.horizon);
    CHECK(t.epochs.size() == t.schedule.adaptive_epochs());
  }

  TEST_CASE("lazy agent leaves a label unreported and triggers fallback or error") {
    const auto w = small_world();
    auto c = small_config(40000);
    std::vector<AgentStrategy> s = truthful(2);
    s[0] = AgentStrategy::lazy_constant(0);
    CHECK_THROWS_AS(run_dram(w, c, s, 1, 0), InsufficientSupport);
  }

  TEST_CASE("configuration validation") {
    DramConfig c;
    c.epsilon = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = DramConfig{};
    c.gamma = {0.4, 0.4};
    CHECK_THROWS_AS(resolve_parameters(desk_world(), c), ConfigError);
  }
}
