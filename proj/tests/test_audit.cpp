#include <doctest.h>

#include <cmath>
#include <random>

#include "peerlab/audit.hpp"
#include "peerlab/errors.hpp"
#include "peerlab/lp.hpp"
#include "support.hpp"

using namespace peerlab;

namespace {

Mechanism plus_minus_one(double cost) {
  return Mechanism::make(Matrix{{1.0, -1.0}, {-1.0, 1.0}}, cost, 0.0, Provenance::Manual);
}

JointDistribution symmetric_pair(double accuracy) {
  const auto s = symmetric_skill(accuracy, 2);
  return build_joint(DiscreteDistribution::uniform(2), s, s);
}

// Worst case of E_q[v] over the TV ball intersected with the simplex, posed
// as an LP in (q, t) with |q − p| <= t and Σ t <= 2r.
double lp_worst_case(const std::vector<double>& p, const std::vector<double>& v, double r, bool maximize) {
  const std::size_t n = p.size();
  lp::LinearProgram prog(2 * n);
  for (std::size_t i = 0; i < n; ++i) prog.objective[i] = maximize ? -v[i] : v[i];
  Vector sum(2 * n, 0.0), budget(2 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    sum[i] = 1.0;
    budget[n + i] = 1.0;
    Vector up(2 * n, 0.0), down(2 * n, 0.0), pos(2 * n, 0.0);
    up[i] = 1.0, up[n + i] = -1.0;
    down[i] = -1.0, down[n + i] = -1.0;
    pos[i] = 1.0;
    prog.add(up, lp::Relation::LessEqual, p[i]);
    prog.add(down, lp::Relation::LessEqual, -p[i]);
    prog.add(pos, lp::Relation::GreaterEqual, 0.0);
  }
  prog.add(sum, lp::Relation::Equal, 1.0);
  prog.add(budget, lp::Relation::LessEqual, 2.0 * r);
  const auto s = lp::solve_lp(prog);
  REQUIRE(s.status == lp::Status::Optimal);
  return maximize ? -s.objective : s.objective;
}

// Uniform-ish member of the TV ball around p: a random direction of zero
// total mass, scaled to a random fraction of the radius, kept if nonnegative.
std::vector<double> sample_in_ball(std::mt19937_64& gen, std::span<const double> p, double r) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = p.size();
  for (;;) {
    std::vector<double> dir(n);
    double mean = 0.0;
    for (double& x : dir) mean += (x = g(gen));
    mean /= static_cast<double>(n);
    double l1 = 0.0;
    for (double& x : dir) l1 += std::abs(x -= mean);
    if (l1 == 0.0) continue;
    const double scale = 2.0 * r * std::sqrt(u(gen)) / l1;
    std::vector<double> q(n);
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) ok = ok && (q[i] = p[i] + scale * dir[i]) >= 0.0;
    if (ok) return q;
  }
}

}  // namespace

TEST_SUITE("audit") {
  TEST_CASE("agreement reward on 90% accurate observers") {
    const auto joint = symmetric_pair(0.9);
    const auto m = plus_minus_one(0.1);
    CHECK(truthful_utility(m, joint) == doctest::Approx(0.54).epsilon(1e-12));
    const auto lazy = best_lazy_utility(m, joint.reference_marginal());
    CHECK(std::abs(lazy.utility) <= 1e-12);
    CHECK(misreport_utility(m, joint, {1, 0}) == doctest::Approx(-0.74).epsilon(1e-12));
    // Collapsing maps pay the cost for a zero-mean reward and beat the swap.
    const auto lie = best_misreport_utility(m, joint);
    CHECK(lie.utility == doctest::Approx(-0.1).epsilon(1e-12));
    CHECK(lie.mapping != std::vector<std::size_t>{1, 0});
    const auto gap = ic_gap(m, joint, true);
    CHECK(gap.gap == doctest::Approx(0.54).epsilon(1e-12));
    // Table holds truthful, two constants and the three non-identity maps.
    CHECK(gap.table.size() == 1 + 2 + 3);
  }

  TEST_CASE("agreement reward on 80% accurate observers") {
    const auto joint = symmetric_pair(0.8);
    const auto m = plus_minus_one(0.1);
    CHECK(truthful_utility(m, joint) == doctest::Approx(0.26).epsilon(1e-12));
    CHECK(std::abs(best_lazy_utility(m, joint.reference_marginal()).utility) <= 1e-12);
    CHECK(misreport_utility(m, joint, {1, 0}) == doctest::Approx(-0.46).epsilon(1e-12));
    CHECK(ic_gap(m, joint).gap == doctest::Approx(0.26).epsilon(1e-12));
  }

  TEST_CASE("boundary accuracy leaves no gap") {
    const auto joint = symmetric_pair((10.0 + std::sqrt(10.0)) / 20.0);
    const auto gap = ic_gap(plus_minus_one(0.1), joint);
    CHECK(std::abs(gap.truthful) <= 1e-9);
    CHECK(std::abs(gap.gap) <= 1e-9);
  }

  TEST_CASE("optimal agreement mechanism binds") {
    const auto joint = symmetric_pair(0.9);
    const double a = 5.0 / 32.0;
    const auto m = Mechanism::make(Matrix{{a, -a}, {-a, a}}, 0.1, 0.0, Provenance::Manual);
    CHECK(std::abs(truthful_utility(m, joint)) <= 1e-12);
    CHECK(std::abs(best_lazy_utility(m, joint.reference_marginal()).utility) <= 1e-12);
    CHECK(std::abs(ic_gap(m, joint).gap) <= 1e-12);
  }

  TEST_CASE("constant payments make every report equivalent") {
    const auto joint = symmetric_pair(0.7);
    const auto m = Mechanism::make(Matrix{{1.0, 1.0}, {1.0, 1.0}}, 0.2, 0.0, Provenance::Manual);
    CHECK(best_lazy_utility(m, joint.reference_marginal()).utility == doctest::Approx(1.0));
    const auto gap = ic_gap(m, joint, true);
    for (const auto& row : gap.table)
      if (row.strategy.rfind("map", 0) == 0) CHECK(row.utility == doctest::Approx(0.8));
    CHECK(gap.gap == doctest::Approx(-0.2));
  }

  TEST_CASE("separable misreport maximum equals the enumerated table maximum") {
    std::mt19937_64 gen(8);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t d = 2 + static_cast<std::size_t>(trial % 4);
      const BeliefMatrix bm = testing_support::random_instance(gen, d);
      Matrix joint(d, d);
      for (std::size_t x = 0; x < d; ++x)
        for (std::size_t y = 0; y < d; ++y) joint(x, y) = bm.focal_marginal()[x] * bm(x, y);
      const JointDistribution j(joint);
      Matrix r(d, d);
      std::normal_distribution<double> g;
      for (std::size_t x = 0; x < d; ++x)
        for (std::size_t y = 0; y < d; ++y) r(x, y) = g(gen);
      const auto m = Mechanism::make(r, 0.3, 0.0, Provenance::Manual);
      const auto rep = ic_gap(m, j, true);
      double best = -INFINITY;
      for (const auto& row : rep.table)
        if (row.strategy.rfind("map", 0) == 0) best = std::max(best, row.utility);
      CHECK(rep.misreport.utility == doctest::Approx(best).epsilon(1e-12));
      CHECK(misreport_utility(m, j, rep.misreport.mapping) == doctest::Approx(best).epsilon(1e-12));
    }
    CHECK_THROWS_AS(ic_gap(Mechanism::make(Matrix::identity(9), 0.1, 0.0, Provenance::Manual),
                           JointDistribution(Matrix(9, 9, 1.0 / 81.0)), true),
                    LimitError);
  }

  TEST_CASE("mixed strategies never beat the best pure deviation or truth") {
    std::mt19937_64 gen(12);
    std::uniform_int_distribution<int> pick(0, 2);
    for (int inst = 0; inst < 5; ++inst) {
      const std::size_t d = 3;
      const BeliefMatrix bm = testing_support::random_instance(gen, d);
      Matrix jm(d, d);
      for (std::size_t x = 0; x < d; ++x)
        for (std::size_t y = 0; y < d; ++y) jm(x, y) = bm.focal_marginal()[x] * bm(x, y);
      const JointDistribution joint(jm);
      const Mechanism m = solve_robust(bm, 0.2, 0.02);
      const auto rep = ic_gap(m, joint);
      const double cap = std::max({rep.truthful, rep.lazy.utility, rep.misreport.utility});
      for (int k = 0; k < 1000; ++k) {
        std::vector<AgentStrategy> branches;
        const std::size_t nb = 2 + static_cast<std::size_t>(k % 3);
        for (std::size_t b = 0; b < nb; ++b) {
          switch (pick(gen)) {
            case 0: branches.push_back(AgentStrategy::truthful()); break;
            case 1: branches.push_back(AgentStrategy::lazy_constant(static_cast<std::size_t>(gen() % d))); break;
            default: {
              std::vector<std::size_t> g(d);
              do {
                for (auto& v : g) v = static_cast<std::size_t>(gen() % d);
              } while (g == std::vector<std::size_t>{0, 1, 2});
              branches.push_back(AgentStrategy::misreport(g));
            }
          }
        }
        const auto mixed = AgentStrategy::mixed(branches, testing_support::random_simplex(gen, nb));
        CHECK(strategy_utility(mixed, m, joint) <= cap + 1e-12);
      }
    }
  }

  TEST_CASE("greedy transport worst case matches an LP over the ball") {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 2 + static_cast<std::size_t>(trial % 4);
      const auto p = testing_support::random_simplex(gen, n);
      std::vector<double> v(n);
      for (double& x : v) x = u(gen);
      const double r = 0.6 * (u(gen) + 1.0) / 2.0;
      for (bool maximize : {true, false})
        CHECK(worst_case_expectation(p, v, r, maximize) == doctest::Approx(lp_worst_case(p, v, r, maximize)).epsilon(1e-9));
      CHECK(worst_case_expectation(p, v, 0.0, true) == doctest::Approx(peerlab::dot(p, v)));
    }
  }

  TEST_CASE("zero radius certificate reproduces nominal slacks") {
    const auto bm = BeliefMatrix(Matrix{{0.82, 0.18}, {0.18, 0.82}}, {0.5, 0.5});
    const auto m = constructive_robust(bm, 0.1, 0.02);
    const auto cert = certify_robustness(m, bm.matrix(), bm.reference_marginal(), 0.0, 0.1);
    for (const auto& k : cert.constraints) CHECK(k.worst_slack == doctest::Approx(k.nominal_slack).epsilon(1e-14));
    CHECK(cert.certified);
  }

  TEST_CASE("certificate holds at the guaranteed radius and fails well beyond it") {
    const auto bm = BeliefMatrix(Matrix{{0.82, 0.18}, {0.18, 0.82}}, {0.5, 0.5});
    const double delta = 0.02;
    const auto m = constructive_robust(bm, 0.1, delta);
    CHECK(certify_robustness(m, bm.matrix(), bm.reference_marginal(), delta / (2 * m.kappa), 0.1).certified);
    const auto far = certify_robustness(m, bm.matrix(), bm.reference_marginal(), 3 * delta / m.kappa, 0.1);
    CHECK_FALSE(far.certified);
    CHECK(far.worst_slack < 0.0);
  }

  TEST_CASE("certified mechanisms survive sampled members of the ball") {
    std::mt19937_64 gen(40);
    for (int inst = 0; inst < 4; ++inst) {
      const std::size_t d = 2 + static_cast<std::size_t>(inst % 3);
      const BeliefMatrix bm = testing_support::random_instance(gen, d);
      const double c = 0.3, delta = 0.1;
      const auto m = constructive_robust(bm, c, delta);
      const double r = delta / (2 * m.kappa);
      const auto cert = certify_robustness(m, bm.matrix(), bm.reference_marginal(), r, c);
      REQUIRE(cert.certified);
      for (int k = 0; k < 2000; ++k) {
        // Perturb every conditional row and the unconditional row independently.
        for (std::size_t x = 0; x < d; ++x) {
          const auto q = sample_in_ball(gen, bm.matrix().row(x), r);
          for (std::size_t y = 0; y < d; ++y) {
            const double e = peerlab::dot(q, m.reward.row(y));
            if (x == y)
              CHECK(e >= c - 1e-12);
            else
              CHECK(e <= c + 1e-12);
          }
        }
        const auto q0 = sample_in_ball(gen, bm.reference_marginal(), r);
        for (std::size_t y = 0; y < d; ++y) CHECK(peerlab::dot(q0, m.reward.row(y)) <= 1e-12);
      }
    }
  }

  TEST_CASE("hard instance pair") {
    const auto pair = hard_instance_pair(0.1);
    CHECK(pair.b0.matrix() == Matrix{{0.4, 0.6}, {1.0, 0.0}});
    CHECK(pair.b1.matrix() == Matrix{{0.6, 0.4}, {1.0, 0.0}});
    CHECK(kl_divergence(pair.p0, pair.p1) == doctest::Approx(0.1 * std::log(1.5)).epsilon(1e-12));
    CHECK_THROWS_AS(hard_instance_pair(0.0), InputError);
    CHECK_THROWS_AS(hard_instance_pair(0.25), InputError);
    for (double s = 0.005; s < 0.25; s += 0.005) {
      const auto hp = hard_instance_pair(s);
      const double kl = kl_divergence(hp.p0, hp.p1);
      CHECK(kl == doctest::Approx(s * std::log(1 + 4 * s / (1 - 2 * s))).epsilon(1e-10));
      CHECK(kl <= 8 * s * s);
    }
  }

  TEST_CASE("cheap feasible mechanisms for one hard instance fail on the other") {
    const double s = 0.1, c = 1.0;
    const auto pair = hard_instance_pair(s);
    std::mt19937_64 gen(2);
    std::normal_distribution<double> g;
    for (int k = 0; k < 50; ++k) {
      auto prog = incentive_program(pair.b0, c, 0.0);
      const auto payment = prog.objective;
      prog.add(payment, lp::Relation::LessEqual, (1 + s) * c);
      for (double& v : prog.objective) v = g(gen);
      // Box keeps the random objective bounded.
      for (std::size_t i = 0; i < 4; ++i) {
        Vector e(4, 0.0);
        e[i] = 1.0;
        prog.add(e, lp::Relation::LessEqual, 20.0);
        prog.add(e, lp::Relation::GreaterEqual, -20.0);
      }
      const auto sol = lp::solve_lp(prog);
      REQUIRE(sol.status == lp::Status::Optimal);
      const auto m = Mechanism::make(Matrix{{sol.point[0], sol.point[1]}, {sol.point[2], sol.point[3]}}, c, 0.0,
                                     Provenance::Manual);
      const auto home = evaluate_transfer(m, pair.b0, s);
      REQUIRE(home.feasible);
      REQUIRE(home.cheap);
      const auto away = evaluate_transfer(m, pair.b1, s);
      CHECK_FALSE((away.feasible && away.cheap));
    }
  }
}
