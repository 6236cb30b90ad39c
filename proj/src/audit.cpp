#include "peerlab/audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "peerlab/errors.hpp"

namespace peerlab {

namespace {

void require_dims(const Mechanism& mech, std::size_t d) {
  if (mech.size() != d) throw InputError("mechanism and distribution disagree on alphabet size");
}

// f(x, z) = Σ_x' P(x, x') R(z, x'): joint-weighted payoff of reporting z after observing x.
Matrix report_payoffs(const Mechanism& mech, const JointDistribution& joint) {
  const std::size_t d = joint.size();
  Matrix f(d, d);
  for (std::size_t x = 0; x < d; ++x)
    for (std::size_t z = 0; z < d; ++z) f(x, z) = dot(joint.matrix().row(x), mech.reward.row(z));
  return f;
}

std::string map_name(const std::vector<std::size_t>& g) {
  std::string s = "map(";
  for (std::size_t x = 0; x < g.size(); ++x) s += (x ? "," : "") + std::to_string(g[x]);
  return s + ")";
}

}  // namespace

double truthful_utility(const Mechanism& mech, const JointDistribution& joint) {
  require_dims(mech, joint.size());
  double u = 0.0;
  for (std::size_t x = 0; x < joint.size(); ++x) u += dot(joint.matrix().row(x), mech.reward.row(x));
  return u - mech.cost;
}

LazyResult best_lazy_utility(const Mechanism& mech, std::span<const double> reference_marginal) {
  require_dims(mech, reference_marginal.size());
  LazyResult best{-std::numeric_limits<double>::infinity(), 0};
  for (std::size_t z = 0; z < mech.size(); ++z) {
    const double u = dot(mech.reward.row(z), reference_marginal);
    if (u > best.utility) best = {u, z};
  }
  return best;
}

double misreport_utility(const Mechanism& mech, const JointDistribution& joint,
                         const std::vector<std::size_t>& mapping) {
  require_dims(mech, joint.size());
  if (mapping.size() != joint.size()) throw InputError("mapping size differs from alphabet");
  double u = 0.0;
  for (std::size_t x = 0; x < joint.size(); ++x) {
    if (mapping[x] >= joint.size()) throw InputError("mapping leaves the alphabet");
    u += dot(joint.matrix().row(x), mech.reward.row(mapping[x]));
  }
  return u - mech.cost;
}

MisreportResult best_misreport_utility(const Mechanism& mech, const JointDistribution& joint) {
  require_dims(mech, joint.size());
  const std::size_t d = joint.size();
  const Matrix f = report_payoffs(mech, joint);

  // Unconstrained argmax per observation, plus the cheapest single-coordinate
  // change away from the identity in case the argmax is the identity.
  std::vector<std::size_t> g(d);
  double total = 0.0;
  bool identity = true;
  for (std::size_t x = 0; x < d; ++x) {
    std::size_t arg = 0;
    for (std::size_t z = 1; z < d; ++z)
      if (f(x, z) > f(x, arg)) arg = z;
    g[x] = arg;
    total += f(x, arg);
    identity = identity && arg == x;
  }
  if (identity) {
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t best_x = 0, best_z = 0;
    for (std::size_t x = 0; x < d; ++x)
      for (std::size_t z = 0; z < d; ++z) {
        if (z == x) continue;
        const double loss = f(x, x) - f(x, z);
        if (loss < best_loss) {
          best_loss = loss;
          best_x = x;
          best_z = z;
        }
      }
    g[best_x] = best_z;
    total -= best_loss;
  }
  return {total - mech.cost, g};
}

double strategy_utility(const AgentStrategy& strategy, const Mechanism& mech,
                        const JointDistribution& joint) {
  using Kind = AgentStrategy::Kind;
  const auto& ref = joint.reference_marginal();
  switch (strategy.kind()) {
    case Kind::Truthful: return truthful_utility(mech, joint);
    case Kind::Misreport: return misreport_utility(mech, joint, strategy.mapping());
    case Kind::LazyConstant: return dot(mech.reward.row(strategy.constant()), ref);
    case Kind::LazyRandom: {
      const auto& q = *strategy.lazy_distribution();
      double u = 0.0;
      for (std::size_t z = 0; z < q.size(); ++z) u += q[z] * dot(mech.reward.row(z), ref);
      return u;
    }
    case Kind::Mixed: {
      double u = 0.0;
      for (std::size_t b = 0; b < strategy.branches().size(); ++b)
        u += strategy.weights()[b] * strategy_utility(strategy.branches()[b], mech, joint);
      return u;
    }
  }
  throw InputError("unknown strategy kind");
}

IcGapReport ic_gap(const Mechanism& mech, const JointDistribution& joint,
                   std::span<const double> reference_marginal, bool full_table) {
  IcGapReport r;
  r.truthful = truthful_utility(mech, joint);
  r.lazy = best_lazy_utility(mech, reference_marginal);
  r.misreport = best_misreport_utility(mech, joint);
  r.gap = r.truthful - std::max(r.lazy.utility, r.misreport.utility);
  if (full_table) {
    const std::size_t d = joint.size();
    if (d > 8) throw LimitError("strategy table enumeration is limited to d <= 8");
    r.table.push_back({"truthful", r.truthful});
    for (std::size_t z = 0; z < d; ++z)
      r.table.push_back({"lazy(" + std::to_string(z) + ")", dot(mech.reward.row(z), reference_marginal)});
    std::vector<std::size_t> g(d, 0);
    while (true) {
      bool identity = true;
      for (std::size_t x = 0; x < d; ++x) identity = identity && g[x] == x;
      if (!identity) r.table.push_back({map_name(g), misreport_utility(mech, joint, g)});
      std::size_t pos = 0;
      while (pos < d && ++g[pos] == d) g[pos++] = 0;
      if (pos == d) break;
    }
  }
  return r;
}

IcGapReport ic_gap(const Mechanism& mech, const JointDistribution& joint, bool full_table) {
  return ic_gap(mech, joint, joint.reference_marginal(), full_table);
}

double worst_case_expectation(std::span<const double> p, std::span<const double> values,
                              double radius, bool maximize) {
  if (p.size() != values.size() || p.empty()) throw InputError("distribution/value size mismatch");
  if (!(radius >= 0.0)) throw InputError("radius must be nonnegative");
  const std::size_t n = p.size();
  std::vector<double> v(values.begin(), values.end());
  if (!maximize)
    for (double& x : v) x = -x;

  std::size_t target = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (v[i] > v[target]) target = i;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });

  double value = 0.0;
  for (std::size_t i = 0; i < n; ++i) value += p[i] * v[i];
  double budget = std::min(radius, 1.0);
  for (std::size_t i : order) {
    if (budget <= 0.0) break;
    if (i == target) continue;
    const double moved = std::min(budget, p[i]);
    value += moved * (v[target] - v[i]);
    budget -= moved;
  }
  return maximize ? value : -value;
}

RobustnessCertificate certify_robustness(const Mechanism& mech, const Matrix& conditional,
                                         std::span<const double> prior_row, double radius,
                                         double cost, double tolerance) {
  const std::size_t d = mech.size();
  if (conditional.rows() != d || conditional.cols() != d || prior_row.size() != d)
    throw InputError("ambiguity set and mechanism disagree on alphabet size");
  RobustnessCertificate cert;
  cert.radius = radius;
  cert.worst_slack = std::numeric_limits<double>::infinity();
  auto record = [&](std::string name, double nominal, double worst) {
    cert.worst_slack = std::min(cert.worst_slack, worst);
    cert.constraints.push_back({std::move(name), nominal, worst});
  };
  for (std::size_t x = 0; x < d; ++x) {
    const auto row = conditional.row(x);
    for (std::size_t y = 0; y < d; ++y) {
      const auto values = mech.reward.row(y);
      const double nominal = dot(row, values);
      if (x == y) {
        record("ir[" + std::to_string(x) + "]", nominal - cost,
               worst_case_expectation(row, values, radius, false) - cost);
      } else {
        record("ic[" + std::to_string(x) + "->" + std::to_string(y) + "]", cost - nominal,
               cost - worst_case_expectation(row, values, radius, true));
      }
    }
  }
  for (std::size_t y = 0; y < d; ++y) {
    const auto values = mech.reward.row(y);
    record("nfl[" + std::to_string(y) + "]", -dot(prior_row, values),
           -worst_case_expectation(prior_row, values, radius, true));
  }
  cert.certified = cert.worst_slack >= -tolerance;
  return cert;
}

RobustnessCertificate certify_robustness(const Mechanism& mech, const AmbiguitySet& center,
                                         double cost, double tolerance) {
  return certify_robustness(mech, center.conditional, center.prior_row, center.radius, cost,
                            tolerance);
}

HardInstancePair hard_instance_pair(double cheapness) {
  if (!(cheapness > 0.0 && cheapness < 0.25)) throw InputError("cheapness must lie in (0, 1/4)");
  const double s = cheapness;
  const Vector focal{0.5, 0.5};
  BeliefMatrix b0(Matrix{{0.5 - s, 0.5 + s}, {1.0, 0.0}}, focal);
  BeliefMatrix b1(Matrix{{0.5 + s, 0.5 - s}, {1.0, 0.0}}, focal);
  auto joint = [&](const BeliefMatrix& b) {
    Matrix m(2, 2);
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t y = 0; y < 2; ++y) m(x, y) = focal[x] * b(x, y);
    return JointDistribution(std::move(m));
  };
  JointDistribution p0 = joint(b0);
  JointDistribution p1 = joint(b1);
  return {std::move(b0), std::move(b1), std::move(p0), std::move(p1)};
}

double kl_divergence(const JointDistribution& p, const JointDistribution& q) {
  if (p.size() != q.size()) throw InputError("divergence needs equal alphabets");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double a = p(i, j);
      if (a == 0.0) continue;
      const double b = q(i, j);
      if (b == 0.0) return std::numeric_limits<double>::infinity();
      kl += a * std::log(a / b);
    }
  return kl;
}

TransferReport evaluate_transfer(const Mechanism& mech, const BeliefMatrix& other, double cheapness,
                                 double tolerance) {
  const auto slack = incentive_slacks(mech.reward, other, mech.cost, 0.0, tolerance);
  TransferReport r;
  r.feasible = slack.feasible;
  r.worst_violation = slack.worst_violation;
  r.payment = expected_truthful_payment(mech.reward, other);
  r.cheap = r.payment <= (1.0 + cheapness) * mech.cost + tolerance;
  return r;
}

}  // namespace peerlab
