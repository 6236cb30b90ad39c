#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "peerlab/distributions.hpp"
#include "peerlab/environment.hpp"
#include "peerlab/estimation.hpp"
#include "peerlab/mechanism.hpp"

namespace peerlab {

double truthful_utility(const Mechanism& mech, const JointDistribution& joint);

struct LazyResult {
  double utility = 0.0;
  std::size_t report = 0;
};

/// max_z Σ_x' P(X_j = x') R(z, x'); the lazy agent pays no cost.
LazyResult best_lazy_utility(const Mechanism& mech, std::span<const double> reference_marginal);

struct MisreportResult {
  double utility = 0.0;
  std::vector<std::size_t> mapping;
};

/// Best non-identity deterministic map g, U_g = E[R(g(X_i), X_j)] − c.
/// The objective separates over observations, so the maximum is exact for
/// any d without enumerating dᵈ maps.
MisreportResult best_misreport_utility(const Mechanism& mech, const JointDistribution& joint);

/// Utility of one specific map g under the joint.
double misreport_utility(const Mechanism& mech, const JointDistribution& joint,
                         const std::vector<std::size_t>& mapping);

/// Expected utility of any strategy (mixtures resolved by linearity).
double strategy_utility(const AgentStrategy& strategy, const Mechanism& mech,
                        const JointDistribution& joint);

struct StrategyRow {
  std::string strategy;
  double utility;
};

struct IcGapReport {
  double truthful = 0.0;
  LazyResult lazy;
  MisreportResult misreport;
  double gap = 0.0;
  std::vector<StrategyRow> table;
};

/// gap = U_truth − max(U_lazy, max_g U_g). With `full_table` every constant
/// report and every non-identity map is listed; that enumeration throws
/// LimitError for d > 8.
IcGapReport ic_gap(const Mechanism& mech, const JointDistribution& joint,
                   std::span<const double> reference_marginal, bool full_table = false);
IcGapReport ic_gap(const Mechanism& mech, const JointDistribution& joint, bool full_table = false);

/// Extremes of E_q[v] over {q : tv(q, p) <= radius}.
double worst_case_expectation(std::span<const double> p, std::span<const double> values,
                              double radius, bool maximize);

struct CertifiedConstraint {
  std::string name;    // e.g. "ir[1]", "ic[0->2]", "nfl[1]"
  double nominal_slack;
  double worst_slack;
};

struct RobustnessCertificate {
  double radius = 0.0;
  std::vector<CertifiedConstraint> constraints;
  double worst_slack = 0.0;
  bool certified = false;
};

/// Checks every incentive constraint (threshold c for reported-observation
/// rows, 0 for the unconditional row) against the worst distribution within
/// `radius` of each estimated row. Certified iff every worst-case slack is
/// at least −tolerance.
RobustnessCertificate certify_robustness(const Mechanism& mech, const Matrix& conditional,
                                         std::span<const double> prior_row, double radius,
                                         double cost, double tolerance = 1e-12);
RobustnessCertificate certify_robustness(const Mechanism& mech, const AmbiguitySet& center,
                                         double cost, double tolerance = 1e-12);

struct HardInstancePair {
  BeliefMatrix b0;
  BeliefMatrix b1;
  JointDistribution p0;
  JointDistribution p1;
};

HardInstancePair hard_instance_pair(double cheapness);

double kl_divergence(const JointDistribution& p, const JointDistribution& q);

struct TransferReport {
  bool feasible = false;
  double worst_violation = 0.0;
  double payment = 0.0;
  bool cheap = false;
};

/// Evaluates a mechanism designed for one instance under another belief.
TransferReport evaluate_transfer(const Mechanism& mech, const BeliefMatrix& other, double cheapness,
                                 double tolerance = 1e-9);

}  // namespace peerlab
