#pragma once

#include <cstddef>
#include <string>

#include "peerlab/distributions.hpp"
#include "peerlab/linalg.hpp"
#include "peerlab/lp.hpp"

namespace peerlab {

enum class Provenance { OptimalLP, RobustLP, Constructive, FactCheck, Manual };

std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& s);

/// Reward matrix R(x, x'): payment to a focal agent reporting x when the
/// reference reports x'. `kappa` is max |R| and is kept in sync by the
/// factory below.
struct Mechanism {
  Matrix reward;
  double kappa = 0.0;
  double margin = 0.0;
  double cost = 0.0;
  Provenance provenance = Provenance::Manual;

  std::size_t size() const { return reward.rows(); }

  /// Validates shape, finiteness, margin >= 0 and cost > 0, and fills kappa.
  static Mechanism make(Matrix reward, double cost, double margin, Provenance provenance);

  friend bool operator==(const Mechanism&, const Mechanism&) = default;
};

JointDistribution build_joint(const DiscreteDistribution& prior, const SkillMatrix& skill_i,
                              const SkillMatrix& skill_j);

BeliefMatrix belief_matrix(const JointDistribution& joint);

double spectral_norm_inverse(const BeliefMatrix& bm);

/// Σ_x P(X_i=x) Σ_x' B(x,x') R(x,x'), the truthful expected payment.
double expected_truthful_payment(const Matrix& reward, const BeliefMatrix& bm);

/// LP over the d² entries of R (row-major) encoding the incentive system:
/// (B Rᵀ)_xx >= c + δ, (B Rᵀ)_xy <= c − δ for x != y, and R d <= −δ.
/// Objective is the truthful expected payment. With δ = 0 this is exactly
/// the optimal-mechanism program.
lp::LinearProgram incentive_program(const BeliefMatrix& bm, double cost, double margin);

/// Same system evaluated row by row: slack of every incentive constraint at R.
lp::SlackReport incentive_slacks(const Matrix& reward, const BeliefMatrix& bm, double cost,
                                 double margin, double tolerance = 1e-9);

Mechanism solve_optimal(const BeliefMatrix& bm, double cost, const lp::Options& options = {});

struct RobustOptions {
  lp::Options lp;
  /// After finding the minimum κ*, re-solve for the cheapest truthful
  /// payment among mechanisms with |R| <= κ* (1 + kappa_slack).
  bool refine_payment = true;
  double kappa_slack = 1e-9;
};

Mechanism solve_robust(const BeliefMatrix& bm, double cost, double margin,
                       const RobustOptions& options = {});

Mechanism constructive_robust(const BeliefMatrix& bm, double cost, double margin);

/// ‖B⁻¹‖₂ (c(γd+1) + δ((1+γ)d+2)) / (1−γ)
double kappa_upper_bound(double inverse_norm, double gamma, std::size_t d, double cost,
                         double margin);
double kappa_upper_bound(const BeliefMatrix& bm, double cost, double margin);

/// (1−γ) / (2‖B⁻¹‖₂((1+γ)d + 2))
double ambiguity_threshold(double inverse_norm, double gamma, std::size_t d);
double ambiguity_threshold(const BeliefMatrix& bm);

/// Margin that keeps a mechanism designed at radius η truthful under the
/// truth. Throws AmbiguityTooLarge when η is at or beyond the threshold.
double safety_margin(double inverse_norm, double gamma, std::size_t d, double cost, double eta);
double safety_margin(const BeliefMatrix& bm, double cost, double eta);

}  // namespace peerlab
