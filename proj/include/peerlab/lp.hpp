#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "peerlab/linalg.hpp"

namespace peerlab::lp {

enum class Relation { LessEqual, GreaterEqual, Equal };

struct Constraint {
  Vector coefficients;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
};

/// minimize objectiveᵀx subject to the listed constraints, x free in sign.
struct LinearProgram {
  Vector objective;
  std::vector<Constraint> constraints;

  LinearProgram() = default;
  explicit LinearProgram(std::size_t variables) : objective(variables, 0.0) {}

  std::size_t variable_count() const { return objective.size(); }
  void add(Vector coefficients, Relation relation, double rhs);

  /// Throws InputError on dimension mismatch or non-finite data.
  void validate() const;
};

enum class Status { Optimal, Infeasible, Unbounded };

std::string to_string(Status s);

struct Solution {
  Status status = Status::Infeasible;
  Vector point;
  double objective = 0.0;
  std::size_t iterations = 0;
};

struct Options {
  double feasibility_tolerance = 1e-9;
  double optimality_tolerance = 1e-9;
  double pivot_tolerance = 1e-11;
  std::size_t max_iterations = 200000;
};

/// Dense two-phase simplex with Bland's rule. Deterministic for identical
/// input. Throws InputError for malformed programs and SolverFailure when
/// the returned point would not satisfy the constraints.
Solution solve_lp(const LinearProgram& lp, const Options& options = {});

struct SlackReport {
  /// Signed slack per constraint: positive means satisfied with room,
  /// negative means violated (for equalities, minus the absolute residual).
  Vector slacks;
  double worst_violation = 0.0;
  std::size_t worst_index = 0;
  bool feasible = true;
};

SlackReport check_feasible(const LinearProgram& lp, std::span<const double> point,
                           double tolerance);

double evaluate_objective(const LinearProgram& lp, std::span<const double> point);

}  // namespace peerlab::lp
