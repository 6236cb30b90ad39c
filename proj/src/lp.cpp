#include "peerlab/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "peerlab/errors.hpp"

namespace peerlab::lp {

void LinearProgram::add(Vector coefficients, Relation relation, double rhs) {
  if (coefficients.size() != variable_count()) throw InputError("constraint width differs from variable count");
  constraints.push_back({std::move(coefficients), relation, rhs});
}

void LinearProgram::validate() const {
  const std::size_t n = variable_count();
  if (n == 0) throw InputError("linear program has no variables");
  for (double c : objective)
    if (!std::isfinite(c)) throw InputError("non-finite objective coefficient");
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const auto& con = constraints[i];
    if (con.coefficients.size() != n)
      throw InputError("constraint " + std::to_string(i) + " has " +
                       std::to_string(con.coefficients.size()) + " coefficients, expected " +
                       std::to_string(n));
    if (!std::isfinite(con.rhs)) throw InputError("non-finite right-hand side");
    for (double a : con.coefficients)
      if (!std::isfinite(a)) throw InputError("non-finite constraint coefficient");
  }
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
  }
  return "unknown";
}

double evaluate_objective(const LinearProgram& lp, std::span<const double> point) {
  if (point.size() != lp.variable_count()) throw InputError("point dimension mismatch");
  long double s = 0.0L;
  for (std::size_t j = 0; j < point.size(); ++j)
    s += static_cast<long double>(lp.objective[j]) * point[j];
  return static_cast<double>(s);
}

SlackReport check_feasible(const LinearProgram& lp, std::span<const double> point,
                           double tolerance) {
  lp.validate();
  if (point.size() != lp.variable_count()) throw InputError("point dimension mismatch");
  SlackReport report;
  report.slacks.reserve(lp.constraints.size());
  for (std::size_t i = 0; i < lp.constraints.size(); ++i) {
    const auto& con = lp.constraints[i];
    long double lhs = 0.0L;
    for (std::size_t j = 0; j < point.size(); ++j)
      lhs += static_cast<long double>(con.coefficients[j]) * point[j];
    long double slack = 0.0L;
    switch (con.relation) {
      case Relation::LessEqual: slack = con.rhs - lhs; break;
      case Relation::GreaterEqual: slack = lhs - con.rhs; break;
      case Relation::Equal: slack = -std::fabs(lhs - con.rhs); break;
    }
    const double s = static_cast<double>(slack);
    report.slacks.push_back(s);
    if (-s > report.worst_violation) {
      report.worst_violation = -s;
      report.worst_index = i;
    }
  }
  report.feasible = report.worst_violation <= tolerance;
  return report;
}

namespace {

// Tableau over nonnegative standard-form columns:
//   [0, 2n)           split free variables x = x⁺ − x⁻
//   [2n, 2n + s)      slack / surplus columns
//   [2n + s, total)   artificial columns
class Simplex {
 public:
  Simplex(const LinearProgram& lp, const Options& opt) : opt_(opt), n_(lp.variable_count()) {
    const std::size_t m = lp.constraints.size();
    std::size_t slack_count = 0;
    std::size_t artificial_count = 0;
    for (const auto& con : lp.constraints) {
      if (con.relation != Relation::Equal) ++slack_count;
      const bool flips = con.rhs < 0.0;
      const Relation eff = effective_relation(con.relation, flips);
      if (eff != Relation::LessEqual) ++artificial_count;
    }
    slack_begin_ = 2 * n_;
    art_begin_ = slack_begin_ + slack_count;
    cols_ = art_begin_ + artificial_count;
    rows_ = m;
    tab_.assign((rows_ + 1) * (cols_ + 1), 0.0);
    basis_.assign(rows_, 0);

    std::size_t next_slack = slack_begin_;
    std::size_t next_art = art_begin_;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& con = lp.constraints[i];
      const bool flips = con.rhs < 0.0;
      const double sign = flips ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n_; ++j) {
        at(i, j) = sign * con.coefficients[j];
        at(i, n_ + j) = -sign * con.coefficients[j];
      }
      rhs(i) = sign * con.rhs;
      const Relation eff = effective_relation(con.relation, flips);
      if (con.relation != Relation::Equal) {
        at(i, next_slack) = eff == Relation::LessEqual ? 1.0 : -1.0;
        if (eff == Relation::LessEqual) basis_[i] = next_slack;
        ++next_slack;
      }
      if (eff != Relation::LessEqual) {
        at(i, next_art) = 1.0;
        basis_[i] = next_art;
        ++next_art;
      }
    }
    original_ = tab_;
    original_rows_.resize(rows_);
    for (std::size_t i = 0; i < rows_; ++i) original_rows_[i] = i;
    for (std::size_t j = 0; j < n_; ++j) {
      cost_.push_back(lp.objective[j]);
    }
  }

  Solution run() {
    Solution sol;
    // Phase 1: minimise the sum of artificials.
    if (art_begin_ < cols_) {
      set_objective_row([&](std::size_t j) { return j >= art_begin_ ? 1.0 : 0.0; });
      if (!iterate(cols_, sol.iterations))
        throw SolverFailure("phase one reported unbounded, which is impossible");
      if (-obj_rhs() > opt_.feasibility_tolerance * std::max(1.0, rhs_scale())) {
        sol.status = Status::Infeasible;
        return sol;
      }
      drive_out_artificials();
    }
    // Phase 2: original objective over non-artificial columns.
    set_objective_row([&](std::size_t j) {
      if (j < n_) return cost_[j];
      if (j < 2 * n_) return -cost_[j - n_];
      return 0.0;
    });
    if (!iterate(art_begin_, sol.iterations)) {
      sol.status = Status::Unbounded;
      return sol;
    }
    sol.status = Status::Optimal;
    sol.point = extract_point();
    return sol;
  }

 private:
  static Relation effective_relation(Relation r, bool flips) {
    if (!flips || r == Relation::Equal) return r;
    return r == Relation::LessEqual ? Relation::GreaterEqual : Relation::LessEqual;
  }

  double& at(std::size_t r, std::size_t c) { return tab_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return tab_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return tab_[r * (cols_ + 1) + cols_]; }
  double& obj(std::size_t c) { return tab_[rows_ * (cols_ + 1) + c]; }
  double& obj_rhs() { return tab_[rows_ * (cols_ + 1) + cols_]; }

  double rhs_scale() {
    double s = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) s = std::max(s, std::abs(original_[original_rows_[i] * (cols_ + 1) + cols_]));
    return s;
  }

  template <class CostFn>
  void set_objective_row(CostFn cost) {
    for (std::size_t j = 0; j <= cols_; ++j) obj(j) = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) obj(j) = cost(j);
    // Price out the basic columns so reduced costs are consistent.
    for (std::size_t i = 0; i < rows_; ++i) {
      const double cb = cost(basis_[i]);
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) obj(j) -= cb * at(i, j);
    }
  }

  void pivot(std::size_t r, std::size_t c) {
    const double p = at(r, c);
    for (std::size_t j = 0; j <= cols_; ++j) at(r, j) /= p;
    for (std::size_t i = 0; i <= rows_; ++i) {
      if (i == r) continue;
      double* row = &tab_[i * (cols_ + 1)];
      const double f = row[c];
      if (f == 0.0) continue;
      const double* prow = &tab_[r * (cols_ + 1)];
      for (std::size_t j = 0; j <= cols_; ++j) row[j] -= f * prow[j];
      row[c] = 0.0;
    }
    basis_[r] = c;
  }

  // Bland's rule over columns [0, limit). Returns false on unboundedness.
  bool iterate(std::size_t limit, std::size_t& iterations) {
    for (;;) {
      if (iterations >= opt_.max_iterations)
        throw SolverFailure("simplex iteration limit reached");
      std::size_t enter = limit;
      for (std::size_t j = 0; j < limit; ++j)
        if (obj(j) < -opt_.optimality_tolerance) {
          enter = j;
          break;
        }
      if (enter == limit) return true;
      std::size_t leave = rows_;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < rows_; ++i) {
        const double a = at(i, enter);
        if (a <= opt_.pivot_tolerance) continue;
        const double ratio = std::max(rhs(i), 0.0) / a;
        const bool better = leave == rows_ || ratio < best - 1e-14 ||
                            (ratio <= best + 1e-14 && basis_[i] < basis_[leave]);
        if (better) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
      if (leave == rows_) return false;
      pivot(leave, enter);
      ++iterations;
    }
  }

  void drive_out_artificials() {
    for (std::size_t i = 0; i < rows_;) {
      if (basis_[i] < art_begin_) {
        ++i;
        continue;
      }
      std::size_t col = art_begin_;
      for (std::size_t j = 0; j < art_begin_; ++j)
        if (std::abs(at(i, j)) > opt_.pivot_tolerance) {
          col = j;
          break;
        }
      if (col < art_begin_) {
        pivot(i, col);
        ++i;
      } else {
        remove_row(i);  // redundant equality
      }
    }
  }

  void remove_row(std::size_t r) {
    const std::size_t w = cols_ + 1;
    tab_.erase(tab_.begin() + static_cast<std::ptrdiff_t>(r * w),
               tab_.begin() + static_cast<std::ptrdiff_t>((r + 1) * w));
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
    original_rows_.erase(original_rows_.begin() + static_cast<std::ptrdiff_t>(r));
    --rows_;
  }

  // Recompute the basic solution from the original columns for accuracy;
  // fall back to tableau values if the basis looks ill-conditioned.
  Vector extract_point() {
    Vector standard(cols_, 0.0);
    bool refined = false;
    if (rows_ > 0) {
      Matrix basis_matrix(rows_, rows_);
      Vector b(rows_);
      const std::size_t w = cols_ + 1;
      for (std::size_t i = 0; i < rows_; ++i) {
        const std::size_t orow = original_rows_[i];
        for (std::size_t k = 0; k < rows_; ++k) basis_matrix(i, k) = original_[orow * w + basis_[k]];
        b[i] = original_[orow * w + cols_];
      }
      try {
        const Vector xb = LuDecomposition(basis_matrix, 1e-13).solve(b);
        for (std::size_t k = 0; k < rows_; ++k) standard[basis_[k]] = xb[k];
        refined = true;
      } catch (const SingularBelief&) {
        refined = false;
      }
    }
    if (!refined)
      for (std::size_t i = 0; i < rows_; ++i) standard[basis_[i]] = rhs(i);
    Vector x(n_);
    for (std::size_t j = 0; j < n_; ++j) x[j] = standard[j] - standard[n_ + j];
    return x;
  }

  Options opt_;
  std::size_t n_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t slack_begin_ = 0;
  std::size_t art_begin_ = 0;
  std::vector<double> tab_;
  std::vector<double> original_;
  std::vector<std::size_t> original_rows_;
  std::vector<std::size_t> basis_;
  Vector cost_;
};

}  // namespace

Solution solve_lp(const LinearProgram& lp, const Options& options) {
  lp.validate();
  Simplex simplex(lp, options);
  Solution sol = simplex.run();
  if (sol.status != Status::Optimal) return sol;

  sol.objective = evaluate_objective(lp, sol.point);
  double scale = 1.0;
  for (const auto& con : lp.constraints) scale = std::max(scale, std::abs(con.rhs));
  const auto report = check_feasible(lp, sol.point, 1e3 * options.feasibility_tolerance * scale);
  if (!report.feasible)
    throw SolverFailure("simplex produced a point violating constraint " +
                        std::to_string(report.worst_index) + " by " +
                        std::to_string(report.worst_violation));
  return sol;
}

}  // namespace peerlab::lp
