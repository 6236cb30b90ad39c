#include "peerlab/mechanism.hpp"

#include <cmath>

#include "peerlab/errors.hpp"

namespace peerlab {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::OptimalLP: return "optimal_lp";
    case Provenance::RobustLP: return "robust_lp";
    case Provenance::Constructive: return "constructive";
    case Provenance::FactCheck: return "fact_check";
    case Provenance::Manual: return "manual";
  }
  return "manual";
}

Provenance provenance_from_string(const std::string& s) {
  if (s == "optimal_lp") return Provenance::OptimalLP;
  if (s == "robust_lp") return Provenance::RobustLP;
  if (s == "constructive") return Provenance::Constructive;
  if (s == "fact_check") return Provenance::FactCheck;
  if (s == "manual") return Provenance::Manual;
  throw InputError("unknown mechanism provenance '" + s + "'");
}

Mechanism Mechanism::make(Matrix reward, double cost, double margin, Provenance provenance) {
  if (!reward.square() || reward.rows() < 2) throw InputError("reward matrix must be square, d >= 2");
  for (double v : reward.data())
    if (!std::isfinite(v)) throw InputError("reward matrix has a non-finite entry");
  if (!(cost > 0.0) || !std::isfinite(cost)) throw InputError("observation cost must be positive");
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw InputError("margin must be nonnegative");
  Mechanism m;
  m.kappa = reward.max_abs();
  m.reward = std::move(reward);
  m.cost = cost;
  m.margin = margin;
  m.provenance = provenance;
  return m;
}

JointDistribution build_joint(const DiscreteDistribution& prior, const SkillMatrix& skill_i,
                              const SkillMatrix& skill_j) {
  const std::size_t d = prior.size();
  if (skill_i.size() != d || skill_j.size() != d)
    throw InputError("prior and skill matrices disagree on alphabet size");
  Matrix joint(d, d);
  for (std::size_t y = 0; y < d; ++y) {
    if (prior[y] == 0.0) continue;
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) joint(a, b) += prior[y] * skill_i(y, a) * skill_j(y, b);
  }
  return JointDistribution(std::move(joint));
}

BeliefMatrix belief_matrix(const JointDistribution& joint) {
  const std::size_t d = joint.size();
  const Vector& focal = joint.focal_marginal();
  Matrix b(d, d);
  for (std::size_t x = 0; x < d; ++x) {
    if (!(focal[x] > 0.0))
      throw DegenerateSupport("focal label " + std::to_string(x) +
                              " has zero probability; belief row undefined");
    for (std::size_t xp = 0; xp < d; ++xp) b(x, xp) = joint(x, xp) / focal[x];
  }
  return BeliefMatrix(std::move(b), focal);
}

double spectral_norm_inverse(const BeliefMatrix& bm) {
  return spectral_norm(inverse(bm.matrix()));
}

double expected_truthful_payment(const Matrix& reward, const BeliefMatrix& bm) {
  const std::size_t d = bm.size();
  if (reward.rows() != d || reward.cols() != d) throw InputError("reward/belief dimension mismatch");
  double total = 0.0;
  for (std::size_t x = 0; x < d; ++x)
    total += bm.focal_marginal()[x] * dot(bm.matrix().row(x), reward.row(x));
  return total;
}

lp::LinearProgram incentive_program(const BeliefMatrix& bm, double cost, double margin) {
  const std::size_t d = bm.size();
  const Matrix& b = bm.matrix();
  lp::LinearProgram prog(d * d);
  for (std::size_t x = 0; x < d; ++x)
    for (std::size_t z = 0; z < d; ++z) prog.objective[x * d + z] = bm.focal_marginal()[x] * b(x, z);

  // Observing x and reporting y earns Σ_z B(x,z) R(y,z).
  for (std::size_t x = 0; x < d; ++x)
    for (std::size_t y = 0; y < d; ++y) {
      Vector row(d * d, 0.0);
      for (std::size_t z = 0; z < d; ++z) row[y * d + z] = b(x, z);
      if (x == y)
        prog.add(std::move(row), lp::Relation::GreaterEqual, cost + margin);
      else
        prog.add(std::move(row), lp::Relation::LessEqual, cost - margin);
    }
  // Reporting y without looking earns Σ_z d(z) R(y,z).
  for (std::size_t y = 0; y < d; ++y) {
    Vector row(d * d, 0.0);
    for (std::size_t z = 0; z < d; ++z) row[y * d + z] = bm.reference_marginal()[z];
    prog.add(std::move(row), lp::Relation::LessEqual, -margin);
  }
  return prog;
}

lp::SlackReport incentive_slacks(const Matrix& reward, const BeliefMatrix& bm, double cost,
                                 double margin, double tolerance) {
  const std::size_t d = bm.size();
  if (reward.rows() != d || reward.cols() != d) throw InputError("reward/belief dimension mismatch");
  return lp::check_feasible(incentive_program(bm, cost, margin), reward.data(), tolerance);
}

namespace {

void require_invertible(const BeliefMatrix& bm) { (void)LuDecomposition(bm.matrix()); }

Matrix unpack(const Vector& point, std::size_t d) {
  Matrix r(d, d);
  for (std::size_t x = 0; x < d; ++x)
    for (std::size_t y = 0; y < d; ++y) r(x, y) = point[x * d + y];
  return r;
}

void require_optimal(const lp::Solution& sol, const char* which) {
  if (sol.status == lp::Status::Infeasible)
    throw InfeasibleMechanism(std::string(which) + " program is infeasible");
  if (sol.status == lp::Status::Unbounded)
    throw SolverFailure(std::string(which) + " program reported unbounded");
}

}  // namespace

Mechanism solve_optimal(const BeliefMatrix& bm, double cost, const lp::Options& options) {
  if (!(cost > 0.0)) throw InputError("observation cost must be positive");
  require_invertible(bm);
  const auto sol = lp::solve_lp(incentive_program(bm, cost, 0.0), options);
  require_optimal(sol, "optimal-mechanism");
  return Mechanism::make(unpack(sol.point, bm.size()), cost, 0.0, Provenance::OptimalLP);
}

Mechanism solve_robust(const BeliefMatrix& bm, double cost, double margin,
                       const RobustOptions& options) {
  if (!(cost > 0.0)) throw InputError("observation cost must be positive");
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw InputError("margin must be nonnegative");
  require_invertible(bm);
  const std::size_t d = bm.size();
  const std::size_t n = d * d;
  const lp::LinearProgram base = incentive_program(bm, cost, margin);

  // Variables: R entries then κ.
  lp::LinearProgram prog(n + 1);
  prog.objective[n] = 1.0;
  for (const auto& con : base.constraints) {
    Vector row = con.coefficients;
    row.push_back(0.0);
    prog.add(std::move(row), con.relation, con.rhs);
  }
  for (std::size_t k = 0; k < n; ++k) {
    Vector up(n + 1, 0.0), down(n + 1, 0.0);
    up[k] = 1.0;
    up[n] = -1.0;
    down[k] = -1.0;
    down[n] = -1.0;
    prog.add(std::move(up), lp::Relation::LessEqual, 0.0);
    prog.add(std::move(down), lp::Relation::LessEqual, 0.0);
  }
  const auto sol = lp::solve_lp(prog, options.lp);
  require_optimal(sol, "robust-mechanism");
  Vector point(sol.point.begin(), sol.point.begin() + static_cast<std::ptrdiff_t>(n));

  if (options.refine_payment) {
    const double cap = sol.point[n] * (1.0 + options.kappa_slack) + 1e-12;
    lp::LinearProgram cheap = base;
    for (std::size_t k = 0; k < n; ++k) {
      Vector up(n, 0.0), down(n, 0.0);
      up[k] = 1.0;
      down[k] = -1.0;
      cheap.add(std::move(up), lp::Relation::LessEqual, cap);
      cheap.add(std::move(down), lp::Relation::LessEqual, cap);
    }
    const auto refined = lp::solve_lp(cheap, options.lp);
    if (refined.status == lp::Status::Optimal) point = refined.point;
  }
  return Mechanism::make(unpack(point, d), cost, margin, Provenance::RobustLP);
}

Mechanism constructive_robust(const BeliefMatrix& bm, double cost, double margin) {
  if (!(cost > 0.0)) throw InputError("observation cost must be positive");
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw InputError("margin must be nonnegative");
  const std::size_t d = bm.size();
  const double g = bm.gamma();
  const double off = -(cost * g + margin * (1.0 + g)) / (1.0 - g);
  Matrix m(d, d, off);
  for (std::size_t x = 0; x < d; ++x) m(x, x) = cost + margin;
  const Matrix r = (inverse(bm.matrix()) * m).transpose();
  return Mechanism::make(r, cost, margin, Provenance::Constructive);
}

double kappa_upper_bound(double inverse_norm, double gamma, std::size_t d, double cost,
                         double margin) {
  const double dd = static_cast<double>(d);
  return inverse_norm * (cost * (gamma * dd + 1.0) + margin * ((1.0 + gamma) * dd + 2.0)) /
         (1.0 - gamma);
}

double kappa_upper_bound(const BeliefMatrix& bm, double cost, double margin) {
  return kappa_upper_bound(spectral_norm_inverse(bm), bm.gamma(), bm.size(), cost, margin);
}

double ambiguity_threshold(double inverse_norm, double gamma, std::size_t d) {
  if (!(inverse_norm > 0.0) || !(gamma > 0.0 && gamma < 1.0) || d < 2)
    throw InputError("ambiguity threshold needs ‖B⁻¹‖ > 0, 0 < γ < 1 and d >= 2");
  return (1.0 - gamma) / (2.0 * inverse_norm * ((1.0 + gamma) * static_cast<double>(d) + 2.0));
}

double ambiguity_threshold(const BeliefMatrix& bm) {
  return ambiguity_threshold(spectral_norm_inverse(bm), bm.gamma(), bm.size());
}

double safety_margin(double inverse_norm, double gamma, std::size_t d, double cost, double eta) {
  if (!(eta >= 0.0) || !std::isfinite(eta)) throw InputError("ambiguity radius must be nonnegative");
  if (!(cost > 0.0)) throw InputError("observation cost must be positive");
  const double threshold = ambiguity_threshold(inverse_norm, gamma, d);
  const double dd = static_cast<double>(d);
  const double denom = (1.0 - gamma) - 2.0 * inverse_norm * ((1.0 + gamma) * dd + 2.0) * eta;
  if (eta >= threshold || !(denom > 0.0))
    throw AmbiguityTooLarge("ambiguity radius " + std::to_string(eta) +
                                " is not below the threshold " + std::to_string(threshold),
                            eta, threshold);
  return 2.0 * inverse_norm * (gamma * dd + 1.0) * eta / denom * cost;
}

double safety_margin(const BeliefMatrix& bm, double cost, double eta) {
  return safety_margin(spectral_norm_inverse(bm), bm.gamma(), bm.size(), cost, eta);
}

}  // namespace peerlab
