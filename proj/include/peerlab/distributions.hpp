#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "peerlab/linalg.hpp"

namespace peerlab {

/// Probability mass over the label alphabet {0, …, d-1}, d ≥ 2.
/// Inputs within 1e-9 of unit mass are renormalised; larger drift throws.
class DiscreteDistribution {
 public:
  explicit DiscreteDistribution(std::vector<double> probabilities);

  static DiscreteDistribution uniform(std::size_t d);
  static DiscreteDistribution point_mass(std::size_t d, std::size_t label);

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> probabilities() const { return p_; }
  double max() const;
  double min() const;

  friend bool operator==(const DiscreteDistribution&, const DiscreteDistribution&) = default;

 private:
  std::vector<double> p_;
};

/// Rows indexed by true label y, columns by observation x: entry p(x | y).
class SkillMatrix {
 public:
  explicit SkillMatrix(Matrix conditional);

  std::size_t size() const { return m_.rows(); }
  double operator()(std::size_t y, std::size_t x) const { return m_(y, x); }
  const Matrix& matrix() const { return m_; }
  DiscreteDistribution row(std::size_t y) const;

 private:
  Matrix m_;
};

/// Joint law of a (focal, reference) observation pair.
class JointDistribution {
 public:
  explicit JointDistribution(Matrix joint);

  std::size_t size() const { return m_.rows(); }
  double operator()(std::size_t focal, std::size_t reference) const { return m_(focal, reference); }
  const Matrix& matrix() const { return m_; }
  const Vector& focal_marginal() const { return focal_; }
  const Vector& reference_marginal() const { return reference_; }

 private:
  Matrix m_;
  Vector focal_;
  Vector reference_;
};

/// Posterior of the reference observation given the focal one.
///   matrix(x, x') = P(X_j = x' | X_i = x)
///   reference_marginal[x] = P(X_j = x)
///   focal_marginal[x] = P(X_i = x)
///   gamma = max_x P(X_i = x)
class BeliefMatrix {
 public:
  /// Reference marginal is derived as the focal-weighted mixture of rows.
  BeliefMatrix(Matrix conditional, Vector focal_marginal);

  std::size_t size() const { return b_.rows(); }
  const Matrix& matrix() const { return b_; }
  double operator()(std::size_t x, std::size_t xp) const { return b_(x, xp); }
  const Vector& reference_marginal() const { return reference_; }
  const Vector& focal_marginal() const { return focal_; }
  double gamma() const { return gamma_; }

 private:
  Matrix b_;
  Vector focal_;
  Vector reference_;
  double gamma_ = 0.0;
};

/// Shared validation for probability vectors: nonnegative, unit mass within
/// 1e-9 (renormalised), otherwise InputError naming `what`.
std::vector<double> normalize_probabilities(std::vector<double> p, const std::string& what);

}  // namespace peerlab
