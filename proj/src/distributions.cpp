#include "peerlab/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "peerlab/errors.hpp"

namespace peerlab {

namespace {
constexpr double kMassTolerance = 1e-9;
constexpr double kNegativeClamp = 1e-12;
}  // namespace

std::vector<double> normalize_probabilities(std::vector<double> p, const std::string& what) {
  if (p.empty()) throw InputError(what + ": empty probability vector");
  for (double& v : p) {
    if (!std::isfinite(v)) throw InputError(what + ": non-finite probability");
    if (v < 0.0) {
      if (v < -kNegativeClamp) throw InputError(what + ": negative probability " + std::to_string(v));
      v = 0.0;
    }
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (std::abs(total - 1.0) > kMassTolerance)
    throw InputError(what + ": total mass " + std::to_string(total) + " is not 1");
  if (total != 1.0)
    for (double& v : p) v /= total;
  return p;
}

DiscreteDistribution::DiscreteDistribution(std::vector<double> probabilities)
    : p_(normalize_probabilities(std::move(probabilities), "distribution")) {
  if (p_.size() < 2) throw InputError("distribution needs an alphabet of at least 2 labels");
}

DiscreteDistribution DiscreteDistribution::uniform(std::size_t d) {
  if (d < 2) throw InputError("alphabet must have at least 2 labels");
  return DiscreteDistribution(std::vector<double>(d, 1.0 / static_cast<double>(d)));
}

DiscreteDistribution DiscreteDistribution::point_mass(std::size_t d, std::size_t label) {
  if (label >= d) throw InputError("label outside alphabet");
  std::vector<double> p(d, 0.0);
  p[label] = 1.0;
  return DiscreteDistribution(std::move(p));
}

double DiscreteDistribution::max() const { return *std::max_element(p_.begin(), p_.end()); }
double DiscreteDistribution::min() const { return *std::min_element(p_.begin(), p_.end()); }

SkillMatrix::SkillMatrix(Matrix conditional) : m_(std::move(conditional)) {
  if (!m_.square()) throw InputError("skill matrix must be square");
  if (m_.rows() < 2) throw InputError("skill matrix needs at least 2 labels");
  for (std::size_t y = 0; y < m_.rows(); ++y) {
    const auto row = normalize_probabilities({m_.row(y).begin(), m_.row(y).end()},
                                             "skill row " + std::to_string(y));
    std::copy(row.begin(), row.end(), m_.row(y).begin());
  }
  bool distinct = false;
  for (std::size_t y = 1; y < m_.rows() && !distinct; ++y)
    for (std::size_t x = 0; x < m_.cols(); ++x)
      if (m_(y, x) != m_(0, x)) {
        distinct = true;
        break;
      }
  if (!distinct) throw InputError("skill matrix is degenerate: all rows identical");
}

DiscreteDistribution SkillMatrix::row(std::size_t y) const {
  return DiscreteDistribution({m_.row(y).begin(), m_.row(y).end()});
}

JointDistribution::JointDistribution(Matrix joint) : m_(std::move(joint)) {
  if (!m_.square() || m_.rows() < 2) throw InputError("joint distribution must be square, d >= 2");
  const auto flat = normalize_probabilities(m_.data(), "joint distribution");
  const std::size_t d = m_.rows();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) m_(i, j) = flat[i * d + j];
  focal_.assign(d, 0.0);
  reference_.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      focal_[i] += m_(i, j);
      reference_[j] += m_(i, j);
    }
}

BeliefMatrix::BeliefMatrix(Matrix conditional, Vector focal_marginal)
    : b_(std::move(conditional)),
      focal_(normalize_probabilities(std::move(focal_marginal), "focal marginal")) {
  const std::size_t d = b_.rows();
  if (!b_.square() || d < 2) throw InputError("belief matrix must be square, d >= 2");
  if (focal_.size() != d) throw InputError("focal marginal dimension mismatch");
  for (std::size_t x = 0; x < d; ++x) {
    if (!(focal_[x] > 0.0))
      throw DegenerateSupport("focal label " + std::to_string(x) + " has zero probability");
    const auto row = normalize_probabilities({b_.row(x).begin(), b_.row(x).end()},
                                             "belief row " + std::to_string(x));
    std::copy(row.begin(), row.end(), b_.row(x).begin());
  }
  reference_.assign(d, 0.0);
  for (std::size_t x = 0; x < d; ++x)
    for (std::size_t xp = 0; xp < d; ++xp) reference_[xp] += focal_[x] * b_(x, xp);
  gamma_ = *std::max_element(focal_.begin(), focal_.end());
  if (!(gamma_ < 1.0)) throw DegenerateSupport("focal marginal is a point mass (gamma = 1)");
}

}  // namespace peerlab
