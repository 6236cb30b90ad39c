#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "peerlab/distributions.hpp"
#include "peerlab/linalg.hpp"
#include "peerlab/mechanism.hpp"

namespace testing_support {

using peerlab::Matrix;
using peerlab::Vector;

inline Vector random_simplex(std::mt19937_64& gen, std::size_t d, double floor = 0.0) {
  std::gamma_distribution<double> g(1.0, 1.0);
  Vector p(d);
  double s = 0.0;
  for (double& v : p) s += (v = g(gen));
  for (double& v : p) v = floor + (1.0 - floor * static_cast<double>(d)) * v / s;
  return p;
}

/// Row-stochastic matrix whose rows lean toward the diagonal, keeping the
/// matrix comfortably invertible.
inline Matrix random_belief(std::mt19937_64& gen, std::size_t d, double lean = 0.5) {
  Matrix b(d, d);
  for (std::size_t x = 0; x < d; ++x) {
    const Vector noise = random_simplex(gen, d);
    for (std::size_t y = 0; y < d; ++y) b(x, y) = (1.0 - lean) * noise[y] + (x == y ? lean : 0.0);
  }
  return b;
}

/// Random invertible belief instance with the focal marginal bounded away
/// from 0 and 1.
inline peerlab::BeliefMatrix random_instance(std::mt19937_64& gen, std::size_t d) {
  for (;;) {
    Matrix b = random_belief(gen, d, std::uniform_real_distribution<double>(0.3, 0.7)(gen));
    Vector focal = random_simplex(gen, d, 0.1 / static_cast<double>(d));
    try {
      peerlab::BeliefMatrix bm(std::move(b), std::move(focal));
      if (peerlab::spectral_norm_inverse(bm) < 50.0) return bm;
    } catch (const peerlab::Error&) {
    }
  }
}

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) e(r, c) = m(r, c);
  return e;
}

inline double eigen_spectral_norm(const Matrix& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(m));
  return svd.singularValues()(0);
}

inline double eigen_inverse_norm(const Matrix& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(to_eigen(m));
  return 1.0 / svd.singularValues()(svd.singularValues().size() - 1);
}

/// Independent evaluation of every incentive constraint with margin δ:
/// returns the smallest signed slack (nonnegative means feasible).
inline double oracle_min_slack(const Matrix& r, const peerlab::BeliefMatrix& bm, double c, double delta) {
  const std::size_t d = bm.size();
  const Eigen::MatrixXd B = to_eigen(bm.matrix());
  const Eigen::MatrixXd R = to_eigen(r);
  const Eigen::MatrixXd M = B * R.transpose();
  double worst = INFINITY;
  for (std::size_t x = 0; x < d; ++x)
    for (std::size_t y = 0; y < d; ++y)
      worst = std::min(worst, x == y ? M(x, y) - (c + delta) : (c - delta) - M(x, y));
  Eigen::VectorXd ref(d);
  for (std::size_t y = 0; y < d; ++y) ref(y) = bm.reference_marginal()[y];
  const Eigen::VectorXd lazy = R * ref;
  for (std::size_t y = 0; y < d; ++y) worst = std::min(worst, -delta - lazy(y));
  return worst;
}

}  // namespace testing_support
