#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "peerlab/distributions.hpp"
#include "peerlab/linalg.hpp"

namespace peerlab {

/// Co-occurrence counts of (focal report, reference report).
class PairCounts {
 public:
  explicit PairCounts(std::size_t d);

  std::size_t size() const { return d_; }
  void add(std::size_t focal, std::size_t reference, std::uint64_t n = 1);
  std::uint64_t operator()(std::size_t focal, std::size_t reference) const {
    return counts_[focal * d_ + reference];
  }
  std::uint64_t row_total(std::size_t focal) const;
  std::uint64_t total() const { return total_; }
  std::span<const std::uint64_t> row(std::size_t focal) const {
    return {counts_.data() + focal * d_, d_};
  }

  static PairCounts from_matrix(const std::vector<std::vector<std::uint64_t>>& m);

 private:
  std::size_t d_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
};

/// Estimated conditionals p̂(· | x) for every focal label, the unconditional
/// row p̂(· | ∅), the focal frequencies, and a TV radius.
struct AmbiguitySet {
  Matrix conditional;
  Vector prior_row;
  Vector focal_marginal;
  double radius = 0.0;

  std::size_t size() const { return conditional.rows(); }
  BeliefMatrix belief() const { return BeliefMatrix(conditional, focal_marginal); }
};

/// Ratio estimates from counts; radius left at 0 for the caller to set.
/// Throws InsufficientSupport naming the first focal label never reported.
AmbiguitySet empirical_conditional(const PairCounts& counts);

double tv_distance(std::span<const double> p, std::span<const double> q);
double tv_distance(const DiscreteDistribution& p, const DiscreteDistribution& q);

/// Which horizon term sits inside the confidence logarithm.
enum class HorizonTerm { LogT, LogLogT };

/// log((d+1) 2^d N h(T) / ε) with h = log T or log log T.
double confidence_log(std::size_t d, std::size_t n_agents, double horizon, double epsilon,
                      HorizonTerm term = HorizonTerm::LogT);

/// η_k = sqrt(confidence_log / (2 ρ τ_prev)).
double eta_schedule(double tau_prev, std::size_t d, std::size_t n_agents, double horizon,
                    double epsilon, double rho, HorizonTerm term = HorizonTerm::LogT);

/// τ = ⌈confidence_log / (2 ρ η̃²)⌉ after capping η̃ at 1/√2.
std::uint64_t warm_start_length(double eta_tilde, double rho, std::size_t d,
                                std::size_t n_agents, double horizon, double epsilon);

/// A distribution estimator together with its TV guarantee η_ε(t).
class EstimatorGuarantee {
 public:
  enum class Kind { Empirical, Laplace };

  static EstimatorGuarantee empirical();
  static EstimatorGuarantee laplace(double alpha = 1.0);

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  std::string name() const;

  /// TV radius after t samples at failure probability ε over d labels.
  double radius(double t, double epsilon, std::size_t d) const;

  /// Point estimate from label counts. The empirical estimator throws
  /// InsufficientSupport on an all-zero count vector.
  DiscreteDistribution estimate(std::span<const std::uint64_t> counts) const;

 private:
  EstimatorGuarantee(Kind kind, double alpha) : kind_(kind), alpha_(alpha) {}
  Kind kind_;
  double alpha_;
};

/// sqrt(log((2^d − 2)/ε) / (2t)), the empirical-estimator radius.
double empirical_tv_radius(double t, double epsilon, std::size_t d);

struct PacEstimate {
  DiscreteDistribution distribution;
  double radius;
};

PacEstimate pac_estimate(const EstimatorGuarantee& guarantee, std::span<const std::size_t> samples,
                         std::size_t d, double epsilon);

struct SampleBound {
  std::uint64_t rounds;   // ⌈(1+2η²)/(2ρη²) · log((d+1)2^d/ε)⌉
  double simplified;      // log((d+1)2^d/ε)/(ρη²), meaningful for η < 1/√2
};

/// Rounds after which every conditional row lies within η of the truth
/// with probability 1 − ε, given focal frequencies at least ρ.
SampleBound conditional_sample_bound(double eta, double epsilon, double rho, std::size_t d);

}  // namespace peerlab
