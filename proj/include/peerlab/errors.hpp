#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace peerlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: dimension mismatch, out-of-range parameter, bad mass.
class InputError : public Error {
 public:
  using Error::Error;
};

/// The simplex engine could not produce a trustworthy answer.
class SolverFailure : public Error {
 public:
  using Error::Error;
};

/// A belief matrix is singular (or too close to it to invert reliably).
class SingularBelief : public Error {
 public:
  SingularBelief(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const { return condition_estimate_; }

 private:
  double condition_estimate_;
};

/// Conditioning on a focal observation with zero probability.
class DegenerateSupport : public Error {
 public:
  using Error::Error;
};

/// A mechanism LP turned out infeasible.
class InfeasibleMechanism : public Error {
 public:
  using Error::Error;
};

/// Ambiguity radius at or above the certifiable threshold.
class AmbiguityTooLarge : public Error {
 public:
  AmbiguityTooLarge(const std::string& what, double eta, double threshold)
      : Error(what), eta_(eta), threshold_(threshold) {}
  double eta() const { return eta_; }
  double threshold() const { return threshold_; }

 private:
  double eta_;
  double threshold_;
};

/// Empirical estimation hit a focal label that was never reported.
class InsufficientSupport : public Error {
 public:
  InsufficientSupport(const std::string& what, std::size_t label)
      : Error(what), label_(label) {}
  std::size_t label() const { return label_; }

 private:
  std::size_t label_;
};

/// A strategy was asked to act on an observation it does not have.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Horizon not longer than the warm start.
class DegenerateHorizon : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration would be too large.
class LimitError : public Error {
 public:
  using Error::Error;
};

}  // namespace peerlab
