#include "peerlab/estimation.hpp"

#include <algorithm>
#include <cmath>

#include "peerlab/errors.hpp"

namespace peerlab {

PairCounts::PairCounts(std::size_t d) : d_(d), counts_(d * d, 0) {
  if (d < 2) throw InputError("pair counts need an alphabet of at least 2 labels");
}

void PairCounts::add(std::size_t focal, std::size_t reference, std::uint64_t n) {
  if (focal >= d_ || reference >= d_) throw InputError("report outside alphabet");
  counts_[focal * d_ + reference] += n;
  total_ += n;
}

std::uint64_t PairCounts::row_total(std::size_t focal) const {
  std::uint64_t s = 0;
  for (auto v : row(focal)) s += v;
  return s;
}

PairCounts PairCounts::from_matrix(const std::vector<std::vector<std::uint64_t>>& m) {
  PairCounts pc(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i].size() != m.size()) throw InputError("pair count matrix must be square");
    for (std::size_t j = 0; j < m.size(); ++j) pc.add(i, j, m[i][j]);
  }
  return pc;
}

AmbiguitySet empirical_conditional(const PairCounts& counts) {
  const std::size_t d = counts.size();
  if (counts.total() == 0) throw InsufficientSupport("no report pairs observed", 0);
  AmbiguitySet set;
  set.conditional = Matrix(d, d);
  set.prior_row.assign(d, 0.0);
  set.focal_marginal.assign(d, 0.0);
  const double total = static_cast<double>(counts.total());
  for (std::size_t x = 0; x < d; ++x) {
    const std::uint64_t n = counts.row_total(x);
    if (n == 0)
      throw InsufficientSupport("focal label " + std::to_string(x) + " was never reported", x);
    for (std::size_t y = 0; y < d; ++y)
      set.conditional(x, y) = static_cast<double>(counts(x, y)) / static_cast<double>(n);
    set.focal_marginal[x] = static_cast<double>(n) / total;
  }
  for (std::size_t y = 0; y < d; ++y) {
    std::uint64_t col = 0;
    for (std::size_t x = 0; x < d; ++x) col += counts(x, y);
    set.prior_row[y] = static_cast<double>(col) / total;
  }
  return set;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InputError("total variation needs equal alphabets");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

double tv_distance(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  return tv_distance(p.probabilities(), q.probabilities());
}

namespace {

void check_schedule_inputs(std::size_t d, std::size_t n_agents, double horizon, double epsilon) {
  if (d < 2) throw InputError("alphabet size must be at least 2");
  if (n_agents < 1) throw InputError("agent count must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("failure tolerance must lie in (0,1)");
  if (!(horizon > 1.0) || !std::isfinite(horizon)) throw InputError("horizon must exceed 1");
}

void check_rho(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw InputError("observation frequency bound must lie in (0,1)");
}

}  // namespace

double confidence_log(std::size_t d, std::size_t n_agents, double horizon, double epsilon,
                      HorizonTerm term) {
  check_schedule_inputs(d, n_agents, horizon, epsilon);
  double h = std::log(horizon);
  if (term == HorizonTerm::LogLogT) {
    if (!(h > 1.0)) throw InputError("log log T requires T > e");
    h = std::log(h);
  }
  const double inner = static_cast<double>(d + 1) * std::ldexp(1.0, static_cast<int>(d)) *
                       static_cast<double>(n_agents) * h / epsilon;
  if (!(inner > 1.0)) throw InputError("confidence logarithm is not positive for these inputs");
  return std::log(inner);
}

double eta_schedule(double tau_prev, std::size_t d, std::size_t n_agents, double horizon,
                    double epsilon, double rho, HorizonTerm term) {
  check_rho(rho);
  if (!(tau_prev >= 1.0)) throw InputError("previous boundary must be at least one round");
  return std::sqrt(confidence_log(d, n_agents, horizon, epsilon, term) / (2.0 * rho * tau_prev));
}

std::uint64_t warm_start_length(double eta_tilde, double rho, std::size_t d,
                                std::size_t n_agents, double horizon, double epsilon) {
  check_rho(rho);
  if (!(eta_tilde > 0.0)) throw InputError("ambiguity threshold must be positive");
  const double eta = std::min(eta_tilde, 1.0 / std::sqrt(2.0));
  const double tau =
      confidence_log(d, n_agents, horizon, epsilon) / (2.0 * rho * eta * eta);
  return static_cast<std::uint64_t>(std::ceil(tau));
}

double empirical_tv_radius(double t, double epsilon, std::size_t d) {
  if (!(t > 0.0)) throw InputError("sample count must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("failure tolerance must lie in (0,1)");
  if (d < 2) throw InputError("alphabet size must be at least 2");
  const double classes = std::ldexp(1.0, static_cast<int>(d)) - 2.0;
  return std::sqrt(std::log(classes / epsilon) / (2.0 * t));
}

EstimatorGuarantee EstimatorGuarantee::empirical() { return {Kind::Empirical, 0.0}; }

EstimatorGuarantee EstimatorGuarantee::laplace(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InputError("Laplace pseudo-count must be positive");
  return {Kind::Laplace, alpha};
}

std::string EstimatorGuarantee::name() const {
  return kind_ == Kind::Empirical ? "empirical" : "laplace";
}

double EstimatorGuarantee::radius(double t, double epsilon, std::size_t d) const {
  const double base = empirical_tv_radius(t, epsilon, d);
  if (kind_ == Kind::Empirical) return base;
  const double ad = alpha_ * static_cast<double>(d);
  return base + ad / (t + ad);
}

DiscreteDistribution EstimatorGuarantee::estimate(std::span<const std::uint64_t> counts) const {
  std::uint64_t n = 0;
  for (auto c : counts) n += c;
  const std::size_t d = counts.size();
  std::vector<double> p(d);
  if (kind_ == Kind::Empirical) {
    if (n == 0) throw InsufficientSupport("empirical estimate from zero samples", 0);
    for (std::size_t i = 0; i < d; ++i) p[i] = static_cast<double>(counts[i]) / static_cast<double>(n);
  } else {
    const double denom = static_cast<double>(n) + alpha_ * static_cast<double>(d);
    for (std::size_t i = 0; i < d; ++i) p[i] = (static_cast<double>(counts[i]) + alpha_) / denom;
  }
  return DiscreteDistribution(std::move(p));
}

PacEstimate pac_estimate(const EstimatorGuarantee& guarantee, std::span<const std::size_t> samples,
                         std::size_t d, double epsilon) {
  if (samples.empty()) throw InputError("estimation needs at least one sample");
  std::vector<std::uint64_t> counts(d, 0);
  for (auto s : samples) {
    if (s >= d) throw InputError("sample label outside alphabet");
    ++counts[s];
  }
  return {guarantee.estimate(counts),
          guarantee.radius(static_cast<double>(samples.size()), epsilon, d)};
}

SampleBound conditional_sample_bound(double eta, double epsilon, double rho, std::size_t d) {
  if (!(eta > 0.0 && eta < 1.0)) throw InputError("radius must lie in (0,1)");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InputError("failure tolerance must lie in (0,1)");
  check_rho(rho);
  if (d < 2) throw InputError("alphabet size must be at least 2");
  const double lg = std::log(static_cast<double>(d + 1) * std::ldexp(1.0, static_cast<int>(d)) / epsilon);
  const double e2 = eta * eta;
  const double exact = (1.0 + 2.0 * e2) / (2.0 * rho * e2) * lg;
  const double snapped = std::abs(exact - std::round(exact)) < 1e-9 * exact ? std::round(exact) : exact;
  return {static_cast<std::uint64_t>(std::ceil(snapped)), lg / (rho * e2)};
}

}  // namespace peerlab
