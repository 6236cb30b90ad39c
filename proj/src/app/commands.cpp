#include "peerlab/app/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <thread>

#include "peerlab/errors.hpp"

namespace peerlab::app {

namespace {

constexpr double kIncentiveTolerance = 1e-9;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// JSON cannot carry infinities; an unbounded radius is written as null.
Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json plan_json(const EpisodePlan& plan) {
  Json etas = Json::array();
  for (double e : plan.etas) etas.push_back(finite_or_null(e));
  const auto& p = plan.params;
  return {{"rho", p.rho},
          {"rho_true", p.rho_true},
          {"gamma", p.gamma},
          {"gamma_true", p.gamma_true},
          {"eta_tilde", p.eta_tilde},
          {"eta_tilde_true", p.eta_tilde_true},
          {"warnings", p.warnings},
          {"schedule", to_json(plan.schedule)},
          {"etas", etas},
          {"estimator", plan.estimator.name()},
          {"epsilon_split_epochs", plan.epsilon_split_epochs}};
}

Json epochs_json(const EpisodeTrace& trace, bool with_mechanisms) {
  Json epochs = Json::array();
  for (const auto& e : trace.epochs) {
    Json agents = Json::array();
    for (const auto& a : e.agents) {
      Json aj = {{"agent", a.agent},
                 {"reference", a.reference},
                 {"eta", finite_or_null(a.eta)},
                 {"delta", a.delta},
                 {"kappa", a.mechanism.kappa},
                 {"fallback", a.fallback},
                 {"estimation_error", a.estimation_error},
                 {"true_payment", a.true_payment}};
      if (a.fallback) aj["fallback_reason"] = a.fallback_reason;
      if (a.gap) aj["ic_gap"] = a.gap->gap;
      if (with_mechanisms) aj["mechanism"] = to_json(a.mechanism);
      agents.push_back(std::move(aj));
    }
    epochs.push_back({{"epoch", e.index},
                      {"start", e.start},
                      {"end", e.end},
                      {"eta", finite_or_null(e.eta)},
                      {"agents", std::move(agents)}});
  }
  return epochs;
}

std::vector<std::uint64_t> curve_rounds_for(std::uint64_t horizon, std::uint64_t stride) {
  std::vector<std::uint64_t> rounds;
  for (std::uint64_t t = stride; t < horizon; t += stride) rounds.push_back(t);
  rounds.push_back(horizon);
  return rounds;
}

EpisodeSummary summarize(const ExperimentConfig& cfg, const EpisodePlan& plan,
                         const std::vector<std::uint64_t>& rounds, std::uint64_t episode) {
  EpisodeSummary s;
  s.episode = episode;
  try {
    const EpisodeTrace trace = run_episode(cfg.world, cfg.dram, cfg.strategies, plan, cfg.seed, episode);
    const std::vector<double> reg = regret_series(trace);
    const std::uint64_t tau = trace.schedule.warm_start();
    s.ok = true;
    s.final_regret = reg.back();
    s.warm_regret = tau > 0 ? reg[tau - 1] : 0.0;
    s.adaptive_regret = s.final_regret - s.warm_regret;
    s.min_gap = trace.min_gap;
    s.violation = trace.violation;
    s.fallbacks = trace.fallbacks;
    s.oracle = trace.oracle;
    s.curve.reserve(rounds.size());
    for (std::uint64_t t : rounds) s.curve.push_back(reg[t - 1]);
    s.epochs = epochs_json(trace, episode == 0);
  } catch (const Error& e) {
    s.ok = false;
    s.error = e.what();
    s.epochs = Json::array();
  }
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InputError*>(&e) ||
      dynamic_cast<const AmbiguityTooLarge*>(&e) || dynamic_cast<const DegenerateHorizon*>(&e) ||
      dynamic_cast<const LimitError*>(&e) || dynamic_cast<const ProtocolError*>(&e) ||
      dynamic_cast<const std::filesystem::filesystem_error*>(&e))
    return kConfigError;
  return kNumericalError;
}

EpisodePlan make_plan(const ExperimentConfig& cfg) {
  return cfg.algorithm == Algorithm::DramPlus ? plan_dram_plus(cfg.world, cfg.dram, cfg.estimator)
                                              : plan_dram(cfg.world, cfg.dram);
}

ResultBundle run_experiment(const ExperimentConfig& cfg, unsigned workers) {
  ResultBundle bundle;
  bundle.seed = cfg.seed;
  bundle.config = cfg.canonical;
  bundle.config_hash = hex64(config_hash(cfg.canonical));
  bundle.plan = make_plan(cfg);
  bundle.curve_rounds = curve_rounds_for(cfg.dram.horizon, cfg.stride);

  const std::size_t n = cfg.episodes;
  bundle.episodes.resize(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t e = next++; e < n; e = next++)
      bundle.episodes[e] = summarize(cfg, bundle.plan, bundle.curve_rounds, e);
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  const std::size_t points = bundle.curve_rounds.size();
  bundle.mean_regret.assign(points, 0.0);
  bundle.std_regret.assign(points, 0.0);
  std::size_t ok = 0;
  for (const auto& s : bundle.episodes) {
    if (!s.ok) continue;
    ++ok;
    for (std::size_t i = 0; i < points; ++i) bundle.mean_regret[i] += s.curve[i];
  }
  if (ok == 0) return bundle;
  for (double& m : bundle.mean_regret) m /= static_cast<double>(ok);
  if (ok > 1) {
    for (const auto& s : bundle.episodes) {
      if (!s.ok) continue;
      for (std::size_t i = 0; i < points; ++i) {
        const double dev = s.curve[i] - bundle.mean_regret[i];
        bundle.std_regret[i] += dev * dev;
      }
    }
    for (double& v : bundle.std_regret) v = std::sqrt(v / static_cast<double>(ok - 1));
  }
  return bundle;
}

Json summary_json(const ResultBundle& bundle) {
  Json episodes = Json::array();
  std::size_t ok = 0, violations = 0;
  double min_gap = std::numeric_limits<double>::infinity();
  for (const auto& s : bundle.episodes) {
    Json ej = {{"episode", s.episode}, {"ok", s.ok}};
    if (s.ok) {
      ++ok;
      violations += s.violation ? 1 : 0;
      min_gap = std::min(min_gap, s.min_gap);
      ej.update({{"final_regret", s.final_regret},
                 {"warm_regret", s.warm_regret},
                 {"adaptive_regret", s.adaptive_regret},
                 {"min_gap", finite_or_null(s.min_gap)},
                 {"violation", s.violation},
                 {"fallbacks", s.fallbacks},
                 {"mechanism_solves", s.oracle.mechanism_solves},
                 {"estimator_calls", s.oracle.estimator_calls},
                 {"epochs", s.epochs}});
    } else {
      ej["error"] = s.error;
    }
    episodes.push_back(std::move(ej));
  }
  return {{"version", kVersion},
          {"seed", bundle.seed},
          {"config_hash", bundle.config_hash},
          {"config", bundle.config},
          {"plan", plan_json(bundle.plan)},
          {"aggregate",
           {{"episodes", bundle.episodes.size()},
            {"ok_episodes", ok},
            {"violations", violations},
            {"min_gap", finite_or_null(min_gap)},
            {"final_mean_regret", bundle.mean_regret.empty() ? 0.0 : bundle.mean_regret.back()},
            {"final_std_regret", bundle.std_regret.empty() ? 0.0 : bundle.std_regret.back()}}},
          {"episodes", episodes}};
}

std::string regret_csv(const ResultBundle& bundle) {
  std::string s = "round,mean_regret,std_regret\n";
  for (std::size_t i = 0; i < bundle.curve_rounds.size(); ++i)
    s += std::to_string(bundle.curve_rounds[i]) + "," + fmt(bundle.mean_regret[i]) + "," +
         fmt(bundle.std_regret[i]) + "\n";
  return s;
}

std::string episodes_csv(const ResultBundle& bundle) {
  std::string s =
      "episode,ok,final_regret,warm_regret,adaptive_regret,min_gap,violation,fallbacks,"
      "mechanism_solves,estimator_calls\n";
  for (const auto& e : bundle.episodes) {
    s += std::to_string(e.episode) + "," + (e.ok ? "1" : "0") + "," + fmt(e.final_regret) + "," +
         fmt(e.warm_regret) + "," + fmt(e.adaptive_regret) + "," + fmt(e.min_gap) + "," +
         (e.violation ? "1" : "0") + "," + std::to_string(e.fallbacks) + "," +
         std::to_string(e.oracle.mechanism_solves) + "," + std::to_string(e.oracle.estimator_calls) +
         "\n";
  }
  return s;
}

void write_bundle(const ResultBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
  write_text(dir / "summary.json", summary_json(bundle).dump(2) + "\n");
  write_text(dir / "regret.csv", regret_csv(bundle));
  write_text(dir / "episodes.csv", episodes_csv(bundle));
}

int cmd_solve(const std::filesystem::path& config, bool json_output, std::ostream& out) {
  const InstanceConfig inst = parse_instance(load_json(config));
  const BeliefMatrix& bm = inst.belief;
  double delta = 0.0;
  if (inst.margin)
    delta = *inst.margin;
  else if (inst.eta)
    delta = safety_margin(bm, inst.cost, *inst.eta);

  Mechanism mech;
  if (inst.method == "optimal")
    mech = solve_optimal(bm, inst.cost);
  else if (inst.method == "robust_lp")
    mech = solve_robust(bm, inst.cost, delta);
  else
    mech = constructive_robust(bm, inst.cost, delta);

  const double payment = expected_truthful_payment(mech.reward, bm);
  const IcGapReport gap = ic_gap(mech, inst.joint, bm.size() <= 8);
  double radius = 0.0;
  if (inst.radius)
    radius = *inst.radius;
  else if (inst.eta)
    radius = *inst.eta;
  else if (delta > 0.0)
    radius = delta / (2.0 * mech.kappa);
  const RobustnessCertificate cert = certify_robustness(mech, bm.matrix(), bm.reference_marginal(),
                                                        radius, inst.cost, kIncentiveTolerance);
  const bool ok = gap.gap >= -kIncentiveTolerance && cert.certified;

  if (json_output) {
    out << Json{{"method", inst.method},
                {"mechanism", to_json(mech)},
                {"delta", delta},
                {"expected_payment", payment},
                {"ic_gap", to_json(gap)},
                {"certificate", to_json(cert)},
                {"ok", ok}}
               .dump(2)
        << "\n";
  } else {
    out << "method:           " << inst.method << "\n";
    out << "reward matrix R:\n";
    for (std::size_t x = 0; x < mech.size(); ++x) {
      out << " ";
      for (double v : mech.reward.row(x)) out << " " << fmt_short(v);
      out << "\n";
    }
    out << "kappa:            " << fmt_short(mech.kappa) << "\n";
    out << "margin delta:     " << fmt_short(delta) << "\n";
    out << "expected payment: " << fmt_short(payment) << "\n";
    out << "ic gap:           " << fmt_short(gap.gap) << " (truthful " << fmt_short(gap.truthful)
        << ", lazy " << fmt_short(gap.lazy.utility) << ", misreport " << fmt_short(gap.misreport.utility)
        << ")\n";
    out << "certificate:      radius " << fmt_short(cert.radius) << ", worst slack "
        << fmt_short(cert.worst_slack) << ", " << (cert.certified ? "certified" : "NOT certified") << "\n";
  }
  return ok ? kSuccess : kIncentiveFailure;
}

int cmd_simulate(const std::filesystem::path& config, const SimulateOverrides& overrides,
                 std::ostream& out) {
  Json j = load_json(config);
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  if (overrides.seed) j["seed"] = *overrides.seed;
  if (overrides.episodes) j["episodes"] = *overrides.episodes;
  if (overrides.stride) j["stride"] = *overrides.stride;
  if (overrides.estimator) j["estimator"] = *overrides.estimator;
  const ExperimentConfig cfg = parse_experiment(j);
  const std::filesystem::path dir = overrides.out ? *overrides.out : cfg.output;

  const ResultBundle bundle = run_experiment(cfg, overrides.workers);
  write_bundle(bundle, dir);

  const Json agg = summary_json(bundle).at("aggregate");
  out << "episodes: " << agg.at("ok_episodes").get<std::size_t>() << "/" << bundle.episodes.size()
      << " ok, violations: " << agg.at("violations").get<std::size_t>();
  if (agg.at("min_gap").is_number()) out << ", min ic gap: " << fmt_short(agg.at("min_gap").get<double>());
  out << ", final mean regret: " << fmt_short(agg.at("final_mean_regret").get<double>()) << "\n";
  out << "adaptive epochs: " << bundle.plan.schedule.adaptive_epochs()
      << ", warm start: " << bundle.plan.schedule.warm_start() << " rounds\n";
  out << "results written to " << dir.string() << "\n";
  return kSuccess;
}

int cmd_audit(const std::filesystem::path& mechanism, const std::filesystem::path& world,
              std::ostream& out) {
  const Mechanism mech = parse_mechanism(load_json(mechanism));
  const Json wj = load_json(world);
  std::optional<JointDistribution> joint;
  std::optional<double> radius;
  if (wj.is_object() && wj.contains("world")) {
    const World w = parse_world(wj.at("world"));
    if (w.agents() < 2) throw ConfigError("audit needs at least two agents in the world");
    joint = build_joint(w.prior(), w.skill(0), w.skill(1));
  } else {
    const InstanceConfig inst = parse_instance(wj);
    joint = inst.joint;
    radius = inst.radius ? inst.radius : inst.eta;
  }
  if (joint->size() != mech.size()) throw ConfigError("mechanism and world disagree on alphabet size");
  const BeliefMatrix bm = belief_matrix(*joint);
  if (!radius) radius = mech.margin > 0.0 ? mech.margin / (2.0 * mech.kappa) : 0.0;

  const IcGapReport gap = ic_gap(mech, *joint, mech.size() <= 8);
  const RobustnessCertificate cert = certify_robustness(mech, bm.matrix(), bm.reference_marginal(),
                                                        *radius, mech.cost, kIncentiveTolerance);
  const bool ok = gap.gap >= -kIncentiveTolerance && cert.certified;
  out << Json{{"ic_gap", to_json(gap)},
              {"certificate", to_json(cert)},
              {"expected_payment", expected_truthful_payment(mech.reward, bm)},
              {"ok", ok}}
             .dump(2)
      << "\n";
  return ok ? kSuccess : kIncentiveFailure;
}

int cmd_schedule(const std::optional<std::filesystem::path>& config, const std::string& kind,
                 std::optional<std::uint64_t> tau, std::optional<std::uint64_t> horizon,
                 std::ostream& out) {
  if (config) {
    const ExperimentConfig cfg = parse_experiment(load_json(*config));
    out << plan_json(make_plan(cfg)).dump(2) << "\n";
    return kSuccess;
  }
  if (!tau || !horizon) throw ConfigError("schedule needs --config, or both --tau and --horizon");
  const ScheduleKind k = schedule_kind_from_string(kind);
  if (k == ScheduleKind::Custom) throw ConfigError("custom schedules are only available through --config");
  out << to_json(build_schedule(k, *tau, *horizon)).dump(2) << "\n";
  return kSuccess;
}

}  // namespace peerlab::app
