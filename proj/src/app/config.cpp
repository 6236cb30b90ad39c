#include "peerlab/app/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "peerlab/errors.hpp"

namespace peerlab::app {

namespace {

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
std::optional<T> get_opt(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

double number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + " must be a number");
  return j.get<double>();
}

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  return j.at(key);
}

void reject_unknown(const Json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(std::string("unknown field '") + key + "' in " + where);
  }
}

template <class F>
auto as_config(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

Vector parse_vector(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  Vector v;
  for (const auto& x : j) {
    if (!x.is_number()) throw ConfigError(what + " must contain only numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

Matrix parse_matrix(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ConfigError(what + " must be a nonempty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j.at(0).is_array() ? j.at(0).size() : 0;
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const Vector row = parse_vector(j.at(r), what + " row");
    if (row.size() != cols) throw ConfigError(what + " is ragged");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = row[c];
  }
  return m;
}

World parse_world(const Json& j) {
  reject_unknown(j, {"labels", "prior", "accuracies", "skills", "cost", "label_cost", "prior_bounds"},
                 "world");
  return as_config([&] {
    std::optional<std::size_t> labels = get_opt<std::size_t>(j, "labels");
    std::optional<DiscreteDistribution> prior;
    if (j.contains("prior")) prior = DiscreteDistribution(parse_vector(j.at("prior"), "world.prior"));
    if (!labels && prior) labels = prior->size();

    std::vector<SkillMatrix> skills;
    if (j.contains("skills") && j.contains("accuracies"))
      throw ConfigError("world: give either 'skills' or 'accuracies', not both");
    if (j.contains("skills")) {
      for (const auto& s : require(j, "skills")) skills.emplace_back(parse_matrix(s, "world.skills"));
      if (!labels && !skills.empty()) labels = skills.front().size();
    } else {
      if (!labels) throw ConfigError("world: 'labels' is required with 'accuracies'");
      for (double a : parse_vector(require(j, "accuracies"), "world.accuracies"))
        skills.push_back(symmetric_skill(a, *labels));
    }
    if (!labels) throw ConfigError("world: cannot infer the alphabet size");
    if (!prior) prior = DiscreteDistribution::uniform(*labels);

    std::optional<PriorBounds> bounds;
    if (j.contains("prior_bounds")) {
      const Vector b = parse_vector(j.at("prior_bounds"), "world.prior_bounds");
      if (b.size() != 2) throw ConfigError("world.prior_bounds must be [lower, upper]");
      bounds = PriorBounds{b[0], b[1]};
    }
    return World(*prior, std::move(skills), number(require(j, "cost"), "world.cost"),
                 get_or<double>(j, "label_cost", 0.0), bounds);
  });
}

AgentStrategy parse_strategy(const Json& j, std::size_t labels) {
  return as_config([&]() -> AgentStrategy {
    if (j.is_string()) {
      const auto s = j.get<std::string>();
      if (s == "truthful") return AgentStrategy::truthful();
      throw ConfigError("unknown strategy '" + s + "'");
    }
    const Json& tj = require(j, "type");
    if (!tj.is_string()) throw ConfigError("strategy type must be a string");
    const std::string t = tj.get<std::string>();
    if (t == "truthful") return AgentStrategy::truthful();
    if (t == "lazy_constant") {
      const auto z = require(j, "label").get<std::size_t>();
      if (z >= labels) throw ConfigError("lazy_constant label outside alphabet");
      return AgentStrategy::lazy_constant(z);
    }
    if (t == "lazy_random")
      return AgentStrategy::lazy_random(DiscreteDistribution(parse_vector(require(j, "distribution"), "lazy distribution")));
    if (t == "misreport") {
      auto m = require(j, "mapping").get<std::vector<std::size_t>>();
      if (m.size() != labels) throw ConfigError("misreport mapping must have one entry per label");
      return AgentStrategy::misreport(std::move(m));
    }
    if (t == "mixed") {
      std::vector<AgentStrategy> branches;
      for (const auto& b : require(j, "branches")) branches.push_back(parse_strategy(b, labels));
      return AgentStrategy::mixed(std::move(branches), parse_vector(require(j, "weights"), "mixed weights"));
    }
    throw ConfigError("unknown strategy type '" + t + "'");
  });
}

ExperimentConfig parse_experiment(const Json& j) {
  reject_unknown(j, {"world", "dram", "strategies", "algorithm", "estimator", "episodes", "seed",
                     "stride", "output"},
                 "experiment config");
  ExperimentConfig cfg{parse_world(require(j, "world")), {}, {}, Algorithm::Dram,
                       EstimatorGuarantee::empirical(), 1, 0, 1000, "results", {}};
  const std::size_t n = cfg.world.agents();
  const std::size_t d = cfg.world.labels();

  const Json dj = j.value("dram", Json::object());
  reject_unknown(dj, {"horizon", "epsilon", "rho", "rho_factor", "gamma", "eta_tilde", "eta_safety",
                      "warm_start", "schedule", "boundaries", "assignment", "warm_reward",
                      "warm_reward_scale", "solver", "audit"},
                 "dram");
  DramConfig& dc = cfg.dram;
  dc.horizon = get_or<std::uint64_t>(dj, "horizon", dc.horizon);
  dc.epsilon = get_or<double>(dj, "epsilon", dc.epsilon);
  dc.rho = get_opt<double>(dj, "rho");
  dc.rho_factor = get_or<double>(dj, "rho_factor", dc.rho_factor);
  if (dj.contains("gamma")) dc.gamma = parse_vector(dj.at("gamma"), "dram.gamma");
  dc.eta_tilde = get_opt<double>(dj, "eta_tilde");
  dc.eta_safety = get_or<double>(dj, "eta_safety", dc.eta_safety);
  dc.warm_start = get_opt<std::uint64_t>(dj, "warm_start");
  dc.schedule = schedule_kind_from_string(get_or<std::string>(dj, "schedule", "doubling"));
  if (dj.contains("boundaries"))
    dc.custom_boundaries = as_config([&] { return dj.at("boundaries").get<std::vector<std::uint64_t>>(); });
  dc.assignment = assignment_from_string(get_or<std::string>(dj, "assignment", "cyclic"));
  dc.warm_reward = warm_start_reward_from_string(get_or<std::string>(dj, "warm_reward", "fact_check"));
  dc.warm_reward_scale = get_or<double>(dj, "warm_reward_scale", dc.warm_reward_scale);
  dc.solver = solver_from_string(get_or<std::string>(dj, "solver", "robust_lp"));
  dc.audit = get_or<bool>(dj, "audit", true);
  dc.validate();

  if (j.contains("strategies")) {
    const Json& sj = j.at("strategies");
    if (!sj.is_array() || sj.size() != n) throw ConfigError("strategies needs one entry per agent");
    for (const auto& s : sj) cfg.strategies.push_back(parse_strategy(s, d));
  } else {
    cfg.strategies.assign(n, AgentStrategy::truthful());
  }

  const auto algo = get_or<std::string>(j, "algorithm", "dram");
  if (algo == "dram")
    cfg.algorithm = Algorithm::Dram;
  else if (algo == "dram_plus")
    cfg.algorithm = Algorithm::DramPlus;
  else
    throw ConfigError("unknown algorithm '" + algo + "' (expected dram or dram_plus)");

  if (j.contains("estimator")) {
    const Json& ej = j.at("estimator");
    const std::string kind = ej.is_string() ? ej.get<std::string>() : get_or<std::string>(ej, "type", "empirical");
    if (kind == "empirical")
      cfg.estimator = EstimatorGuarantee::empirical();
    else if (kind == "laplace")
      cfg.estimator = as_config([&] {
        return EstimatorGuarantee::laplace(ej.is_object() ? get_or<double>(ej, "alpha", 1.0) : 1.0);
      });
    else
      throw ConfigError("unknown estimator '" + kind + "' (expected empirical or laplace)");
  }

  cfg.episodes = get_or<std::uint64_t>(j, "episodes", 1);
  cfg.seed = get_or<std::uint64_t>(j, "seed", 0);
  cfg.stride = get_or<std::uint64_t>(j, "stride", 1000);
  cfg.output = get_or<std::string>(j, "output", "results");
  if (cfg.episodes == 0) throw ConfigError("episodes must be positive");
  if (cfg.stride == 0) throw ConfigError("stride must be positive");

  cfg.canonical = j;
  cfg.canonical.erase("output");
  return cfg;
}

InstanceConfig parse_instance(const Json& j) {
  reject_unknown(j, {"belief", "focal_marginal", "joint", "prior", "skills", "accuracies", "labels",
                     "cost", "margin", "eta", "radius", "method"},
                 "instance");
  return as_config([&] {
    std::optional<JointDistribution> joint;
    if (j.contains("belief")) {
      const Matrix b = parse_matrix(j.at("belief"), "belief");
      const Vector focal = j.contains("focal_marginal")
                               ? parse_vector(j.at("focal_marginal"), "focal_marginal")
                               : Vector(b.rows(), 1.0 / static_cast<double>(b.rows()));
      if (focal.size() != b.rows()) throw ConfigError("focal_marginal size differs from belief");
      Matrix m(b.rows(), b.cols());
      for (std::size_t x = 0; x < b.rows(); ++x)
        for (std::size_t y = 0; y < b.cols(); ++y) m(x, y) = focal[x] * b(x, y);
      joint = JointDistribution(std::move(m));
    } else if (j.contains("joint")) {
      joint = JointDistribution(parse_matrix(j.at("joint"), "joint"));
    } else {
      Json w = Json::object();
      for (const char* k : {"labels", "prior", "skills", "accuracies"})
        if (j.contains(k)) w[k] = j.at(k);
      w["cost"] = require(j, "cost");
      const World world = parse_world(w);
      joint = build_joint(world.prior(), world.skill(0), world.skill(1));
    }
    InstanceConfig inst{belief_matrix(*joint), *joint, 0.0, std::nullopt, std::nullopt, std::nullopt, "optimal"};
    inst.cost = number(require(j, "cost"), "cost");
    inst.margin = get_opt<double>(j, "margin");
    inst.eta = get_opt<double>(j, "eta");
    inst.radius = get_opt<double>(j, "radius");
    inst.method = get_or<std::string>(j, "method", inst.margin || inst.eta ? "robust_lp" : "optimal");
    if (inst.method != "optimal" && inst.method != "robust_lp" && inst.method != "constructive")
      throw ConfigError("unknown method '" + inst.method + "' (expected optimal, robust_lp or constructive)");
    if (inst.margin && inst.eta) throw ConfigError("give either 'margin' or 'eta', not both");
    return inst;
  });
}

Mechanism parse_mechanism(const Json& j) {
  const Json& m = j.contains("mechanism") ? j.at("mechanism") : j;
  return as_config([&] {
    return Mechanism::make(parse_matrix(require(m, "reward"), "reward"), number(require(m, "cost"), "mechanism cost"),
                           get_or<double>(m, "margin", 0.0),
                           provenance_from_string(get_or<std::string>(m, "provenance", "manual")));
  });
}

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(Vector(m.row(r).begin(), m.row(r).end()));
  return rows;
}

Json to_json(const Mechanism& m) {
  return {{"reward", to_json(m.reward)},
          {"kappa", m.kappa},
          {"margin", m.margin},
          {"cost", m.cost},
          {"provenance", to_string(m.provenance)}};
}

Json to_json(const IcGapReport& r) {
  Json table = Json::array();
  for (const auto& row : r.table) table.push_back({{"strategy", row.strategy}, {"utility", row.utility}});
  return {{"truthful_utility", r.truthful},
          {"lazy_utility", r.lazy.utility},
          {"lazy_report", r.lazy.report},
          {"misreport_utility", r.misreport.utility},
          {"misreport_mapping", r.misreport.mapping},
          {"gap", r.gap},
          {"table", table}};
}

Json to_json(const RobustnessCertificate& c) {
  Json rows = Json::array();
  for (const auto& k : c.constraints)
    rows.push_back({{"constraint", k.name}, {"nominal_slack", k.nominal_slack}, {"worst_slack", k.worst_slack}});
  return {{"radius", c.radius}, {"worst_slack", c.worst_slack}, {"certified", c.certified}, {"constraints", rows}};
}

Json to_json(const EpochSchedule& s) {
  return {{"kind", to_string(s.kind)},
          {"horizon", s.horizon},
          {"warm_start", s.warm_start()},
          {"boundaries", s.boundaries},
          {"adaptive_epochs", s.adaptive_epochs()},
          {"total_epochs", s.total_epochs()}};
}

std::uint64_t config_hash(const Json& canonical) {
  const std::string text = canonical.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace peerlab::app
