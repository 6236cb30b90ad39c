#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "peerlab/dram.hpp"
#include "peerlab/environment.hpp"
#include "peerlab/estimation.hpp"
#include "peerlab/mechanism.hpp"

namespace peerlab::app {

using Json = nlohmann::json;

enum class Algorithm { Dram, DramPlus };

/// A complete simulation setup parsed from JSON.
struct ExperimentConfig {
  World world;
  DramConfig dram;
  std::vector<AgentStrategy> strategies;
  Algorithm algorithm = Algorithm::Dram;
  EstimatorGuarantee estimator = EstimatorGuarantee::empirical();
  std::uint64_t episodes = 1;
  std::uint64_t seed = 0;
  std::uint64_t stride = 1000;
  std::string output = "results";
  /// The input configuration with overrides applied and "output" removed.
  Json canonical;
};

/// One mechanism-design instance: a belief matrix with its focal marginal.
struct InstanceConfig {
  BeliefMatrix belief;
  JointDistribution joint;
  double cost = 0.0;
  std::optional<double> margin;
  std::optional<double> eta;
  std::optional<double> radius;
  std::string method = "optimal";
};

Json load_json(const std::filesystem::path& path);

ExperimentConfig parse_experiment(const Json& j);
InstanceConfig parse_instance(const Json& j);
Mechanism parse_mechanism(const Json& j);

World parse_world(const Json& j);
AgentStrategy parse_strategy(const Json& j, std::size_t labels);
Matrix parse_matrix(const Json& j, const std::string& what);
Vector parse_vector(const Json& j, const std::string& what);

Json to_json(const Matrix& m);
Json to_json(const Mechanism& m);
Json to_json(const IcGapReport& r);
Json to_json(const RobustnessCertificate& c);
Json to_json(const EpochSchedule& s);

/// 64-bit FNV-1a over the canonical (sorted-key, compact) JSON text.
std::uint64_t config_hash(const Json& canonical);
std::string hex64(std::uint64_t v);

}  // namespace peerlab::app
