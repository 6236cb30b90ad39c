#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "peerlab/app/commands.hpp"
#include "peerlab/errors.hpp"

namespace {

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

std::uint64_t parse_u64(const std::string& text, const char* what) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(text, &used);
    if (used != text.size() || text.front() == '-') throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw peerlab::ConfigError(std::string(what) + " must be an unsigned integer, got '" + text + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace peerlab::app;
  CLI::App app{"peerlab: robust peer-prediction mechanisms and adaptive simulations"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string solve_config;
  bool solve_json = false;
  auto* solve = app.add_subcommand("solve", "Solve one mechanism-design instance and audit it");
  solve->add_option("--config", solve_config, "Instance JSON")->required()->check(CLI::ExistingFile);
  solve->add_flag("--json", solve_json, "Print a JSON report instead of text");

  std::string sim_config;
  std::optional<std::string> sim_out, sim_seed, sim_estimator;
  std::optional<std::uint64_t> sim_episodes, sim_stride;
  unsigned sim_workers = 1;
  auto* sim = app.add_subcommand("simulate", "Run seeded episodes and write a result bundle");
  sim->add_option("--config", sim_config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", sim_out, "Output directory (env PEERLAB_OUT)");
  sim->add_option("--seed", sim_seed, "Master seed (env PEERLAB_SEED)");
  sim->add_option("--episodes", sim_episodes, "Episode count");
  sim->add_option("--stride", sim_stride, "Regret curve subsampling stride");
  sim->add_option("--estimator", sim_estimator, "Estimator")->check(CLI::IsMember({"empirical", "laplace"}));
  sim->add_option("--workers", sim_workers, "Worker threads")->check(CLI::Range(1u, 1024u));

  std::string audit_mech, audit_world;
  auto* audit = app.add_subcommand("audit", "Audit a mechanism against a world");
  audit->add_option("--mechanism", audit_mech, "Mechanism JSON")->required()->check(CLI::ExistingFile);
  audit->add_option("--config", audit_world, "World or instance JSON")->required()->check(CLI::ExistingFile);

  std::optional<std::string> sched_config;
  std::string sched_kind = "doubling";
  std::optional<std::uint64_t> sched_tau, sched_horizon;
  auto* sched = app.add_subcommand("schedule", "Print epoch boundaries");
  sched->add_option("--config", sched_config, "Experiment JSON")->check(CLI::ExistingFile);
  sched->add_option("--kind", sched_kind, "doubling or known_t");
  sched->add_option("--tau", sched_tau, "Warm-start length");
  sched->add_option("--horizon", sched_horizon, "Horizon T");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    if (*solve) return cmd_solve(solve_config, solve_json, std::cout);
    if (*sim) {
      SimulateOverrides o;
      if (auto s = sim_seed ? sim_seed : env("PEERLAB_SEED")) o.seed = parse_u64(*s, "seed");
      o.out = sim_out ? sim_out : env("PEERLAB_OUT");
      o.episodes = sim_episodes;
      o.stride = sim_stride;
      o.estimator = sim_estimator;
      o.workers = sim_workers;
      return cmd_simulate(sim_config, o, std::cout);
    }
    if (*audit) return cmd_audit(audit_mech, audit_world, std::cout);
    if (*sched) {
      std::optional<std::filesystem::path> cfg;
      if (sched_config) cfg = *sched_config;
      return cmd_schedule(cfg, sched_kind, sched_tau, sched_horizon, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kConfigError;
}
