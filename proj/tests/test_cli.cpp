#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>
#include <sys/wait.h>

#include "peerlab/app/commands.hpp"
#include "peerlab/app/config.hpp"
#include "peerlab/errors.hpp"

using namespace peerlab;
using namespace peerlab::app;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("peerlab_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << text;
  return p;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out;
};

Run run_cli(const std::string& args, const std::string& env = "") {
  const fs::path out = scratch() / "stdout.txt";
  const std::string cmd = env + " " + PEERLAB_CLI + std::string(" ") + args + " > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out)};
}

const char* kExampleOne = R"({"belief": [[0.82, 0.18], [0.18, 0.82]], "focal_marginal": [0.5, 0.5], "cost": 0.1})";

std::string small_experiment(std::uint64_t episodes, std::uint64_t stride) {
  return R"({"world": {"labels": 2, "accuracies": [0.95, 0.95, 0.9], "cost": 0.3, "label_cost": 1.0},
             "dram": {"horizon": 20000, "epsilon": 0.1, "eta_safety": 0.7},
             "episodes": )" +
         std::to_string(episodes) + R"(, "seed": 17, "stride": )" + std::to_string(stride) + "}";
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("solve reports the optimal agreement mechanism") {
    const auto cfg = write_file("ex1.json", kExampleOne);
    const auto r = run_cli("solve --json --config " + cfg.string());
    REQUIRE(r.code == 0);
    const Json j = Json::parse(r.out);
    CHECK(j.at("expected_payment").get<double>() == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(j.at("mechanism").at("reward").at(0).at(0).get<double>() == doctest::Approx(5.0 / 32.0).epsilon(1e-9));
    CHECK(j.at("certificate").at("certified").get<bool>());
    const auto text = run_cli("solve --config " + cfg.string());
    CHECK(text.code == 0);
    CHECK(text.out.find("expected payment: 0.1") != std::string::npos);
  }

  TEST_CASE("solve exit codes") {
    const auto singular = write_file("singular.json", R"({"belief": [[0.5, 0.5], [0.5, 0.5]], "cost": 0.1})");
    CHECK(run_cli("solve --config " + singular.string()).code == kNumericalError);
    const auto wide = write_file("wide.json", R"({"belief": [[0.82, 0.18], [0.18, 0.82]], "cost": 0.1, "eta": 0.04})");
    CHECK(run_cli("solve --config " + wide.string()).code == kConfigError);
    const auto robust = write_file("robust.json", R"({"belief": [[0.82, 0.18], [0.18, 0.82]], "cost": 0.1, "eta": 0.01})");
    const auto r = run_cli("solve --json --config " + robust.string());
    REQUIRE(r.code == 0);
    const BeliefMatrix bm(Matrix{{0.82, 0.18}, {0.18, 0.82}}, {0.5, 0.5});
    CHECK(Json::parse(r.out).at("delta").get<double>() == doctest::Approx(safety_margin(bm, 0.1, 0.01)).epsilon(1e-12));
    const auto bad = write_file("bad.json", R"({"belief": [[0.82, 0.18], [0.18, 0.82]], "cost": 0.1, "colour": 1})");
    CHECK(run_cli("solve --config " + bad.string()).code == kConfigError);
    CHECK(run_cli("solve --config " + (scratch() / "missing.json").string()).code == kConfigError);
    CHECK(run_cli("frobnicate").code == kConfigError);
  }

  TEST_CASE("audit reproduces the worked utilities") {
    const auto pm = write_file("pm.json", R"({"reward": [[1, -1], [-1, 1]], "cost": 0.1})");
    const auto w9 = write_file("w9.json", R"({"world": {"labels": 2, "accuracies": [0.9, 0.9], "cost": 0.1}})");
    const auto w8 = write_file("w8.json", R"({"world": {"labels": 2, "accuracies": [0.8, 0.8], "cost": 0.1}})");
    auto r = run_cli("audit --mechanism " + pm.string() + " --config " + w9.string());
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out).at("ic_gap").at("gap").get<double>() == doctest::Approx(0.54).epsilon(1e-12));
    r = run_cli("audit --mechanism " + pm.string() + " --config " + w8.string());
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out).at("ic_gap").at("gap").get<double>() == doctest::Approx(0.26).epsilon(1e-12));
    const auto flat = write_file("flat.json", R"({"mechanism": {"reward": [[1, 1], [1, 1]], "cost": 0.1}})");
    r = run_cli("audit --mechanism " + flat.string() + " --config " + w9.string());
    CHECK(r.code == kIncentiveFailure);
    CHECK(Json::parse(r.out).at("ic_gap").at("gap").get<double>() == doctest::Approx(-0.1));
  }

  TEST_CASE("schedule command") {
    const auto r = run_cli("schedule --kind doubling --tau 100 --horizon 1500");
    REQUIRE(r.code == 0);
    CHECK(Json::parse(r.out).at("boundaries") == Json({100, 200, 400, 800, 1500}));
    CHECK(run_cli("schedule --tau 100 --horizon 100").code == kConfigError);
    CHECK(run_cli("schedule --tau 100").code == kConfigError);
  }

  TEST_CASE("simulate is byte-identical across runs and worker counts") {
    const auto cfg = write_file("exp.json", small_experiment(6, 500));
    const fs::path a = scratch() / "a", b = scratch() / "b", c = scratch() / "c";
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + a.string()).code == 0);
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + b.string()).code == 0);
    REQUIRE(run_cli("simulate --workers 8 --config " + cfg.string() + " --out " + c.string()).code == 0);
    for (const char* f : {"summary.json", "regret.csv", "episodes.csv"}) {
      CHECK(read_file(a / f) == read_file(b / f));
      CHECK(read_file(a / f) == read_file(c / f));
    }
  }

  TEST_CASE("environment overrides sit between flags and the config file") {
    const auto cfg = write_file("exp_env.json", small_experiment(1, 1000));
    const fs::path base = scratch() / "env_base", envdir = scratch() / "env_dir", flag = scratch() / "env_flag";
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --out " + base.string()).code == 0);
    REQUIRE(run_cli("simulate --config " + cfg.string(), "PEERLAB_SEED=99 PEERLAB_OUT=" + envdir.string()).code == 0);
    REQUIRE(run_cli("simulate --seed 17 --config " + cfg.string() + " --out " + flag.string(), "PEERLAB_SEED=99").code == 0);
    CHECK(Json::parse(read_file(envdir / "summary.json")).at("seed") == 99);
    CHECK(read_file(base / "regret.csv") != read_file(envdir / "regret.csv"));
    CHECK(read_file(base / "regret.csv") == read_file(flag / "regret.csv"));
    CHECK(run_cli("simulate --config " + cfg.string(), "PEERLAB_SEED=abc").code == kConfigError);
  }

  TEST_CASE("unwritable output directory is an error") {
    const auto cfg = write_file("exp_bad_out.json", small_experiment(1, 1000));
    const auto blocker = write_file("blocker", "x");
    CHECK(run_cli("simulate --config " + cfg.string() + " --out " + (blocker / "sub").string()).code == kConfigError);
  }

  TEST_CASE("summary round-trips and carries a reproducible config hash") {
    const auto cfg = write_file("exp_rt.json", small_experiment(3, 700));
    const fs::path dir = scratch() / "rt";
    REQUIRE(run_cli("simulate --episodes 2 --config " + cfg.string() + " --out " + dir.string()).code == 0);
    const std::string text = read_file(dir / "summary.json");
    const Json j = Json::parse(text);
    CHECK(j.dump(2) + "\n" == text);
    CHECK(Json::parse(j.dump()) == j);
    CHECK(j.at("episodes").size() == 2);
    CHECK(j.at("config").at("episodes") == 2);
    CHECK(j.at("config_hash").get<std::string>() == hex64(config_hash(j.at("config"))));
    CHECK(j.at("version") == kVersion);
    // Episode count and curve alignment.
    const std::string csv = read_file(dir / "regret.csv");
    std::size_t lines = 0;
    for (char ch : csv) lines += ch == '\n';
    CHECK(lines == 1 + 20000 / 700 + 1);
  }

  TEST_CASE("regret column equals a recomputation from the trace") {
    const Json j = Json::parse(small_experiment(1, 1));
    const ExperimentConfig cfg = parse_experiment(j);
    const ResultBundle bundle = run_experiment(cfg, 1);
    const auto trace = run_dram(cfg.world, cfg.dram, cfg.strategies, cfg.seed, 0);
    const auto reg = regret_series(trace);
    REQUIRE(bundle.curve_rounds.size() == reg.size());
    for (std::size_t t = 0; t < reg.size(); ++t) {
      CHECK(bundle.curve_rounds[t] == t + 1);
      CHECK(bundle.mean_regret[t] == reg[t]);
    }
    std::istringstream csv(regret_csv(bundle));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "round,mean_regret,std_regret");
    for (std::size_t t = 0; t < reg.size(); ++t) {
      REQUIRE(std::getline(csv, line));
      const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
      CHECK(std::stod(line.substr(c1 + 1, c2 - c1 - 1)) == reg[t]);
    }
  }

  TEST_CASE("per-episode failures are recorded, not fatal") {
    Json j = Json::parse(small_experiment(2, 1000));
    j["strategies"] = Json::array({Json{{"type", "lazy_constant"}, {"label", 0}}, "truthful", "truthful"});
    const ResultBundle bundle = run_experiment(parse_experiment(j), 2);
    REQUIRE(bundle.episodes.size() == 2);
    for (const auto& e : bundle.episodes) {
      CHECK_FALSE(e.ok);
      CHECK(e.error.find("never reported") != std::string::npos);
    }
    CHECK(summary_json(bundle).at("aggregate").at("ok_episodes") == 0);
  }

  TEST_CASE("configuration parsing") {
    CHECK_THROWS_AS(parse_experiment(Json::parse(R"({"world": {"labels": 2, "accuracies": [0.9, 0.9]}})")), ConfigError);
    CHECK_THROWS_AS(parse_experiment(Json::parse(R"({"world": {"labels": 2, "accuracies": [0.9, 0.9], "cost": 0.1},
                                                     "dram": {"horizon": "long"}})")),
                    ConfigError);
    CHECK_THROWS_AS(parse_strategy(Json::parse(R"({"type": "misreport", "mapping": [0, 1]})"), 2), ConfigError);
    CHECK_THROWS_AS(parse_strategy(Json::parse(R"({"type": "lazy_constant", "label": 5})"), 2), ConfigError);
    const auto mixed = parse_strategy(
        Json::parse(R"({"type": "mixed", "branches": ["truthful", {"type": "lazy_constant", "label": 1}], "weights": [0.5, 0.5]})"), 2);
    CHECK(mixed.kind() == AgentStrategy::Kind::Mixed);
    const auto cfg = parse_experiment(Json::parse(small_experiment(4, 10)));
    CHECK(cfg.world.agents() == 3);
    CHECK(cfg.episodes == 4);
    CHECK_FALSE(cfg.canonical.contains("output"));
  }
}
