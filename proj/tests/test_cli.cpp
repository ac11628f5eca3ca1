#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fedpower/config.hpp"
#include "fedpower/population.hpp"
#include "fedpower/runner.hpp"

using namespace fedpower;
using Catch::Matchers::WithinRel;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

nlohmann::json small_config() {
  return nlohmann::json::parse(R"({
    "seed": 5,
    "network": {"tau_th_s": 0.5},
    "training": {"rounds": 10, "eta": 0.1},
    "devices": {"count": 5, "total_bandwidth_hz": 500000.0},
    "data": {"train_samples": 400, "test_samples": 100, "dims": 8, "classes": 5},
    "experiment": {"n_runs": 2, "target_accuracies": [0.5],
                   "strategies": ["probabilistic", "uniform"]}
  })");
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("population generation") {
  PopulationConfig cfg;
  cfg.count = 100;
  cfg.placement_seed = 17;

  SECTION("bandwidth is split evenly") {
    const auto devices = generate_population(cfg);
    REQUIRE(devices.size() == 100);
    for (const auto& dev : devices) CHECK_THAT(dev.bandwidth_hz, WithinRel(1e5, 1e-12));
  }
  SECTION("distances stay inside the square's reach") {
    const auto devices = generate_population(cfg);
    const double reach = 500.0 * std::sqrt(2.0);
    for (const auto& dev : devices) {
      CHECK(dev.distance_m >= 1.0);
      CHECK(dev.distance_m <= reach);
    }
  }
  SECTION("budgets stay inside the configured range") {
    const auto devices = generate_population(cfg);
    for (const auto& dev : devices) {
      CHECK(dev.energy_budget_j >= 1e-3);
      CHECK(dev.energy_budget_j <= 100.0);
    }
  }
  SECTION("deterministic per seed, different across seeds") {
    const auto a = generate_population(cfg);
    const auto b = generate_population(cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].distance_m == b[i].distance_m);
      CHECK(a[i].energy_budget_j == b[i].energy_budget_j);
    }
    cfg.placement_seed = 18;
    const auto c = generate_population(cfg);
    CHECK(c[0].distance_m != a[0].distance_m);
  }
  SECTION("invalid configuration is rejected") {
    cfg.count = 0;
    CHECK_THROWS_AS(generate_population(cfg), std::invalid_argument);
  }
}

TEST_CASE("config parsing") {
  SECTION("defaults fill everything; overrides stick") {
    const auto cfg = parse_run_config(small_config(), RunMode::bench);
    CHECK(cfg.seed == 5);
    CHECK(cfg.net.tau_th_s == 0.5);
    CHECK(cfg.tau_explicit);
    CHECK(cfg.net.noise_power == 1e-12);
    CHECK(cfg.training.rounds == 10);
    CHECK(cfg.population.count == 5);
    CHECK(cfg.experiment.n_runs == 2);
    CHECK(cfg.experiment.strategies.size() == 2);
    CHECK(cfg.solver.max_outer_iters == 100);
  }
  SECTION("an empty document is a valid all-defaults config") {
    const auto cfg = parse_run_config(nlohmann::json::object(), RunMode::solve);
    CHECK(cfg.population.count == 100);
    CHECK(cfg.data.synthetic.train_samples == 60000);
    CHECK_FALSE(cfg.tau_explicit);
  }
  SECTION("cli seed and out dir win") {
    const auto cfg = parse_run_config(small_config(), RunMode::bench, 99, "elsewhere");
    CHECK(cfg.seed == 99);
    CHECK(cfg.out_dir == "elsewhere");
  }
  SECTION("unknown keys are rejected") {
    auto doc = small_config();
    doc["network"]["tau_th"] = 0.1;  // typo
    CHECK_THROWS_AS(parse_run_config(doc, RunMode::bench), ConfigError);
    doc = small_config();
    doc["nonsense"] = 1;
    CHECK_THROWS_AS(parse_run_config(doc, RunMode::bench), ConfigError);
  }
  SECTION("invalid values are rejected") {
    auto doc = small_config();
    doc["network"]["p_max"] = -1.0;
    CHECK_THROWS_AS(parse_run_config(doc, RunMode::bench), ConfigError);
    doc = small_config();
    doc["experiment"]["target_accuracies"] = {0.5, 1.2};
    CHECK_THROWS_AS(parse_run_config(doc, RunMode::bench), ConfigError);
    doc = small_config();
    doc["training"]["strategy"] = "psychic";
    CHECK_THROWS_AS(parse_run_config(doc, RunMode::bench), ConfigError);
  }
  SECTION("n_devices conflicting with devices.count is rejected") {
    auto doc = small_config();
    doc["experiment"]["n_devices"] = 7;
    CHECK_THROWS_AS(parse_run_config(doc, RunMode::bench), ConfigError);
    doc["devices"].erase("count");
    const auto cfg = parse_run_config(doc, RunMode::bench);
    CHECK(cfg.population.count == 7);
  }
  SECTION("device overrides are parsed and applied in runs") {
    auto doc = small_config();
    doc["devices"]["overrides"] = {{{"id", 2}, {"distance_m", 42.0}}};
    const auto cfg = parse_run_config(doc, RunMode::bench);
    REQUIRE(cfg.device_overrides.size() == 1);
    CHECK(cfg.device_overrides[0].id == 2);
    CHECK(cfg.device_overrides[0].distance_m == 42.0);
  }
  SECTION("the resolved snapshot round-trips") {
    const auto cfg = parse_run_config(small_config(), RunMode::bench);
    const auto snapshot = config_to_json(cfg);
    const auto back = parse_run_config(snapshot, RunMode::bench);
    CHECK(config_to_json(back) == snapshot);
  }
}

TEST_CASE("pipeline runs end to end") {
  SECTION("solve writes the plan and snapshot") {
    TempDir dir("fedpower_run_solve");
    auto cfg = parse_run_config(small_config(), RunMode::solve);
    cfg.out_dir = (dir.path / "out").string();
    REQUIRE(run(cfg) == exit_code::ok);
    CHECK(fs::exists(dir.path / "out" / "resolved_config.json"));
    const auto plan = plan_from_json(nlohmann::json::parse(slurp(dir.path / "out" / "plan.json")));
    CHECK(plan.device_count() == 5);
    CHECK(plan.rounds == 10);
  }

  SECTION("train writes a trace for the configured strategy") {
    TempDir dir("fedpower_run_train");
    auto cfg = parse_run_config(small_config(), RunMode::train);
    cfg.out_dir = (dir.path / "out").string();
    REQUIRE(run(cfg) == exit_code::ok);
    const auto trace = slurp(dir.path / "out" / "trace.csv");
    CHECK(trace.rfind("round,time_s,cum_time_s,energy_j,cum_energy_j,participants,accuracy,loss\n",
                      0) == 0);
  }

  SECTION("train covers every strategy") {
    TempDir dir("fedpower_run_strategies");
    for (const char* strategy : {"deterministic", "uniform", "equally_weighted"}) {
      auto doc = small_config();
      doc["training"]["strategy"] = strategy;
      auto cfg = parse_run_config(doc, RunMode::train);
      cfg.out_dir = (dir.path / strategy).string();
      REQUIRE(run(cfg) == exit_code::ok);
      CHECK(fs::exists(dir.path / strategy / "trace.csv"));
    }
  }

  SECTION("wrongly typed nested values surface as config errors") {
    auto doc = small_config();
    doc["devices"]["overrides"] = {{{"id", 0}, {"distance_m", "near"}}};
    CHECK_THROWS_AS(parse_run_config(doc, RunMode::solve), ConfigError);
    doc = small_config();
    doc["experiment"]["uniform_m"] = "three";
    CHECK_THROWS_AS(parse_run_config(doc, RunMode::solve), ConfigError);
  }

  SECTION("bench writes per-strategy traces and both summaries, byte-stable across reruns") {
    TempDir dir("fedpower_run_bench");
    auto cfg = parse_run_config(small_config(), RunMode::bench);
    cfg.out_dir = (dir.path / "a").string();
    REQUIRE(run(cfg) == exit_code::ok);
    for (const char* name :
         {"resolved_config.json", "plan.json", "trace_probabilistic.csv", "trace_uniform.csv",
          "summary.csv", "summary.json"}) {
      CHECK(fs::exists(dir.path / "a" / name));
    }
    auto again = cfg;
    again.out_dir = (dir.path / "b").string();
    REQUIRE(run(again) == exit_code::ok);
    for (const char* name : {"plan.json", "trace_probabilistic.csv", "trace_uniform.csv",
                             "summary.csv", "summary.json"}) {
      CHECK(slurp(dir.path / "a" / name) == slurp(dir.path / "b" / name));
    }
  }

  SECTION("the resolved snapshot reproduces every output byte") {
    TempDir dir("fedpower_run_snapshot");
    auto cfg = parse_run_config(small_config(), RunMode::bench);
    cfg.out_dir = (dir.path / "a").string();
    REQUIRE(run(cfg) == exit_code::ok);

    const auto snapshot = nlohmann::json::parse(slurp(dir.path / "a" / "resolved_config.json"));
    auto replay = parse_run_config(snapshot, RunMode::bench);
    replay.out_dir = (dir.path / "b").string();
    REQUIRE(run(replay) == exit_code::ok);
    for (const char* name : {"plan.json", "trace_probabilistic.csv", "trace_uniform.csv",
                             "summary.csv", "summary.json"}) {
      CHECK(slurp(dir.path / "a" / name) == slurp(dir.path / "b" / name));
    }
  }

  SECTION("missing idx files exit with the i/o code") {
    TempDir dir("fedpower_run_idx");
    auto doc = small_config();
    doc["data"] = {{"type", "idx"},
                   {"train_images", (dir.path / "absent.idx").string()},
                   {"train_labels", (dir.path / "absent.idx").string()},
                   {"test_images", (dir.path / "absent.idx").string()},
                   {"test_labels", (dir.path / "absent.idx").string()}};
    auto cfg = parse_run_config(doc, RunMode::solve);
    cfg.out_dir = (dir.path / "out").string();
    CHECK(run(cfg) == exit_code::io);
  }

  SECTION("a population smaller than one device per sample exits with the infeasible code") {
    TempDir dir("fedpower_run_infeasible");
    auto doc = small_config();
    doc["data"]["train_samples"] = 3;  // fewer samples than the 5 devices
    auto cfg = parse_run_config(doc, RunMode::solve);
    cfg.out_dir = (dir.path / "out").string();
    CHECK(run(cfg) == exit_code::infeasible);
  }
}

TEST_CASE("command line interface") {
  const char* cli = std::getenv("FEDPOWER_CLI");
  REQUIRE(cli != nullptr);
  TempDir dir("fedpower_cli_test");

  auto shell = [&](const std::string& args) {
    const std::string log = (dir.path / "log.txt").string();
    const int status = std::system((std::string(cli) + " " + args + " >" + log + " 2>&1").c_str());
    return std::pair<int, std::string>(WEXITSTATUS(status), slurp(log));
  };

  SECTION("missing config file exits nonzero and names the path") {
    const auto [code, output] = shell("solve --config " + (dir.path / "nope.json").string());
    CHECK(code == exit_code::config);
    CHECK(output.find((dir.path / "nope.json").string()) != std::string::npos);
  }
  SECTION("malformed json exits with the config code") {
    const auto bad = dir.path / "bad.json";
    std::ofstream(bad) << "{ not json";
    const auto [code, output] = shell("solve --config " + bad.string());
    CHECK(code == exit_code::config);
  }
  SECTION("a minimal config produces the artifacts and is left untouched") {
    const auto conf = dir.path / "conf.json";
    std::ofstream(conf) << small_config().dump();
    const auto before = slurp(conf);
    const auto [code, output] =
        shell("solve --config " + conf.string() + " --out " + (dir.path / "out").string());
    CHECK(code == exit_code::ok);
    CHECK(fs::exists(dir.path / "out" / "plan.json"));
    CHECK(slurp(conf) == before);
  }
  SECTION("seed override changes the plan") {
    const auto conf = dir.path / "conf.json";
    std::ofstream(conf) << small_config().dump();
    auto [c1, o1] = shell("solve --config " + conf.string() + " --out " +
                          (dir.path / "s1").string() + " --seed 1");
    auto [c2, o2] = shell("solve --config " + conf.string() + " --out " +
                          (dir.path / "s2").string() + " --seed 2");
    REQUIRE(c1 == 0);
    REQUIRE(c2 == 0);
    CHECK(slurp(dir.path / "s1" / "plan.json") != slurp(dir.path / "s2" / "plan.json"));
  }
  SECTION("no subcommand is a usage error") {
    const auto [code, output] = shell("");
    CHECK(code != 0);
  }
}
