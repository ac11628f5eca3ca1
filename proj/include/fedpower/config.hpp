#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedpower/baselines.hpp"
#include "fedpower/data.hpp"
#include "fedpower/population.hpp"
#include "fedpower/solver.hpp"
#include "fedpower/training.hpp"

#include "json.hpp"

namespace fedpower {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RunMode { solve, train, bench };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::solve: return "solve";
    case RunMode::train: return "train";
    case RunMode::bench: return "bench";
  }
  return "unknown";
}

inline RunMode run_mode_from_string(const std::string& s) {
  if (s == "solve") return RunMode::solve;
  if (s == "train") return RunMode::train;
  if (s == "bench") return RunMode::bench;
  throw ConfigError("unknown mode: " + s);
}

/// Per-device patch applied after population generation.
struct DeviceOverride {
  int id = 0;
  std::optional<double> distance_m;
  std::optional<double> bandwidth_hz;
  std::optional<double> cpu_freq_hz;
  std::optional<double> cycles_per_sample;
  std::optional<double> capacitance;
  std::optional<double> energy_budget_j;
};

struct DataConfig {
  enum class Kind { synthetic, idx };
  Kind kind = Kind::synthetic;
  SyntheticDataConfig synthetic;
  std::string train_images, train_labels, test_images, test_labels;
};

/// Experiment-level knobs that are not already covered by the other blocks.
struct ExperimentConfig {
  Scenario scenario = Scenario::mildly_biased;
  int n_runs = 10;
  std::vector<Strategy> strategies = {Strategy::probabilistic, Strategy::deterministic,
                                      Strategy::uniform, Strategy::equally_weighted};
  std::vector<double> target_accuracies = {0.6, 0.8};
  std::optional<std::size_t> uniform_m;
  double beta = 0.0;  ///< <= 0 means scenario default
};

struct RunConfig {
  RunMode mode = RunMode::bench;
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  NetworkParams net;
  bool tau_explicit = false;  ///< tau_th_s was given rather than defaulted
  SolverConfig solver;
  TrainingConfig training;
  PopulationConfig population;
  DataConfig data;
  ExperimentConfig experiment;
  std::vector<DeviceOverride> device_overrides;
};

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                       const std::string& block) {
  if (!j.is_object()) throw ConfigError("config block '" + block + "' must be an object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || key == k;
    if (!known) throw ConfigError("unknown key '" + key + "' in config block '" + block + "'");
  }
}

template <typename T>
inline void read_field(const nlohmann::json& j, const char* key, T& out, const std::string& block) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("bad value for '" + block + "." + key + "': " + e.what());
  }
}

}  // namespace detail

/// Parses a config document into a RunConfig. Every field has a default, so
/// the document only needs the overrides; unknown keys are rejected. The CLI
/// seed and output directory, when given, win over the document.
inline RunConfig parse_run_config(const nlohmann::json& root, RunMode mode,
                                  std::optional<std::uint64_t> cli_seed = std::nullopt,
                                  std::optional<std::string> cli_out = std::nullopt) try {
  using detail::check_keys;
  using detail::read_field;

  check_keys(root,
             {"mode", "seed", "out_dir", "network", "solver", "training", "devices", "data",
              "experiment"},
             "<root>");

  RunConfig cfg;
  cfg.mode = mode;
  read_field(root, "seed", cfg.seed, "<root>");
  read_field(root, "out_dir", cfg.out_dir, "<root>");
  if (cli_seed) cfg.seed = *cli_seed;

  if (root.contains("network")) {
    const auto& j = root.at("network");
    check_keys(j, {"noise_power", "message_bits", "p_max", "tau_th_s"}, "network");
    read_field(j, "noise_power", cfg.net.noise_power, "network");
    read_field(j, "message_bits", cfg.net.message_bits, "network");
    read_field(j, "p_max", cfg.net.p_max, "network");
    cfg.tau_explicit = j.contains("tau_th_s");
    read_field(j, "tau_th_s", cfg.net.tau_th_s, "network");
  }

  if (root.contains("solver")) {
    const auto& j = root.at("solver");
    check_keys(j,
               {"lambda0", "eps_dinkelbach", "eps_outer", "max_inner_iters", "max_outer_iters",
                "a_init", "strict_headroom_break"},
               "solver");
    read_field(j, "lambda0", cfg.solver.lambda0, "solver");
    read_field(j, "eps_dinkelbach", cfg.solver.eps_dinkelbach, "solver");
    read_field(j, "eps_outer", cfg.solver.eps_outer, "solver");
    read_field(j, "max_inner_iters", cfg.solver.max_inner_iters, "solver");
    read_field(j, "max_outer_iters", cfg.solver.max_outer_iters, "solver");
    read_field(j, "a_init", cfg.solver.a_init, "solver");
    read_field(j, "strict_headroom_break", cfg.solver.strict_headroom_break, "solver");
  }

  cfg.training.seed = derive_seed(cfg.seed, 3);
  if (root.contains("training")) {
    const auto& j = root.at("training");
    check_keys(j, {"eta", "rounds", "seed", "strategy", "alpha_mode", "hidden"}, "training");
    read_field(j, "eta", cfg.training.eta, "training");
    read_field(j, "rounds", cfg.training.rounds, "training");
    read_field(j, "seed", cfg.training.seed, "training");
    read_field(j, "hidden", cfg.training.hidden, "training");
    if (j.contains("strategy")) {
      try {
        cfg.training.strategy = strategy_from_string(j.at("strategy").get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    if (j.contains("alpha_mode")) {
      try {
        cfg.training.alpha_mode = alpha_mode_from_string(j.at("alpha_mode").get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
  }

  cfg.population.placement_seed = derive_seed(cfg.seed, 1);
  if (root.contains("devices")) {
    const auto& j = root.at("devices");
    check_keys(j,
               {"count", "area_side_m", "total_bandwidth_hz", "budget_min_j", "budget_max_j",
                "cpu_freq_hz", "cycles_per_sample", "capacitance", "default_dataset_size",
                "placement_seed", "overrides"},
               "devices");
    read_field(j, "count", cfg.population.count, "devices");
    read_field(j, "area_side_m", cfg.population.area_side_m, "devices");
    read_field(j, "total_bandwidth_hz", cfg.population.total_bandwidth_hz, "devices");
    read_field(j, "budget_min_j", cfg.population.budget_min_j, "devices");
    read_field(j, "budget_max_j", cfg.population.budget_max_j, "devices");
    read_field(j, "cpu_freq_hz", cfg.population.cpu_freq_hz, "devices");
    read_field(j, "cycles_per_sample", cfg.population.cycles_per_sample, "devices");
    read_field(j, "capacitance", cfg.population.capacitance, "devices");
    read_field(j, "default_dataset_size", cfg.population.default_dataset_size, "devices");
    read_field(j, "placement_seed", cfg.population.placement_seed, "devices");
    if (j.contains("overrides")) {
      if (!j.at("overrides").is_array()) throw ConfigError("devices.overrides must be an array");
      for (const auto& o : j.at("overrides")) {
        check_keys(o,
                   {"id", "distance_m", "bandwidth_hz", "cpu_freq_hz", "cycles_per_sample",
                    "capacitance", "energy_budget_j"},
                   "devices.overrides[]");
        DeviceOverride ov;
        if (!o.contains("id")) throw ConfigError("devices.overrides[] entries need an id");
        read_field(o, "id", ov.id, "devices.overrides[]");
        if (o.contains("distance_m")) ov.distance_m = o.at("distance_m").get<double>();
        if (o.contains("bandwidth_hz")) ov.bandwidth_hz = o.at("bandwidth_hz").get<double>();
        if (o.contains("cpu_freq_hz")) ov.cpu_freq_hz = o.at("cpu_freq_hz").get<double>();
        if (o.contains("cycles_per_sample")) {
          ov.cycles_per_sample = o.at("cycles_per_sample").get<double>();
        }
        if (o.contains("capacitance")) ov.capacitance = o.at("capacitance").get<double>();
        if (o.contains("energy_budget_j")) {
          ov.energy_budget_j = o.at("energy_budget_j").get<double>();
        }
        cfg.device_overrides.push_back(ov);
      }
    }
  }

  cfg.data.synthetic.seed = derive_seed(cfg.seed, 2);
  if (root.contains("data")) {
    const auto& j = root.at("data");
    check_keys(j,
               {"type", "train_samples", "test_samples", "dims", "classes", "center_scale",
                "noise", "seed", "train_images", "train_labels", "test_images", "test_labels"},
               "data");
    std::string type = "synthetic";
    read_field(j, "type", type, "data");
    if (type == "synthetic") {
      cfg.data.kind = DataConfig::Kind::synthetic;
    } else if (type == "idx") {
      cfg.data.kind = DataConfig::Kind::idx;
      read_field(j, "train_images", cfg.data.train_images, "data");
      read_field(j, "train_labels", cfg.data.train_labels, "data");
      read_field(j, "test_images", cfg.data.test_images, "data");
      read_field(j, "test_labels", cfg.data.test_labels, "data");
      if (cfg.data.train_images.empty() || cfg.data.train_labels.empty() ||
          cfg.data.test_images.empty() || cfg.data.test_labels.empty()) {
        throw ConfigError("data.type=idx requires all four idx file paths");
      }
    } else {
      throw ConfigError("unknown data.type: " + type);
    }
    read_field(j, "train_samples", cfg.data.synthetic.train_samples, "data");
    read_field(j, "test_samples", cfg.data.synthetic.test_samples, "data");
    read_field(j, "dims", cfg.data.synthetic.dims, "data");
    read_field(j, "classes", cfg.data.synthetic.classes, "data");
    read_field(j, "center_scale", cfg.data.synthetic.center_scale, "data");
    read_field(j, "noise", cfg.data.synthetic.noise, "data");
    read_field(j, "seed", cfg.data.synthetic.seed, "data");
  }

  if (root.contains("experiment")) {
    const auto& j = root.at("experiment");
    check_keys(j,
               {"scenario", "n_devices", "n_runs", "strategies", "target_accuracies",
                "uniform_m", "beta"},
               "experiment");
    if (j.contains("scenario")) {
      try {
        cfg.experiment.scenario = scenario_from_string(j.at("scenario").get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
    }
    if (j.contains("n_devices")) {
      const auto n = j.at("n_devices").get<std::size_t>();
      if (root.contains("devices") && root.at("devices").contains("count") &&
          n != cfg.population.count) {
        throw ConfigError("experiment.n_devices conflicts with devices.count");
      }
      cfg.population.count = n;
    }
    read_field(j, "n_runs", cfg.experiment.n_runs, "experiment");
    if (j.contains("strategies")) {
      cfg.experiment.strategies.clear();
      for (const auto& s : j.at("strategies")) {
        try {
          cfg.experiment.strategies.push_back(strategy_from_string(s.get<std::string>()));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(e.what());
        }
      }
      if (cfg.experiment.strategies.empty()) {
        throw ConfigError("experiment.strategies must not be empty");
      }
    }
    read_field(j, "target_accuracies", cfg.experiment.target_accuracies, "experiment");
    if (j.contains("uniform_m")) {
      cfg.experiment.uniform_m = j.at("uniform_m").get<std::size_t>();
    }
    read_field(j, "beta", cfg.experiment.beta, "experiment");
  }

  try {
    validate(cfg.net);
    validate(cfg.solver);
    validate(cfg.training);
    validate(cfg.population);
    validate_targets(cfg.experiment.target_accuracies);
    if (cfg.experiment.n_runs < 1) throw std::invalid_argument("experiment.n_runs must be >= 1");
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (cli_out) cfg.out_dir = *cli_out;
  return cfg;
} catch (const nlohmann::json::exception& e) {
  throw ConfigError(std::string("bad config value: ") + e.what());
}

/// Serializes a fully resolved config; parsing the result reproduces the run.
inline nlohmann::json config_to_json(const RunConfig& cfg) {
  nlohmann::json overrides = nlohmann::json::array();
  for (const auto& ov : cfg.device_overrides) {
    nlohmann::json o{{"id", ov.id}};
    if (ov.distance_m) o["distance_m"] = *ov.distance_m;
    if (ov.bandwidth_hz) o["bandwidth_hz"] = *ov.bandwidth_hz;
    if (ov.cpu_freq_hz) o["cpu_freq_hz"] = *ov.cpu_freq_hz;
    if (ov.cycles_per_sample) o["cycles_per_sample"] = *ov.cycles_per_sample;
    if (ov.capacitance) o["capacitance"] = *ov.capacitance;
    if (ov.energy_budget_j) o["energy_budget_j"] = *ov.energy_budget_j;
    overrides.push_back(o);
  }
  nlohmann::json data{{"type", cfg.data.kind == DataConfig::Kind::synthetic ? "synthetic" : "idx"},
                      {"train_samples", cfg.data.synthetic.train_samples},
                      {"test_samples", cfg.data.synthetic.test_samples},
                      {"dims", cfg.data.synthetic.dims},
                      {"classes", cfg.data.synthetic.classes},
                      {"center_scale", cfg.data.synthetic.center_scale},
                      {"noise", cfg.data.synthetic.noise},
                      {"seed", cfg.data.synthetic.seed}};
  if (cfg.data.kind == DataConfig::Kind::idx) {
    data["train_images"] = cfg.data.train_images;
    data["train_labels"] = cfg.data.train_labels;
    data["test_images"] = cfg.data.test_images;
    data["test_labels"] = cfg.data.test_labels;
  }
  nlohmann::json strategies = nlohmann::json::array();
  for (Strategy s : cfg.experiment.strategies) strategies.push_back(to_string(s));
  nlohmann::json experiment{{"scenario", to_string(cfg.experiment.scenario)},
                            {"n_devices", cfg.population.count},
                            {"n_runs", cfg.experiment.n_runs},
                            {"strategies", strategies},
                            {"target_accuracies", cfg.experiment.target_accuracies},
                            {"beta", cfg.experiment.beta}};
  if (cfg.experiment.uniform_m) experiment["uniform_m"] = *cfg.experiment.uniform_m;

  return nlohmann::json{
      {"mode", to_string(cfg.mode)},
      {"seed", cfg.seed},
      {"out_dir", cfg.out_dir},
      {"network",
       {{"noise_power", cfg.net.noise_power},
        {"message_bits", cfg.net.message_bits},
        {"p_max", cfg.net.p_max},
        {"tau_th_s", cfg.net.tau_th_s}}},
      {"solver",
       {{"lambda0", cfg.solver.lambda0},
        {"eps_dinkelbach", cfg.solver.eps_dinkelbach},
        {"eps_outer", cfg.solver.eps_outer},
        {"max_inner_iters", cfg.solver.max_inner_iters},
        {"max_outer_iters", cfg.solver.max_outer_iters},
        {"a_init", cfg.solver.a_init},
        {"strict_headroom_break", cfg.solver.strict_headroom_break}}},
      {"training",
       {{"eta", cfg.training.eta},
        {"rounds", cfg.training.rounds},
        {"seed", cfg.training.seed},
        {"strategy", to_string(cfg.training.strategy)},
        {"alpha_mode", to_string(cfg.training.alpha_mode)},
        {"hidden", cfg.training.hidden}}},
      {"devices",
       {{"count", cfg.population.count},
        {"area_side_m", cfg.population.area_side_m},
        {"total_bandwidth_hz", cfg.population.total_bandwidth_hz},
        {"budget_min_j", cfg.population.budget_min_j},
        {"budget_max_j", cfg.population.budget_max_j},
        {"cpu_freq_hz", cfg.population.cpu_freq_hz},
        {"cycles_per_sample", cfg.population.cycles_per_sample},
        {"capacitance", cfg.population.capacitance},
        {"default_dataset_size", cfg.population.default_dataset_size},
        {"placement_seed", cfg.population.placement_seed},
        {"overrides", overrides}}},
      {"data", data},
      {"experiment", experiment}};
}

}  // namespace fedpower
