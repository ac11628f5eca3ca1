#pragma once

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "fedpower/baselines.hpp"
#include "fedpower/config.hpp"

namespace fedpower {

/// Process exit codes used by run() and the CLI.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 2;      ///< unreadable or invalid configuration
inline constexpr int infeasible = 3;  ///< solver/partition/population failure
inline constexpr int io = 4;          ///< artifact or dataset I/O failure
}  // namespace exit_code

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open for writing: " + path.string());
  out << contents;
  if (!out) throw std::ios_base::failure("write failed: " + path.string());
}

inline void apply_overrides(std::vector<DeviceProfile>& devices,
                            const std::vector<DeviceOverride>& overrides) {
  for (const auto& ov : overrides) {
    if (ov.id < 0 || static_cast<std::size_t>(ov.id) >= devices.size()) {
      throw ConfigError("device override id out of range: " + std::to_string(ov.id));
    }
    DeviceProfile& dev = devices[static_cast<std::size_t>(ov.id)];
    if (ov.distance_m) dev.distance_m = *ov.distance_m;
    if (ov.bandwidth_hz) dev.bandwidth_hz = *ov.bandwidth_hz;
    if (ov.cpu_freq_hz) dev.cpu_freq_hz = *ov.cpu_freq_hz;
    if (ov.cycles_per_sample) dev.cycles_per_sample = *ov.cycles_per_sample;
    if (ov.capacitance) dev.capacitance = *ov.capacitance;
    if (ov.energy_budget_j) dev.energy_budget_j = *ov.energy_budget_j;
    validate(dev);
  }
}

/// Builds the ExperimentSpec that bench mode hands to compare_runs.
inline ExperimentSpec make_experiment_spec(const RunConfig& cfg) {
  ExperimentSpec spec;
  spec.scenario = cfg.experiment.scenario;
  spec.n_devices = cfg.population.count;
  spec.n_runs = cfg.experiment.n_runs;
  spec.strategies = cfg.experiment.strategies;
  spec.target_accuracies = cfg.experiment.target_accuracies;
  spec.placement_seed = cfg.population.placement_seed;
  spec.data_seed = cfg.data.synthetic.seed;
  spec.train_seed = cfg.training.seed;
  spec.population = cfg.population;
  spec.net = cfg.net;
  spec.solver = cfg.solver;
  spec.training = cfg.training;
  spec.data = cfg.data.synthetic;
  spec.uniform_m = cfg.experiment.uniform_m;
  spec.beta = cfg.experiment.beta;
  return spec;
}

}  // namespace detail

/// Executes the configured pipeline and writes every artifact into
/// cfg.out_dir. Returns a process exit code; diagnostics go to stderr.
inline int run(RunConfig cfg) {
  namespace fs = std::filesystem;
  try {
    // Bench mode follows the scenario's time threshold unless one was given.
    if (cfg.mode == RunMode::bench && !cfg.tau_explicit) {
      cfg.net.tau_th_s = scenario_tau(cfg.experiment.scenario);
    }

    fs::create_directories(cfg.out_dir);
    detail::write_file(fs::path(cfg.out_dir) / "resolved_config.json",
                       config_to_json(cfg).dump(2) + "\n");

    // Data.
    Dataset train, test;
    if (cfg.data.kind == DataConfig::Kind::synthetic) {
      std::tie(train, test) = make_synthetic(cfg.data.synthetic);
    } else {
      train = load_idx(cfg.data.train_images, cfg.data.train_labels);
      test = load_idx(cfg.data.test_images, cfg.data.test_labels);
    }

    // Partition and population.
    const double beta =
        cfg.experiment.beta > 0.0 ? cfg.experiment.beta : scenario_beta(cfg.experiment.scenario);
    const PartitionSpec parts = dirichlet_partition(
        train, cfg.population.count, beta, derive_seed(cfg.data.synthetic.seed, 0x9a57));
    std::vector<DeviceProfile> devices = generate_population(cfg.population);
    detail::apply_overrides(devices, cfg.device_overrides);
    std::vector<std::size_t> sizes(devices.size());
    for (std::size_t i = 0; i < devices.size(); ++i) sizes[i] = parts.assignments[i].size();
    apply_partition_sizes(devices, sizes, compute_weights(parts));

    // Plan.
    const SelectionPlan plan = alternating_solve(devices, cfg.net, cfg.solver, cfg.training.rounds);
    detail::write_file(fs::path(cfg.out_dir) / "plan.json", plan_to_json(plan).dump() + "\n");

    if (cfg.mode == RunMode::train) {
      SelectionPlan strategy_plan;
      switch (cfg.training.strategy) {
        case Strategy::probabilistic: strategy_plan = plan; break;
        case Strategy::deterministic: strategy_plan = deterministic_plan(plan); break;
        case Strategy::equally_weighted:
          strategy_plan = equally_weighted_plan(devices, cfg.net, cfg.solver, cfg.training.rounds);
          break;
        case Strategy::uniform: {
          double expected = 0.0;
          for (std::size_t i = 0; i < devices.size(); ++i) expected += plan.probabilities[i][0];
          const auto m = cfg.experiment.uniform_m.value_or(static_cast<std::size_t>(
              std::clamp(std::llround(expected), 1LL, static_cast<long long>(devices.size()))));
          strategy_plan = uniform_plan(devices, cfg.net, m, cfg.training.rounds,
                                       derive_seed(cfg.training.seed, 0x0f1u, 0));
          break;
        }
      }
      const TrainingTrace trace =
          run_training(devices, cfg.net, strategy_plan, train, test, parts, cfg.training);
      detail::write_file(fs::path(cfg.out_dir) / "trace.csv", trace_to_csv(trace));
    } else if (cfg.mode == RunMode::bench) {
      const ComparisonSummary summary = compare_runs(detail::make_experiment_spec(cfg));
      for (const auto& [strategy, mean] : summary.mean_traces) {
        detail::write_file(fs::path(cfg.out_dir) /
                               ("trace_" + std::string(to_string(strategy)) + ".csv"),
                           mean_trace_to_csv(mean));
      }
      detail::write_file(fs::path(cfg.out_dir) / "summary.csv", summary_to_csv(summary));
      detail::write_file(fs::path(cfg.out_dir) / "summary.json",
                         summary_to_json(summary).dump(2) + "\n");
    }
    return exit_code::ok;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_code::config;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return exit_code::infeasible;
  } catch (const PartitionError& e) {
    std::cerr << "partition error: " << e.what() << '\n';
    return exit_code::infeasible;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return exit_code::io;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return exit_code::io;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return exit_code::io;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code::infeasible;
  }
}

}  // namespace fedpower
