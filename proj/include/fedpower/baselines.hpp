#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fedpower/data.hpp"
#include "fedpower/partition.hpp"
#include "fedpower/population.hpp"
#include "fedpower/rng.hpp"
#include "fedpower/solver.hpp"
#include "fedpower/training.hpp"

#include "json.hpp"

namespace fedpower {

/// Uniform-selection baseline: every round, exactly m devices chosen uniformly
/// at random participate with probability one, all transmitting at full
/// power. The plan ignores the energy and time constraints on purpose.
inline SelectionPlan uniform_plan(const std::vector<DeviceProfile>& devices,
                                  const NetworkParams& net, std::size_t m,
                                  std::size_t rounds, std::uint64_t seed) {
  if (devices.empty()) throw EmptyPopulation("uniform_plan: empty device list");
  if (m < 1 || m > devices.size()) {
    throw std::invalid_argument("uniform_plan: m outside [1, device count]");
  }
  const std::size_t n = devices.size();
  SelectionPlan plan;
  plan.rounds = rounds;
  plan.converged = true;
  plan.device_ids.reserve(n);
  for (const auto& dev : devices) plan.device_ids.push_back(dev.id);
  plan.probabilities.assign(n, std::vector<double>(rounds, 0.0));
  plan.powers.assign(n, std::vector<double>(rounds, net.p_max));

  std::vector<std::size_t> pool(n);
  for (std::size_t k = 0; k < rounds; ++k) {
    auto eng = make_engine(seed, 0x0f1u, k);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    // Partial Fisher-Yates: the first m entries are a uniform m-subset.
    for (std::size_t j = 0; j < m; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, n - 1);
      std::swap(pool[j], pool[pick(eng)]);
      plan.probabilities[pool[j]][k] = 1.0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (double a : plan.probabilities[i]) plan.objective += a * devices[i].weight;
  }
  return plan;
}

/// Deterministic rounding of a probabilistic plan: probabilities at or above
/// one half become one, the rest zero. Powers are kept.
inline SelectionPlan deterministic_plan(const SelectionPlan& prob_plan) {
  SelectionPlan plan = prob_plan;
  for (auto& row : plan.probabilities) {
    for (double& a : row) a = a >= 0.5 ? 1.0 : 0.0;
  }
  return plan;
}

/// Equal-weight baseline: the joint solve with every weight set to 1/N,
/// rounded to a binary selection (the scheme it stands in for selects
/// integrally).
inline SelectionPlan equally_weighted_plan(const std::vector<DeviceProfile>& devices,
                                           const NetworkParams& net,
                                           const SolverConfig& cfg, std::size_t rounds) {
  std::vector<DeviceProfile> equal = devices;
  for (auto& dev : equal) dev.weight = 1.0 / static_cast<double>(devices.size());
  return deterministic_plan(alternating_solve(equal, net, cfg, rounds));
}

enum class Scenario { highly_biased, mildly_biased };

inline const char* to_string(Scenario s) {
  return s == Scenario::highly_biased ? "highly_biased" : "mildly_biased";
}

inline Scenario scenario_from_string(const std::string& s) {
  if (s == "highly_biased") return Scenario::highly_biased;
  if (s == "mildly_biased") return Scenario::mildly_biased;
  throw std::invalid_argument("unknown scenario: " + s);
}

/// Dirichlet concentration implied by a scenario.
inline double scenario_beta(Scenario s) {
  return s == Scenario::highly_biased ? 0.1 : 0.3;
}

/// Round time threshold implied by a scenario, seconds.
inline double scenario_tau(Scenario s) {
  return s == Scenario::highly_biased ? 0.08 : 0.5;
}

/// Full description of one comparison experiment.
struct ExperimentSpec {
  Scenario scenario = Scenario::mildly_biased;
  std::size_t n_devices = 20;
  int n_runs = 10;
  std::vector<Strategy> strategies = {Strategy::probabilistic, Strategy::deterministic,
                                      Strategy::uniform, Strategy::equally_weighted};
  std::vector<double> target_accuracies = {0.6, 0.8};
  std::uint64_t placement_seed = 1;
  std::uint64_t data_seed = 7;
  std::uint64_t train_seed = 11;

  PopulationConfig population;      ///< count is overridden by n_devices
  NetworkParams net;                ///< tau_th_s <= 0 means scenario default
  SolverConfig solver;
  TrainingConfig training;
  SyntheticDataConfig data;
  std::optional<std::size_t> uniform_m;  ///< default: round of the solved expected count
  double beta = 0.0;                     ///< <= 0 means scenario default
};

inline void validate_targets(const std::vector<double>& targets) {
  for (double t : targets) {
    if (!(t > 0.0 && t < 1.0)) {
      throw std::invalid_argument("ExperimentSpec: target accuracies must lie in (0,1)");
    }
  }
}

inline void validate(const ExperimentSpec& spec) {
  if (spec.n_runs < 1) throw std::invalid_argument("ExperimentSpec: n_runs must be >= 1");
  if (spec.n_devices < 1) throw std::invalid_argument("ExperimentSpec: n_devices must be >= 1");
  validate_targets(spec.target_accuracies);
}

/// Per-round curves averaged across the runs of one strategy. Index 0 is the
/// initial state.
struct MeanTrace {
  std::vector<double> cum_time_s;    ///< length rounds+1, starts at 0
  std::vector<double> cum_energy_j;  ///< length rounds+1, starts at 0
  std::vector<double> accuracy;      ///< length rounds+1
  std::vector<double> loss;          ///< length rounds+1
  std::vector<double> participants;  ///< mean participant count, length rounds+1 (0 first)

  double final_accuracy() const { return accuracy.empty() ? 0.0 : accuracy.back(); }
};

inline MeanTrace mean_trace(const std::vector<TrainingTrace>& traces) {
  if (traces.empty()) throw std::invalid_argument("mean_trace: no traces");
  const std::size_t rounds = traces.front().rounds.size();
  for (const auto& t : traces) {
    if (t.rounds.size() != rounds) throw std::invalid_argument("mean_trace: ragged traces");
  }
  MeanTrace mean;
  mean.cum_time_s.assign(rounds + 1, 0.0);
  mean.cum_energy_j.assign(rounds + 1, 0.0);
  mean.accuracy.assign(rounds + 1, 0.0);
  mean.loss.assign(rounds + 1, 0.0);
  mean.participants.assign(rounds + 1, 0.0);
  const double inv = 1.0 / static_cast<double>(traces.size());
  for (const auto& t : traces) {
    mean.accuracy[0] += inv * t.initial_accuracy;
    mean.loss[0] += inv * t.initial_loss;
    for (std::size_t k = 0; k < rounds; ++k) {
      mean.cum_time_s[k + 1] += inv * t.rounds[k].cum_time_s;
      mean.cum_energy_j[k + 1] += inv * t.rounds[k].cum_energy_j;
      mean.accuracy[k + 1] += inv * t.rounds[k].accuracy;
      mean.loss[k + 1] += inv * t.rounds[k].loss;
      mean.participants[k + 1] += inv * static_cast<double>(t.rounds[k].participants.size());
    }
  }
  return mean;
}

/// Time and energy at which a strategy's mean accuracy first meets a target.
struct TargetResult {
  Strategy strategy = Strategy::probabilistic;
  double target = 0.0;
  bool reached = false;
  double time_s = 0.0;    ///< meaningful only when reached
  double energy_j = 0.0;  ///< meaningful only when reached
};

/// First crossing of the mean accuracy curve over a target.
inline TargetResult first_crossing(Strategy strategy, const MeanTrace& mean, double target) {
  TargetResult res;
  res.strategy = strategy;
  res.target = target;
  for (std::size_t k = 0; k < mean.accuracy.size(); ++k) {
    if (mean.accuracy[k] >= target) {
      res.reached = true;
      res.time_s = mean.cum_time_s[k];
      res.energy_j = mean.cum_energy_j[k];
      break;
    }
  }
  return res;
}

struct ComparisonSummary {
  Scenario scenario = Scenario::mildly_biased;
  std::vector<double> targets;
  std::vector<TargetResult> results;  ///< strategy-major, target-minor
  std::map<Strategy, MeanTrace> mean_traces;
  std::map<Strategy, SelectionPlan> plans;
};

/// Runs the full comparison: generates the population and data, solves the
/// probabilistic plan, derives the baseline plans, trains n_runs seeded
/// replicates per strategy, and summarizes time/energy to each target on the
/// run-averaged curves. Deterministic for a fixed spec.
inline ComparisonSummary compare_runs(const ExperimentSpec& spec) {
  validate(spec);

  SyntheticDataConfig data_cfg = spec.data;
  data_cfg.seed = spec.data_seed;
  const auto [train, test] = make_synthetic(data_cfg);

  const double beta = spec.beta > 0.0 ? spec.beta : scenario_beta(spec.scenario);
  const PartitionSpec parts =
      dirichlet_partition(train, spec.n_devices, beta, derive_seed(spec.data_seed, 0x9a57));

  PopulationConfig pop_cfg = spec.population;
  pop_cfg.count = spec.n_devices;
  pop_cfg.placement_seed = spec.placement_seed;
  std::vector<DeviceProfile> devices = generate_population(pop_cfg);
  std::vector<std::size_t> sizes(spec.n_devices);
  for (std::size_t i = 0; i < spec.n_devices; ++i) sizes[i] = parts.assignments[i].size();
  apply_partition_sizes(devices, sizes, compute_weights(parts));

  NetworkParams net = spec.net;
  if (!(net.tau_th_s > 0.0)) net.tau_th_s = scenario_tau(spec.scenario);
  validate(net);

  const std::size_t rounds = spec.training.rounds;
  ComparisonSummary summary;
  summary.scenario = spec.scenario;
  summary.targets = spec.target_accuracies;

  const SelectionPlan prob_plan = alternating_solve(devices, net, spec.solver, rounds);
  double expected_participants = 0.0;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    expected_participants += prob_plan.probabilities[i][0];
  }
  const std::size_t m =
      spec.uniform_m.value_or(static_cast<std::size_t>(std::clamp(
          std::llround(expected_participants), 1LL, static_cast<long long>(devices.size()))));

  for (Strategy strategy : spec.strategies) {
    std::vector<TrainingTrace> traces;
    traces.reserve(static_cast<std::size_t>(spec.n_runs));
    for (int run = 0; run < spec.n_runs; ++run) {
      SelectionPlan plan;
      switch (strategy) {
        case Strategy::probabilistic: plan = prob_plan; break;
        case Strategy::deterministic: plan = deterministic_plan(prob_plan); break;
        case Strategy::equally_weighted:
          plan = equally_weighted_plan(devices, net, spec.solver, rounds);
          break;
        case Strategy::uniform:
          plan = uniform_plan(devices, net, m, rounds,
                              derive_seed(spec.train_seed, 0x0f1u, static_cast<std::uint64_t>(run)));
          break;
      }
      TrainingConfig run_cfg = spec.training;
      run_cfg.strategy = strategy;
      run_cfg.seed = derive_seed(spec.train_seed, static_cast<std::uint64_t>(strategy),
                                 static_cast<std::uint64_t>(run));
      traces.push_back(run_training(devices, net, plan, train, test, parts, run_cfg));
      if (run == 0) summary.plans.emplace(strategy, std::move(plan));
    }
    const MeanTrace mean = mean_trace(traces);
    for (double target : spec.target_accuracies) {
      summary.results.push_back(first_crossing(strategy, mean, target));
    }
    summary.mean_traces.emplace(strategy, mean);
  }
  return summary;
}

/// CSV rendering: one row per (strategy, target); empty time/energy cells
/// when the target was never reached.
inline std::string summary_to_csv(const ComparisonSummary& summary) {
  std::string out = "strategy,target,time_s,energy_j,reached\n";
  for (const auto& res : summary.results) {
    out += to_string(res.strategy);
    out += ',';
    detail::append_number(out, res.target);
    out += ',';
    if (res.reached) detail::append_number(out, res.time_s);
    out += ',';
    if (res.reached) detail::append_number(out, res.energy_j);
    out += ',';
    out += res.reached ? "true" : "false";
    out += '\n';
  }
  return out;
}

/// JSON rendering shaped like the time/energy-to-accuracy tables: strategies
/// as rows, targets as columns, null for never-reached entries.
inline nlohmann::json summary_to_json(const ComparisonSummary& summary) {
  nlohmann::json strategies = nlohmann::json::object();
  for (const auto& res : summary.results) {
    auto& row = strategies[to_string(res.strategy)];
    if (row.is_null()) {
      row = nlohmann::json{{"time_s", nlohmann::json::array()},
                           {"energy_j", nlohmann::json::array()},
                           {"reached", nlohmann::json::array()}};
    }
    row["time_s"].push_back(res.reached ? nlohmann::json(res.time_s) : nlohmann::json());
    row["energy_j"].push_back(res.reached ? nlohmann::json(res.energy_j) : nlohmann::json());
    row["reached"].push_back(res.reached);
  }
  return nlohmann::json{{"scenario", to_string(summary.scenario)},
                        {"targets", summary.targets},
                        {"strategies", strategies}};
}

/// CSV rendering of a run-averaged trace, same columns as a single-run trace.
inline std::string mean_trace_to_csv(const MeanTrace& mean) {
  std::string out = "round,time_s,cum_time_s,energy_j,cum_energy_j,participants,accuracy,loss\n";
  for (std::size_t k = 0; k < mean.accuracy.size(); ++k) {
    out += std::to_string(k);
    out += ',';
    detail::append_number(out, k == 0 ? 0.0 : mean.cum_time_s[k] - mean.cum_time_s[k - 1]);
    out += ',';
    detail::append_number(out, mean.cum_time_s[k]);
    out += ',';
    detail::append_number(out, k == 0 ? 0.0 : mean.cum_energy_j[k] - mean.cum_energy_j[k - 1]);
    out += ',';
    detail::append_number(out, mean.cum_energy_j[k]);
    out += ',';
    detail::append_number(out, mean.participants[k]);
    out += ',';
    detail::append_number(out, mean.accuracy[k]);
    out += ',';
    detail::append_number(out, mean.loss[k]);
    out += '\n';
  }
  return out;
}

}  // namespace fedpower
