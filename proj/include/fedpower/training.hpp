#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fedpower/model.hpp"
#include "fedpower/partition.hpp"
#include "fedpower/rng.hpp"
#include "fedpower/solver.hpp"
#include "fedpower/wireless.hpp"

namespace fedpower {

enum class Strategy { probabilistic, deterministic, uniform, equally_weighted };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::probabilistic: return "probabilistic";
    case Strategy::deterministic: return "deterministic";
    case Strategy::uniform: return "uniform";
    case Strategy::equally_weighted: return "equally_weighted";
  }
  return "unknown";
}

inline Strategy strategy_from_string(const std::string& s) {
  if (s == "probabilistic") return Strategy::probabilistic;
  if (s == "deterministic") return Strategy::deterministic;
  if (s == "uniform") return Strategy::uniform;
  if (s == "equally_weighted") return Strategy::equally_weighted;
  throw std::invalid_argument("unknown strategy: " + s);
}

/// Aggregation coefficient choice: dataset-proportional weights or the
/// reciprocal of the participant count.
enum class AlphaMode { dataset_weight, participant_mean };

inline const char* to_string(AlphaMode m) {
  return m == AlphaMode::dataset_weight ? "dataset_weight" : "participant_mean";
}

inline AlphaMode alpha_mode_from_string(const std::string& s) {
  if (s == "dataset_weight") return AlphaMode::dataset_weight;
  if (s == "participant_mean") return AlphaMode::participant_mean;
  throw std::invalid_argument("unknown alpha_mode: " + s);
}

struct TrainingConfig {
  double eta = 0.1;            ///< server learning rate
  std::size_t rounds = 100;    ///< communication rounds
  std::uint64_t seed = 1;
  Strategy strategy = Strategy::probabilistic;
  AlphaMode alpha_mode = AlphaMode::dataset_weight;
  std::size_t hidden = 0;      ///< hidden width; 0 = logistic regression
};

inline void validate(const TrainingConfig& cfg) {
  if (!(cfg.eta > 0.0)) throw std::invalid_argument("TrainingConfig: eta must be positive");
  if (cfg.rounds < 1) throw std::invalid_argument("TrainingConfig: rounds must be >= 1");
}

struct RoundRecord {
  std::size_t round = 0;                ///< plan column, 0-based
  std::vector<int> participants;        ///< device indices, ascending
  double round_time_s = 0.0;            ///< straggler transmission time
  std::vector<double> device_energy_j;  ///< per device, zero for non-participants
  double cum_time_s = 0.0;
  double cum_energy_j = 0.0;
  double accuracy = 0.0;
  double loss = 0.0;
};

struct TrainingTrace {
  double initial_accuracy = 0.0;
  double initial_loss = 0.0;
  std::vector<RoundRecord> rounds;
};

/// Independent Bernoulli participation draw per device. Each (device, round)
/// pair has its own RNG stream derived from the seed, so the outcome is
/// independent of evaluation order.
inline std::vector<int> sample_participants(const SelectionPlan& plan, std::size_t k,
                                            std::uint64_t seed) {
  if (k >= plan.rounds) throw std::invalid_argument("sample_participants: round out of range");
  std::vector<int> out;
  for (std::size_t i = 0; i < plan.device_count(); ++i) {
    const double a = plan.probabilities[i][k];
    if (a <= 0.0) continue;
    auto eng = make_engine(seed, i, k);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (a >= 1.0 || u(eng) < a) out.push_back(static_cast<int>(i));
  }
  return out;
}

/// One gradient step: theta - eta * sum_i alpha_i * g_i. No participant-count
/// normalization beyond what the alphas carry.
inline std::vector<double> aggregate_update(std::vector<double> theta,
                                            std::span<const std::vector<double>> gradients,
                                            std::span<const double> alphas, double eta) {
  if (gradients.size() != alphas.size()) {
    throw std::invalid_argument("aggregate_update: gradient/alpha count mismatch");
  }
  for (std::size_t g = 0; g < gradients.size(); ++g) {
    if (gradients[g].size() != theta.size()) {
      throw std::invalid_argument("aggregate_update: gradient shape mismatch");
    }
    const double scale = eta * alphas[g];
    for (std::size_t j = 0; j < theta.size(); ++j) theta[j] -= scale * gradients[g][j];
  }
  return theta;
}

/// Fixed context for one simulated training run.
struct SimulationContext {
  const std::vector<DeviceProfile>* devices = nullptr;
  NetworkParams net;
  const Dataset* train = nullptr;
  const Dataset* test = nullptr;
  const PartitionSpec* parts = nullptr;
  TrainingConfig cfg;
  std::vector<double> weights;  ///< dataset-proportional device weights
};

struct SimulationState {
  ModelState model;
  std::size_t round = 0;
  double cum_time_s = 0.0;
  double cum_energy_j = 0.0;
};

/// Runs one communication round: samples the participant set, aggregates the
/// participants' full-batch gradients, then charges time and energy. The
/// round clock is the slowest participant's transmission time; computation
/// time is not clocked but computation energy is charged.
inline RoundRecord simulate_round(SimulationState& state, const SimulationContext& ctx,
                                  const SelectionPlan& plan) {
  const auto& devices = *ctx.devices;
  const std::size_t k = state.round;
  RoundRecord rec;
  rec.round = k;
  rec.participants = sample_participants(plan, k, ctx.cfg.seed);
  rec.device_energy_j.assign(devices.size(), 0.0);

  std::vector<std::vector<double>> gradients;
  gradients.reserve(rec.participants.size());
  for (int i : rec.participants) {
    const auto& idx = ctx.parts->assignments[static_cast<std::size_t>(i)];
    gradients.push_back(local_gradient(state.model, *ctx.train, idx));

    const double p = plan.powers[static_cast<std::size_t>(i)][k];
    const double t = transmission_time(devices[static_cast<std::size_t>(i)], ctx.net, p);
    rec.round_time_s = std::max(rec.round_time_s, t);
    rec.device_energy_j[static_cast<std::size_t>(i)] =
        computation_energy(devices[static_cast<std::size_t>(i)]) + p * t;
  }

  std::vector<double> alphas(rec.participants.size());
  for (std::size_t g = 0; g < rec.participants.size(); ++g) {
    alphas[g] = ctx.cfg.alpha_mode == AlphaMode::dataset_weight
                    ? ctx.weights[static_cast<std::size_t>(rec.participants[g])]
                    : 1.0 / static_cast<double>(rec.participants.size());
  }
  state.model.theta =
      aggregate_update(std::move(state.model.theta), gradients, alphas, ctx.cfg.eta);

  double round_energy_total = 0.0;
  for (double e : rec.device_energy_j) round_energy_total += e;
  state.cum_time_s += rec.round_time_s;
  state.cum_energy_j += round_energy_total;
  state.round += 1;

  rec.cum_time_s = state.cum_time_s;
  rec.cum_energy_j = state.cum_energy_j;
  const auto [acc, loss] = evaluate(state.model, *ctx.test);
  rec.accuracy = acc;
  rec.loss = loss;
  return rec;
}

/// Full simulated training: cfg.rounds sequential rounds under the plan.
/// Deterministic for a fixed config. Zero rounds yields a trace holding only
/// the initial evaluation.
inline TrainingTrace run_training(const std::vector<DeviceProfile>& devices,
                                  const NetworkParams& net, const SelectionPlan& plan,
                                  const Dataset& train, const Dataset& test,
                                  const PartitionSpec& parts, const TrainingConfig& cfg) {
  if (!(cfg.eta > 0.0)) throw std::invalid_argument("run_training: eta must be positive");
  if (plan.device_count() != devices.size() || plan.rounds < cfg.rounds) {
    throw std::invalid_argument("run_training: plan dimensions do not cover devices x rounds");
  }
  if (parts.assignments.size() != devices.size()) {
    throw std::invalid_argument("run_training: partition/device count mismatch");
  }

  SimulationContext ctx{&devices, net, &train, &test, &parts, cfg, compute_weights(parts)};
  SimulationState state{
      init_model({train.dims, cfg.hidden, train.classes}, derive_seed(cfg.seed, 0x90de1))};

  TrainingTrace trace;
  const auto [acc0, loss0] = evaluate(state.model, test);
  trace.initial_accuracy = acc0;
  trace.initial_loss = loss0;
  trace.rounds.reserve(cfg.rounds);
  for (std::size_t k = 0; k < cfg.rounds; ++k) {
    trace.rounds.push_back(simulate_round(state, ctx, plan));
  }
  return trace;
}

namespace detail {

inline void append_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  out += buf;
}

}  // namespace detail

/// CSV rendering of a trace. Row 0 is the initial state (zero time/energy);
/// trained rounds follow as rows 1..K.
inline std::string trace_to_csv(const TrainingTrace& trace) {
  std::string out = "round,time_s,cum_time_s,energy_j,cum_energy_j,participants,accuracy,loss\n";
  out += "0,0,0,0,0,0,";
  detail::append_number(out, trace.initial_accuracy);
  out += ',';
  detail::append_number(out, trace.initial_loss);
  out += '\n';
  for (const auto& rec : trace.rounds) {
    double round_energy_total = 0.0;
    for (double e : rec.device_energy_j) round_energy_total += e;
    out += std::to_string(rec.round + 1);
    out += ',';
    detail::append_number(out, rec.round_time_s);
    out += ',';
    detail::append_number(out, rec.cum_time_s);
    out += ',';
    detail::append_number(out, round_energy_total);
    out += ',';
    detail::append_number(out, rec.cum_energy_j);
    out += ',';
    out += std::to_string(rec.participants.size());
    out += ',';
    detail::append_number(out, rec.accuracy);
    out += ',';
    detail::append_number(out, rec.loss);
    out += '\n';
  }
  return out;
}

}  // namespace fedpower
