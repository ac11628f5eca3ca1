#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fedpower/wireless.hpp"

#include "json.hpp"

namespace fedpower {

struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The time threshold cannot be met at any power within the cap.
struct InfeasiblePower : SolverError {
  using SolverError::SolverError;
};

struct EmptyPopulation : SolverError {
  using SolverError::SolverError;
};

struct SolverConfig {
  double lambda0 = 1.0;          ///< initial ratio guess for the power solver
  double eps_dinkelbach = 1e-9;  ///< stop when the ratio moves less than this, joules
  double eps_outer = 1e-6;       ///< stop when the objective moves less than this
  int max_inner_iters = 100;
  int max_outer_iters = 100;
  double a_init = 1.0;           ///< cap on the initial selection probabilities
  bool strict_headroom_break = false;  ///< abort the whole solve on a headroom failure
};

inline void validate(const SolverConfig& cfg) {
  if (!(cfg.lambda0 > 0.0) || !(cfg.eps_dinkelbach > 0.0) || !(cfg.eps_outer > 0.0) ||
      cfg.max_inner_iters < 1 || cfg.max_outer_iters < 1) {
    throw std::invalid_argument("SolverConfig: tolerances and iteration caps must be positive");
  }
  if (!(cfg.a_init > 0.0 && cfg.a_init <= 1.0)) {
    throw std::invalid_argument("SolverConfig: a_init outside (0,1]");
  }
}

/// Per-device, per-round selection probabilities and transmit powers.
struct SelectionPlan {
  std::vector<int> device_ids;
  std::size_t rounds = 0;
  std::vector<std::vector<double>> probabilities;  ///< [device][round], in [0,1]
  std::vector<std::vector<double>> powers;         ///< [device][round], in [0,p_max]
  bool converged = false;
  int iterations_used = 0;
  double objective = 0.0;
  std::vector<double> objective_history;  ///< objective after each outer iteration

  std::size_t device_count() const { return probabilities.size(); }
};

/// Remaining per-round energy budget after the expected computation energy.
/// May be negative when the expected computation alone exceeds the budget.
inline double energy_headroom(const DeviceProfile& dev, double probability) {
  if (!(probability >= 0.0 && probability <= 1.0)) {
    throw std::domain_error("energy_headroom: probability outside [0,1]");
  }
  return dev.energy_budget_j - probability * computation_energy(dev);
}

/// Result of the per-device power solve.
struct PowerSolution {
  double power_w = 0.0;
  double ratio_j = 0.0;  ///< expected upload energy a * P * T(P) at power_w
  bool converged = false;
  int iterations = 0;
  std::vector<double> ratio_history;  ///< computed ratio after each inner iteration
};

/// Minimizes the expected upload energy a*P*T(P) over [P_min(a), p_max] by
/// Dinkelbach's method on the fractional objective, a being the selection
/// probability. The parametric subproblem is convex, so its unconstrained
/// stationary point projected onto the box is the exact inner minimizer; the
/// ratio parameter is updated at the projected point. The computed ratio
/// sequence is non-increasing after the first update; that is checked on
/// every solve.
///
/// Throws InfeasiblePower when P_min exceeds p_max. When the iteration cap
/// is reached first, returns the best point found with converged=false.
inline PowerSolution dinkelbach_power(const DeviceProfile& dev, const NetworkParams& net,
                                      double probability, const SolverConfig& cfg) {
  if (!(probability > 0.0 && probability <= 1.0)) {
    throw std::domain_error("dinkelbach_power: probability outside (0,1]");
  }
  double p_min = min_feasible_power(dev, net, probability);
  if (p_min > net.p_max * (1.0 + 1e-12)) {
    throw InfeasiblePower("dinkelbach_power: time threshold unreachable at probability " +
                          std::to_string(probability) + " (P_min=" + std::to_string(p_min) +
                          " W)");
  }
  p_min = std::min(p_min, net.p_max);

  const double path_gain = dev.distance_m * dev.distance_m * net.noise_power;
  const auto ratio_at = [&](double p) {
    return probability * p * transmission_time(dev, net, p);
  };

  PowerSolution sol;
  double lambda = cfg.lambda0;
  for (int j = 1; j <= cfg.max_inner_iters; ++j) {
    // Stationary point of the weighted bits term minus lambda times the rate.
    const double p_unconstrained =
        lambda * dev.bandwidth_hz / (probability * net.message_bits * std::numbers::ln2) -
        path_gain;
    const double p = std::clamp(p_unconstrained, p_min, net.p_max);
    const double next = ratio_at(p);

    sol.power_w = p;
    sol.ratio_j = next;
    sol.iterations = j;
    sol.ratio_history.push_back(next);
    if (sol.ratio_history.size() >= 2) {
      const double prev = sol.ratio_history[sol.ratio_history.size() - 2];
      if (next > prev * (1.0 + 1e-9) + 1e-18) {
        throw std::logic_error("dinkelbach_power: ratio sequence increased");
      }
    }
    if (std::abs(next - lambda) < cfg.eps_dinkelbach) {
      sol.converged = true;
      lambda = next;
      break;
    }
    lambda = next;
  }
  return sol;
}

/// Largest feasible selection probability for a device at a fixed transmit
/// power: min of 1, the time-threshold cap and the energy-budget cap.
inline double optimal_probability(const DeviceProfile& dev, const NetworkParams& net,
                                  double power_w) {
  if (!(power_w > 0.0 && power_w <= net.p_max)) {
    throw std::domain_error("optimal_probability: power outside (0, p_max]");
  }
  const double t = transmission_time(dev, net, power_w);
  const double draw_j = power_w * t + computation_energy(dev);
  const double a = std::min({1.0, net.tau_th_s / t, dev.energy_budget_j / draw_j});
  return std::clamp(a, 0.0, 1.0);
}

/// Largest selection probability (up to the given resolution) whose minimum
/// feasible power stays at or below the power cap. The predicate is monotone
/// in a, so plain bisection applies.
inline double largest_time_feasible_probability(const DeviceProfile& dev,
                                                const NetworkParams& net, double a_upper,
                                                double resolution = 1e-6) {
  const auto feasible = [&](double candidate) {
    return min_feasible_power(dev, net, candidate) <= net.p_max;
  };
  if (feasible(a_upper)) return a_upper;
  double lo = 0.0;
  double hi = a_upper;
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  return lo;
}

namespace detail {

// Expected per-round objective contribution of the population.
inline double weighted_sum(const std::vector<DeviceProfile>& devices,
                           const std::vector<double>& probs) {
  double s = 0.0;
  for (std::size_t i = 0; i < devices.size(); ++i) s += probs[i] * devices[i].weight;
  return s;
}

}  // namespace detail

/// Alternating solve from an explicit starting point. Each outer iteration
/// runs the per-device power solve at fixed probabilities, then, where the
/// achieved expected upload energy fits inside the energy headroom, updates
/// the probability by its closed form at the new power. A device whose
/// headroom test fails keeps its last feasible pair and is frozen for the
/// remaining iterations (with strict_headroom_break the whole loop stops
/// instead). A device whose time threshold is unreachable at its current
/// probability has the probability bisected down to the largest feasible
/// value rather than failing the solve.
inline SelectionPlan alternating_solve_from(const std::vector<DeviceProfile>& devices,
                                            const NetworkParams& net,
                                            const SolverConfig& cfg, std::size_t rounds,
                                            std::vector<double> probs,
                                            std::vector<double> powers) {
  if (devices.empty()) throw EmptyPopulation("alternating_solve: empty device list");
  validate(cfg);
  validate(net);
  const std::size_t n = devices.size();
  if (probs.size() != n || powers.size() != n) {
    throw std::invalid_argument("alternating_solve_from: start point dimension mismatch");
  }

  std::vector<bool> frozen(n, false);
  std::vector<bool> has_feasible(n, false);
  std::vector<double> last_probs(n, 0.0), last_powers(n, 0.0), ratio(n, 0.0);

  const double k = static_cast<double>(rounds);
  std::vector<double> history;
  double objective = k * detail::weighted_sum(devices, probs);
  bool converged = false;
  int iterations = 0;
  bool broke = false;

  while (iterations < cfg.max_outer_iters && !broke) {
    ++iterations;

    // Power step at fixed probabilities.
    for (std::size_t i = 0; i < n; ++i) {
      if (frozen[i] || probs[i] <= 0.0) continue;
      if (min_feasible_power(devices[i], net, probs[i]) > net.p_max * (1.0 + 1e-12)) {
        probs[i] = largest_time_feasible_probability(devices[i], net, probs[i]);
        if (probs[i] <= 0.0) {
          probs[i] = 0.0;
          powers[i] = net.p_max;
          ratio[i] = 0.0;
          continue;
        }
      }
      const PowerSolution sol = dinkelbach_power(devices[i], net, probs[i], cfg);
      powers[i] = sol.power_w;
      ratio[i] = sol.ratio_j;
    }

    const auto headroom_ok = [&](std::size_t i) {
      return ratio[i] <= energy_headroom(devices[i], probs[i]) * (1.0 + 1e-9) + 1e-18;
    };

    // The literal break tests the whole population before touching any
    // probability.
    if (cfg.strict_headroom_break) {
      for (std::size_t i = 0; i < n && !broke; ++i) {
        broke = !frozen[i] && probs[i] > 0.0 && !headroom_ok(i);
      }
      if (broke) break;
    }

    // Probability step where the headroom holds; freeze elsewhere.
    for (std::size_t i = 0; i < n; ++i) {
      if (frozen[i] || probs[i] <= 0.0) continue;
      if (headroom_ok(i)) {
        probs[i] = optimal_probability(devices[i], net, powers[i]);
        last_probs[i] = probs[i];
        last_powers[i] = powers[i];
        has_feasible[i] = true;
      } else if (has_feasible[i]) {
        probs[i] = last_probs[i];
        powers[i] = last_powers[i];
        frozen[i] = true;
      } else {
        // No feasible history yet (externally supplied start): clamp down to
        // the closed form, which is feasible at the current power.
        probs[i] = optimal_probability(devices[i], net, powers[i]);
        last_probs[i] = probs[i];
        last_powers[i] = powers[i];
        has_feasible[i] = true;
      }
    }

    const double next_objective = k * detail::weighted_sum(devices, probs);
    history.push_back(next_objective);
    if (std::abs(next_objective - objective) < cfg.eps_outer) {
      objective = next_objective;
      converged = true;
      break;
    }
    objective = next_objective;
  }

  SelectionPlan plan;
  plan.rounds = rounds;
  plan.converged = converged;
  plan.iterations_used = iterations;
  plan.objective = k * detail::weighted_sum(devices, probs);
  plan.objective_history = std::move(history);
  plan.device_ids.reserve(n);
  plan.probabilities.reserve(n);
  plan.powers.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    plan.device_ids.push_back(devices[i].id);
    // The per-round subproblems are identical for a static profile, so the
    // solved pair is replicated across rounds.
    plan.probabilities.emplace_back(rounds, probs[i]);
    plan.powers.emplace_back(rounds, powers[i]);
  }
  return plan;
}

/// Joint probability/power solve: starts from the feasible point built from
/// the closed-form probability at full power (capped by cfg.a_init) with all
/// powers at p_max, then alternates as in alternating_solve_from.
inline SelectionPlan alternating_solve(const std::vector<DeviceProfile>& devices,
                                       const NetworkParams& net, const SolverConfig& cfg,
                                       std::size_t rounds) {
  if (devices.empty()) throw EmptyPopulation("alternating_solve: empty device list");
  validate(cfg);
  std::vector<double> probs(devices.size()), powers(devices.size(), net.p_max);
  for (std::size_t i = 0; i < devices.size(); ++i) {
    probs[i] = std::min(cfg.a_init, optimal_probability(devices[i], net, net.p_max));
  }
  return alternating_solve_from(devices, net, cfg, rounds, std::move(probs),
                                std::move(powers));
}

/// Weighted sum of selection probabilities over all devices and rounds.
inline double objective_value(const SelectionPlan& plan,
                              const std::vector<DeviceProfile>& devices) {
  if (plan.probabilities.size() != devices.size()) {
    throw std::invalid_argument("objective_value: plan/device dimension mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < devices.size(); ++i) {
    if (plan.probabilities[i].size() != plan.rounds) {
      throw std::invalid_argument("objective_value: plan round dimension mismatch");
    }
    for (double aik : plan.probabilities[i]) total += aik * devices[i].weight;
  }
  return total;
}

/// Constraint slack of one (device, round) pair. Positive slack means the
/// constraint holds with margin.
struct PairSlack {
  std::size_t device_index = 0;
  std::size_t round = 0;
  double energy_slack_j = 0.0;  ///< budget minus expected round energy
  double time_slack_s = 0.0;    ///< threshold minus expected transmission time
};

struct FeasibilityReport {
  std::vector<PairSlack> slacks;  ///< one entry per (device, round)
  std::vector<std::pair<std::size_t, std::size_t>> violations;
  bool feasible() const { return violations.empty(); }
};

/// Evaluates the energy-budget, time-threshold, power-range and probability-
/// range constraints for every (device, round) pair of a plan.
inline FeasibilityReport feasibility_check(const SelectionPlan& plan,
                                           const std::vector<DeviceProfile>& devices,
                                           const NetworkParams& net) {
  if (plan.probabilities.size() != devices.size() || plan.powers.size() != devices.size()) {
    throw std::invalid_argument("feasibility_check: plan/device dimension mismatch");
  }
  FeasibilityReport report;
  report.slacks.reserve(devices.size() * plan.rounds);
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const double e_comp = computation_energy(devices[i]);
    for (std::size_t r = 0; r < plan.rounds; ++r) {
      const double aik = plan.probabilities[i][r];
      const double pik = plan.powers[i][r];
      bool ok = aik >= -1e-12 && aik <= 1.0 + 1e-12 && pik >= -1e-12 &&
                pik <= net.p_max * (1.0 + 1e-9);
      PairSlack slack{i, r, devices[i].energy_budget_j, net.tau_th_s};
      if (aik > 0.0) {
        const double t = transmission_time(devices[i], net, pik);
        slack.energy_slack_j = devices[i].energy_budget_j - aik * (pik * t + e_comp);
        slack.time_slack_s = net.tau_th_s - aik * t;
        if (slack.energy_slack_j < -1e-9 * devices[i].energy_budget_j ||
            slack.time_slack_s < -1e-9 * net.tau_th_s) {
          ok = false;
        }
      }
      report.slacks.push_back(slack);
      if (!ok) report.violations.emplace_back(i, r);
    }
  }
  return report;
}

inline nlohmann::json plan_to_json(const SelectionPlan& plan) {
  return nlohmann::json{{"devices", plan.device_ids},
                        {"rounds", plan.rounds},
                        {"a", plan.probabilities},
                        {"p_watts", plan.powers},
                        {"objective", plan.objective},
                        {"converged", plan.converged}};
}

inline SelectionPlan plan_from_json(const nlohmann::json& j) {
  SelectionPlan plan;
  plan.device_ids = j.at("devices").get<std::vector<int>>();
  plan.rounds = j.at("rounds").get<std::size_t>();
  plan.probabilities = j.at("a").get<std::vector<std::vector<double>>>();
  plan.powers = j.at("p_watts").get<std::vector<std::vector<double>>>();
  plan.objective = j.at("objective").get<double>();
  plan.converged = j.at("converged").get<bool>();
  if (plan.probabilities.size() != plan.device_ids.size() ||
      plan.powers.size() != plan.device_ids.size()) {
    throw std::invalid_argument("plan_from_json: matrix row count mismatch");
  }
  for (std::size_t i = 0; i < plan.device_ids.size(); ++i) {
    if (plan.probabilities[i].size() != plan.rounds || plan.powers[i].size() != plan.rounds) {
      throw std::invalid_argument("plan_from_json: matrix column count mismatch");
    }
  }
  return plan;
}

}  // namespace fedpower
