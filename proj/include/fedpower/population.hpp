#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "fedpower/rng.hpp"
#include "fedpower/wireless.hpp"

namespace fedpower {

/// Device-generation block: uniform placement in a square with the server at
/// the center, equal bandwidth split, log-uniform energy budgets.
struct PopulationConfig {
  std::size_t count = 100;
  double area_side_m = 1000.0;
  double total_bandwidth_hz = 10e6;
  double budget_min_j = 1e-3;
  double budget_max_j = 100.0;
  double cpu_freq_hz = 1e9;
  double cycles_per_sample = 1e4;
  double capacitance = 1e-28;
  std::size_t default_dataset_size = 600;  ///< placeholder until a partition assigns sizes
  std::uint64_t placement_seed = 1;
};

inline void validate(const PopulationConfig& cfg) {
  if (cfg.count < 1) throw std::invalid_argument("PopulationConfig: count must be >= 1");
  if (!(cfg.area_side_m > 0.0) || !(cfg.total_bandwidth_hz > 0.0) ||
      !(cfg.budget_min_j > 0.0) || !(cfg.budget_max_j >= cfg.budget_min_j) ||
      !(cfg.cpu_freq_hz > 0.0) || !(cfg.cycles_per_sample > 0.0) ||
      !(cfg.capacitance > 0.0) || cfg.default_dataset_size == 0) {
    throw std::invalid_argument("PopulationConfig: invalid field");
  }
}

inline std::vector<DeviceProfile> generate_population(const PopulationConfig& cfg) {
  validate(cfg);
  auto eng = make_engine(cfg.placement_seed, 0x9009);
  std::uniform_real_distribution<double> coord(0.0, cfg.area_side_m);
  std::uniform_real_distribution<double> log_budget(std::log(cfg.budget_min_j),
                                                    std::log(cfg.budget_max_j));
  const double cx = 0.5 * cfg.area_side_m;
  const double n = static_cast<double>(cfg.count);

  std::vector<DeviceProfile> devices(cfg.count);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    DeviceProfile& dev = devices[i];
    dev.id = static_cast<int>(i);
    const double x = coord(eng);
    const double y = coord(eng);
    dev.distance_m = std::max(1.0, std::hypot(x - cx, y - cx));
    dev.bandwidth_hz = cfg.total_bandwidth_hz / n;
    dev.dataset_size = cfg.default_dataset_size;
    dev.cpu_freq_hz = cfg.cpu_freq_hz;
    dev.cycles_per_sample = cfg.cycles_per_sample;
    dev.capacitance = cfg.capacitance;
    dev.energy_budget_j = std::exp(log_budget(eng));
    dev.weight = 1.0 / n;
    validate(dev);
  }
  return devices;
}

/// Copies partition sizes and dataset-proportional weights into the profiles.
inline void apply_partition_sizes(std::vector<DeviceProfile>& devices,
                                  const std::vector<std::size_t>& sizes,
                                  const std::vector<double>& weights) {
  if (devices.size() != sizes.size() || devices.size() != weights.size()) {
    throw std::invalid_argument("apply_partition_sizes: dimension mismatch");
  }
  for (std::size_t i = 0; i < devices.size(); ++i) {
    devices[i].dataset_size = sizes[i];
    devices[i].weight = weights[i];
  }
}

}  // namespace fedpower
