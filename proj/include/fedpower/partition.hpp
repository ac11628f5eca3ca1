#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "fedpower/data.hpp"
#include "fedpower/rng.hpp"

namespace fedpower {

struct PartitionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-device sample index sets plus the concentration used to draw them.
/// Index sets are disjoint, cover the dataset, and every device is nonempty.
struct PartitionSpec {
  std::vector<std::vector<std::size_t>> assignments;
  double beta = 1.0;
};

/// Label-skewed partition: for each class, device shares are drawn from a
/// symmetric Dirichlet with concentration beta and the class's samples are
/// sliced accordingly. Small beta concentrates each class on few devices.
inline PartitionSpec dirichlet_partition(const Dataset& data, std::size_t n_devices,
                                         double beta, std::uint64_t seed) {
  if (n_devices < 1) throw PartitionError("dirichlet_partition: need at least one device");
  if (!(beta > 0.0)) throw PartitionError("dirichlet_partition: beta must be positive");
  validate(data);
  if (data.size() < n_devices) {
    throw PartitionError("dirichlet_partition: fewer samples than devices");
  }

  std::vector<std::vector<std::size_t>> by_class(data.classes);
  for (std::size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);

  auto eng = make_engine(seed, 0xd17);
  std::gamma_distribution<double> gamma(beta, 1.0);

  PartitionSpec parts;
  parts.beta = beta;
  parts.assignments.resize(n_devices);

  for (auto& members : by_class) {
    if (members.empty()) continue;
    std::shuffle(members.begin(), members.end(), eng);

    std::vector<double> share(n_devices);
    double total = 0.0;
    for (double& s : share) total += (s = gamma(eng));
    if (total <= 0.0) {
      std::fill(share.begin(), share.end(), 1.0);
      total = static_cast<double>(n_devices);
    }

    const double m = static_cast<double>(members.size());
    double cum = 0.0;
    std::size_t start = 0;
    for (std::size_t dev = 0; dev < n_devices; ++dev) {
      cum += share[dev] / total;
      const auto stop = dev + 1 == n_devices
                            ? members.size()
                            : std::min(members.size(),
                                       static_cast<std::size_t>(std::llround(cum * m)));
      for (std::size_t i = start; i < stop; ++i) parts.assignments[dev].push_back(members[i]);
      start = std::max(start, stop);
    }
  }

  // Every device must own at least one sample; top up empty devices from the
  // currently largest one.
  for (std::size_t dev = 0; dev < n_devices; ++dev) {
    if (!parts.assignments[dev].empty()) continue;
    const auto donor = std::max_element(
        parts.assignments.begin(), parts.assignments.end(),
        [](const auto& a, const auto& b) { return a.size() < b.size(); });
    if (donor->size() <= 1) throw PartitionError("dirichlet_partition: fewer samples than devices");
    parts.assignments[dev].push_back(donor->back());
    donor->pop_back();
  }
  return parts;
}

/// Dataset-proportional device weights; they sum to one.
inline std::vector<double> compute_weights(const PartitionSpec& parts) {
  if (parts.assignments.empty()) throw PartitionError("compute_weights: empty partition");
  double total = 0.0;
  for (const auto& a : parts.assignments) total += static_cast<double>(a.size());
  if (total <= 0.0) throw PartitionError("compute_weights: partition holds no samples");
  std::vector<double> weights(parts.assignments.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    weights[i] = static_cast<double>(parts.assignments[i].size()) / total;
  }
  return weights;
}

}  // namespace fedpower
