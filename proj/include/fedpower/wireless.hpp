#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace fedpower {

/// Static physical and data attributes of one client device.
struct DeviceProfile {
  int id = 0;
  double distance_m = 1.0;         ///< distance to the server, meters
  double bandwidth_hz = 1.0;       ///< allocated uplink bandwidth
  std::size_t dataset_size = 1;    ///< local training samples
  double cpu_freq_hz = 1e9;        ///< CPU cycles per second
  double cycles_per_sample = 1e4;  ///< CPU cycles to process one sample
  double capacitance = 1e-28;      ///< effective switched capacitance
  double energy_budget_j = 1.0;    ///< per-round energy budget, joules
  double weight = 0.0;             ///< objective weight, in [0,1]
};

/// Wireless constants shared by every device.
struct NetworkParams {
  double noise_power = 1e-12;             ///< receiver noise power, watts
  double message_bits = 199210.0 * 32.0;  ///< uplink message size, bits
  double p_max = 1.0;                     ///< transmit power cap, watts
  double tau_th_s = 0.08;                 ///< round transmission time threshold
};

inline void validate(const DeviceProfile& dev) {
  if (!(dev.distance_m > 0.0) || !(dev.bandwidth_hz > 0.0) ||
      dev.dataset_size == 0 || !(dev.cpu_freq_hz > 0.0) ||
      !(dev.cycles_per_sample > 0.0) || !(dev.capacitance > 0.0) ||
      !(dev.energy_budget_j > 0.0)) {
    throw std::invalid_argument("DeviceProfile: physical fields must be strictly positive");
  }
  if (!(dev.weight >= 0.0 && dev.weight <= 1.0)) {
    throw std::invalid_argument("DeviceProfile: weight outside [0,1]");
  }
}

inline void validate(const NetworkParams& net) {
  if (!(net.noise_power > 0.0) || !(net.message_bits > 0.0) ||
      !(net.p_max > 0.0) || !(net.tau_th_s > 0.0)) {
    throw std::invalid_argument("NetworkParams: all fields must be strictly positive");
  }
}

/// Received SNR at the server for a given transmit power (quadratic path loss).
inline double received_snr(const DeviceProfile& dev, const NetworkParams& net,
                           double power_w) {
  return power_w / (dev.distance_m * dev.distance_m * net.noise_power);
}

/// Achievable uplink rate in bits/s. Zero at zero power.
inline double achievable_rate(const DeviceProfile& dev, const NetworkParams& net,
                              double power_w) {
  if (power_w < 0.0) throw std::domain_error("achievable_rate: negative power");
  // log2(1+snr) via log1p keeps precision for very small snr.
  return dev.bandwidth_hz * std::log1p(received_snr(dev, net, power_w)) /
         std::numbers::ln2;
}

/// Time to upload one message, seconds. +infinity at zero power (zero rate).
inline double transmission_time(const DeviceProfile& dev, const NetworkParams& net,
                                double power_w) {
  const double rate = achievable_rate(dev, net, power_w);
  if (rate <= 0.0) return std::numeric_limits<double>::infinity();
  return net.message_bits / rate;
}

/// Energy to process the local dataset once (one local gradient pass).
inline double computation_energy(const DeviceProfile& dev) {
  return dev.capacitance * dev.cycles_per_sample *
         static_cast<double>(dev.dataset_size) * dev.cpu_freq_hz * dev.cpu_freq_hz;
}

/// Energy to upload one message at the given power.
inline double upload_energy(const DeviceProfile& dev, const NetworkParams& net,
                            double power_w) {
  if (!(power_w > 0.0)) throw std::domain_error("upload_energy: power must be positive");
  return power_w * transmission_time(dev, net, power_w);
}

/// Total energy drawn by one participating device in one round.
inline double round_energy(const DeviceProfile& dev, const NetworkParams& net,
                           double power_w) {
  return computation_energy(dev) + upload_energy(dev, net, power_w);
}

/// Smallest transmit power at which a device with the given selection
/// probability meets the round time threshold, i.e.
/// probability * transmission_time(P) == tau_th exactly. The result may
/// exceed p_max; callers decide how to handle that.
inline double min_feasible_power(const DeviceProfile& dev, const NetworkParams& net,
                                 double probability) {
  if (!(probability > 0.0 && probability <= 1.0)) {
    throw std::domain_error("min_feasible_power: probability outside (0,1]");
  }
  const double exponent =
      probability * net.message_bits / (dev.bandwidth_hz * net.tau_th_s);
  // 2^x - 1 via expm1, exact inverse of the log1p in achievable_rate.
  return dev.distance_m * dev.distance_m * net.noise_power *
         std::expm1(exponent * std::numbers::ln2);
}

}  // namespace fedpower
