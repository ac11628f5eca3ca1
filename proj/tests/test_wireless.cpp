#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "fedpower/wireless.hpp"

#include "test_support.hpp"

using namespace fedpower;
using Catch::Matchers::WithinRel;

namespace {

DeviceProfile reference_device() {
  DeviceProfile dev;
  dev.id = 0;
  dev.distance_m = 100.0;
  dev.bandwidth_hz = 1e5;
  dev.dataset_size = 600;
  dev.cpu_freq_hz = 1e9;
  dev.cycles_per_sample = 1e4;
  dev.capacitance = 1e-28;
  dev.energy_budget_j = 1.0;
  dev.weight = 0.01;
  return dev;
}

NetworkParams reference_network() {
  NetworkParams net;
  net.noise_power = 1e-12;
  net.message_bits = 199210.0 * 32.0;
  net.p_max = 1.0;
  net.tau_th_s = 0.08;
  return net;
}

}  // namespace

TEST_CASE("achievable rate") {
  const auto dev = reference_device();
  const auto net = reference_network();

  SECTION("zero power gives zero rate") {
    CHECK(achievable_rate(dev, net, 0.0) == 0.0);
  }
  SECTION("matches the closed form at the reference point") {
    // 1e5 * log2(1 + 0.1 / (100^2 * 1e-12))
    CHECK_THAT(achievable_rate(dev, net, 0.1), WithinRel(2325349.6808481035, 1e-12));
  }
  SECTION("doubling the distance quarters the received snr") {
    DeviceProfile far = dev;
    far.distance_m = 2.0 * dev.distance_m;
    CHECK_THAT(received_snr(far, net, 0.1), WithinRel(received_snr(dev, net, 0.1) / 4.0, 1e-12));
    CHECK(achievable_rate(far, net, 0.1) < achievable_rate(dev, net, 0.1));
  }
  SECTION("continuous, strictly increasing in power, zero at zero") {
    double prev = achievable_rate(dev, net, 0.0);
    CHECK(prev == 0.0);
    for (int i = 1; i <= 1000; ++i) {
      const double rate = achievable_rate(dev, net, 1e-3 * i);
      CHECK(rate > prev);
      prev = rate;
    }
  }
  SECTION("negative power is rejected") {
    CHECK_THROWS_AS(achievable_rate(dev, net, -1.0), std::domain_error);
  }
}

TEST_CASE("transmission time") {
  const auto dev = reference_device();
  const auto net = reference_network();

  SECTION("message bits over rate at the reference point") {
    CHECK_THAT(transmission_time(dev, net, 0.1), WithinRel(2.741402745790477, 1e-12));
  }
  SECTION("zero power signals infinite time") {
    CHECK(std::isinf(transmission_time(dev, net, 0.0)));
  }
  SECTION("strictly decreasing in power; full power is fastest") {
    double prev = transmission_time(dev, net, 1e-4);
    for (double p : {1e-3, 1e-2, 0.1, 0.5, 0.9}) {
      const double t = transmission_time(dev, net, p);
      CHECK(t < prev);
      prev = t;
    }
    CHECK(transmission_time(dev, net, net.p_max) < prev);
  }
  SECTION("farther devices upload more slowly") {
    DeviceProfile far = dev;
    far.distance_m = 250.0;
    CHECK(transmission_time(far, net, 0.1) > transmission_time(dev, net, 0.1));
  }
}

TEST_CASE("computation energy") {
  auto dev = reference_device();

  SECTION("kappa * cycles * samples * freq^2") {
    CHECK_THAT(computation_energy(dev), WithinRel(6e-4, 1e-12));
  }
  SECTION("no samples, no energy") {
    dev.dataset_size = 0;
    CHECK(computation_energy(dev) == 0.0);
  }
  SECTION("doubling the clock quadruples the energy") {
    const double base = computation_energy(dev);
    dev.cpu_freq_hz *= 2.0;
    CHECK_THAT(computation_energy(dev), WithinRel(4.0 * base, 1e-12));
  }
}

TEST_CASE("upload and round energy") {
  const auto dev = reference_device();
  const auto net = reference_network();

  SECTION("power times transmission time") {
    CHECK_THAT(upload_energy(dev, net, 0.1), WithinRel(0.2741402745790477, 1e-12));
  }
  SECTION("round energy adds the computation term") {
    CHECK_THAT(round_energy(dev, net, 0.1), WithinRel(0.2741402745790477 + 6e-4, 1e-12));
  }
  SECTION("strictly increasing in power over a fine grid") {
    const int points = 10000;
    double prev = 0.0;
    for (int i = 1; i <= points; ++i) {
      const double p = 1e-6 + (net.p_max - 1e-6) * (i - 1) / double(points - 1);
      const double e = upload_energy(dev, net, p);
      CHECK(e > prev);
      prev = e;
    }
  }
  SECTION("identical profiles draw identical energy") {
    const DeviceProfile copy = reference_device();
    CHECK(upload_energy(copy, net, 0.37) == upload_energy(dev, net, 0.37));
  }
  SECTION("nonpositive power is rejected") {
    CHECK_THROWS_AS(upload_energy(dev, net, 0.0), std::domain_error);
  }
}

TEST_CASE("minimum feasible power") {
  const auto dev = reference_device();
  const auto net = reference_network();

  SECTION("vanishes as a approaches zero") {
    CHECK(min_feasible_power(dev, net, 1e-12) < 1e-9);
    CHECK(min_feasible_power(dev, net, 1e-12) > 0.0);
  }
  SECTION("full participation under a tight threshold is astronomically infeasible") {
    // exponent a*S/(B*tau) ~ 796.8 at the reference constants
    const double p = min_feasible_power(dev, net, 1.0);
    CHECK(p > 1e200);
    CHECK(p > net.p_max);
  }
  SECTION("round trip: a * transmission_time(P_min(a)) == tau") {
    auto eng = fedpower::make_engine(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
      DeviceProfile d = dev;
      d.distance_m = 1.0 + 700.0 * u(eng);
      d.bandwidth_hz = 1e4 + 9.9e5 * u(eng);
      NetworkParams n = net;
      n.tau_th_s = 0.01 + 5.0 * u(eng);
      n.message_bits = 1e4 + 1e7 * u(eng);
      // keep the exponent in floating range so P_min stays finite
      const double a_cap = std::min(1.0, 500.0 * d.bandwidth_hz * n.tau_th_s / n.message_bits);
      const double a = std::max(1e-9, a_cap * u(eng));
      const double p_min = min_feasible_power(d, n, a);
      REQUIRE(std::isfinite(p_min));
      CHECK_THAT(a * transmission_time(d, n, p_min), WithinRel(n.tau_th_s, 1e-9));
    }
  }
  SECTION("a outside (0,1] is rejected") {
    CHECK_THROWS_AS(min_feasible_power(dev, net, 0.0), std::domain_error);
    CHECK_THROWS_AS(min_feasible_power(dev, net, 1.5), std::domain_error);
  }
}

TEST_CASE("outputs stay finite and positive on the documented domains") {
  const auto net = reference_network();
  auto eng = fedpower::make_engine(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto dev = reference_device();
    dev.distance_m = 1.0 + 700.0 * u(eng);
    dev.bandwidth_hz = 1e4 + 1e6 * u(eng);
    dev.dataset_size = 1 + static_cast<std::size_t>(1000 * u(eng));
    const double p = 1e-6 + (net.p_max - 1e-6) * u(eng);
    for (double v : {achievable_rate(dev, net, p), transmission_time(dev, net, p),
                     computation_energy(dev), upload_energy(dev, net, p),
                     round_energy(dev, net, p)}) {
      CHECK(std::isfinite(v));
      CHECK(v > 0.0);
    }
  }
}

TEST_CASE("profile and network validation") {
  auto dev = reference_device();
  auto net = reference_network();
  CHECK_NOTHROW(validate(dev));
  CHECK_NOTHROW(validate(net));
  dev.distance_m = 0.0;
  CHECK_THROWS_AS(validate(dev), std::invalid_argument);
  dev = reference_device();
  dev.weight = 1.5;
  CHECK_THROWS_AS(validate(dev), std::invalid_argument);
  net.noise_power = -1.0;
  CHECK_THROWS_AS(validate(net), std::invalid_argument);
}
