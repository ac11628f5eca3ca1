#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fedpower/data.hpp"
#include "fedpower/rng.hpp"

namespace fedpower {

/// Network shape. hidden == 0 selects plain multinomial logistic regression,
/// otherwise one tanh hidden layer of that width.
struct Architecture {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  int classes = 0;
};

inline std::size_t param_count(const Architecture& arch) {
  const auto c = static_cast<std::size_t>(arch.classes);
  if (arch.hidden == 0) return arch.input_dim * c + c;
  return arch.input_dim * arch.hidden + arch.hidden + arch.hidden * c + c;
}

/// Flat parameter vector plus the shape needed to interpret it.
struct ModelState {
  Architecture arch;
  std::vector<double> theta;
};

inline ModelState init_model(const Architecture& arch, std::uint64_t seed = 0) {
  if (arch.input_dim == 0 || arch.classes < 2) {
    throw std::invalid_argument("init_model: bad architecture");
  }
  ModelState model{arch, std::vector<double>(param_count(arch), 0.0)};
  if (arch.hidden > 0) {
    auto eng = make_engine(seed, 0x1417);
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (double& t : model.theta) t = u(eng);
  }
  return model;
}

namespace detail {

// Cross-entropy loss of one sample; fills probs with the softmax outputs and,
// for the hidden architecture, hidden_out with the tanh activations.
inline double forward(const ModelState& model, const double* x, int label,
                      std::vector<double>& probs, std::vector<double>& hidden_out) {
  const auto& arch = model.arch;
  const auto c = static_cast<std::size_t>(arch.classes);
  const double* theta = model.theta.data();
  probs.assign(c, 0.0);

  if (arch.hidden == 0) {
    const double* w = theta;                       // [classes x dims]
    const double* b = theta + arch.input_dim * c;  // [classes]
    for (std::size_t j = 0; j < c; ++j) {
      double z = b[j];
      const double* wj = w + j * arch.input_dim;
      for (std::size_t d = 0; d < arch.input_dim; ++d) z += wj[d] * x[d];
      probs[j] = z;
    }
  } else {
    const std::size_t h = arch.hidden;
    const double* w1 = theta;                                // [hidden x dims]
    const double* b1 = theta + arch.input_dim * h;           // [hidden]
    const double* w2 = b1 + h;                               // [classes x hidden]
    const double* b2 = w2 + h * c;                           // [classes]
    hidden_out.assign(h, 0.0);
    for (std::size_t j = 0; j < h; ++j) {
      double z = b1[j];
      const double* wj = w1 + j * arch.input_dim;
      for (std::size_t d = 0; d < arch.input_dim; ++d) z += wj[d] * x[d];
      hidden_out[j] = std::tanh(z);
    }
    for (std::size_t j = 0; j < c; ++j) {
      double z = b2[j];
      const double* wj = w2 + j * h;
      for (std::size_t d = 0; d < h; ++d) z += wj[d] * hidden_out[d];
      probs[j] = z;
    }
  }

  const double zmax = *std::max_element(probs.begin(), probs.end());
  double denom = 0.0;
  for (double& z : probs) denom += (z = std::exp(z - zmax));
  for (double& z : probs) z /= denom;
  return -std::log(std::max(probs[static_cast<std::size_t>(label)], 1e-300));
}

}  // namespace detail

/// Mean per-sample loss over the given sample indices.
inline double mean_loss(const ModelState& model, const Dataset& data,
                        std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("mean_loss: empty index set");
  std::vector<double> probs, hidden;
  double total = 0.0;
  for (std::size_t i : indices) {
    total += detail::forward(model, data.row(i), data.labels[i], probs, hidden);
  }
  return total / static_cast<double>(indices.size());
}

/// Full-batch gradient of the mean per-sample loss over the given indices.
inline std::vector<double> local_gradient(const ModelState& model, const Dataset& data,
                                          std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("local_gradient: empty index set");
  const auto& arch = model.arch;
  if (arch.input_dim != data.dims || arch.classes != data.classes) {
    throw std::invalid_argument("local_gradient: model/data shape mismatch");
  }
  const auto c = static_cast<std::size_t>(arch.classes);
  std::vector<double> grad(model.theta.size(), 0.0);
  std::vector<double> probs, hidden;
  const double inv_n = 1.0 / static_cast<double>(indices.size());

  for (std::size_t i : indices) {
    const double* x = data.row(i);
    const int y = data.labels[i];
    detail::forward(model, x, y, probs, hidden);

    if (arch.hidden == 0) {
      double* gw = grad.data();
      double* gb = grad.data() + arch.input_dim * c;
      for (std::size_t j = 0; j < c; ++j) {
        const double dz = (probs[j] - (static_cast<int>(j) == y ? 1.0 : 0.0)) * inv_n;
        double* gwj = gw + j * arch.input_dim;
        for (std::size_t d = 0; d < arch.input_dim; ++d) gwj[d] += dz * x[d];
        gb[j] += dz;
      }
    } else {
      const std::size_t h = arch.hidden;
      const double* w2 = model.theta.data() + arch.input_dim * h + h;
      double* gw1 = grad.data();
      double* gb1 = grad.data() + arch.input_dim * h;
      double* gw2 = gb1 + h;
      double* gb2 = gw2 + h * c;
      std::vector<double> dhidden(h, 0.0);
      for (std::size_t j = 0; j < c; ++j) {
        const double dz = (probs[j] - (static_cast<int>(j) == y ? 1.0 : 0.0)) * inv_n;
        double* gwj = gw2 + j * h;
        const double* wj = w2 + j * h;
        for (std::size_t d = 0; d < h; ++d) {
          gwj[d] += dz * hidden[d];
          dhidden[d] += dz * wj[d];
        }
        gb2[j] += dz;
      }
      for (std::size_t j = 0; j < h; ++j) {
        const double dz = dhidden[j] * (1.0 - hidden[j] * hidden[j]);
        double* gwj = gw1 + j * arch.input_dim;
        for (std::size_t d = 0; d < arch.input_dim; ++d) gwj[d] += dz * x[d];
        gb1[j] += dz;
      }
    }
  }
  return grad;
}

/// Fraction of argmax-correct predictions and mean per-sample loss.
inline std::pair<double, double> evaluate(const ModelState& model, const Dataset& test) {
  if (test.size() == 0) throw std::invalid_argument("evaluate: empty test set");
  if (model.arch.input_dim != test.dims || model.arch.classes != test.classes) {
    throw std::invalid_argument("evaluate: model/data shape mismatch");
  }
  std::vector<double> probs, hidden;
  std::size_t correct = 0;
  double total_loss = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    total_loss += detail::forward(model, test.row(i), test.labels[i], probs, hidden);
    const auto best = std::max_element(probs.begin(), probs.end()) - probs.begin();
    if (static_cast<int>(best) == test.labels[i]) ++correct;
  }
  const double n = static_cast<double>(test.size());
  return {static_cast<double>(correct) / n, total_loss / n};
}

}  // namespace fedpower
