#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fedpower/rng.hpp"

namespace fedpower {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense classification dataset; features stored row-major [samples x dims].
struct Dataset {
  std::vector<double> features;
  std::vector<int> labels;
  std::size_t dims = 0;
  int classes = 0;

  std::size_t size() const { return labels.size(); }
  const double* row(std::size_t i) const { return features.data() + i * dims; }
};

inline void validate(const Dataset& data) {
  if (data.size() == 0) throw DataError("Dataset: empty");
  if (data.features.size() != data.size() * data.dims) {
    throw DataError("Dataset: feature/label size mismatch");
  }
  for (int y : data.labels) {
    if (y < 0 || y >= data.classes) throw DataError("Dataset: label out of range");
  }
}

struct SyntheticDataConfig {
  std::size_t train_samples = 60000;
  std::size_t test_samples = 10000;
  std::size_t dims = 64;
  int classes = 10;
  double center_scale = 1.0;  ///< sd of the class centers
  double noise = 1.0;         ///< within-class sd
  std::uint64_t seed = 1;
};

/// Gaussian class centers, one row per class.
inline std::vector<double> blob_centers(std::size_t dims, int classes, double scale,
                                        std::uint64_t seed) {
  auto eng = make_engine(seed, 0xb10b);
  std::normal_distribution<double> gauss(0.0, scale);
  std::vector<double> centers(dims * static_cast<std::size_t>(classes));
  for (double& c : centers) c = gauss(eng);
  return centers;
}

/// iid samples around the given centers with uniform class frequencies.
inline Dataset sample_blobs(const std::vector<double>& centers, std::size_t dims,
                            int classes, std::size_t n, double noise, std::uint64_t seed) {
  if (classes < 1 || dims == 0) throw DataError("sample_blobs: bad shape");
  if (centers.size() != dims * static_cast<std::size_t>(classes)) {
    throw DataError("sample_blobs: center matrix shape mismatch");
  }
  auto eng = make_engine(seed, 0x5a3173);
  std::uniform_int_distribution<int> pick(0, classes - 1);
  std::normal_distribution<double> gauss(0.0, noise);
  Dataset data;
  data.dims = dims;
  data.classes = classes;
  data.features.resize(n * dims);
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = pick(eng);
    data.labels[i] = y;
    const double* mu = centers.data() + static_cast<std::size_t>(y) * dims;
    double* x = data.features.data() + i * dims;
    for (std::size_t d = 0; d < dims; ++d) x[d] = mu[d] + gauss(eng);
  }
  return data;
}

/// Train/test pair drawn around one set of class centers.
inline std::pair<Dataset, Dataset> make_synthetic(const SyntheticDataConfig& cfg) {
  const auto centers = blob_centers(cfg.dims, cfg.classes, cfg.center_scale, cfg.seed);
  Dataset train = sample_blobs(centers, cfg.dims, cfg.classes, cfg.train_samples,
                               cfg.noise, derive_seed(cfg.seed, 1));
  Dataset test = sample_blobs(centers, cfg.dims, cfg.classes, cfg.test_samples,
                              cfg.noise, derive_seed(cfg.seed, 2));
  return {std::move(train), std::move(test)};
}

namespace detail {

inline std::uint32_t read_u32_be(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw DataError("IDX file truncated: " + path);
  }
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace detail

/// Reads an IDX image/label file pair (the MNIST container format:
/// big-endian magic, big-endian dimension sizes, then raw bytes).
/// Pixel bytes are scaled to [0,1].
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw DataError("cannot open IDX image file: " + images_path);
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw DataError("cannot open IDX label file: " + labels_path);

  if (detail::read_u32_be(images, images_path) != 0x00000803u) {
    throw DataError("bad IDX image magic in " + images_path);
  }
  const std::uint32_t n_images = detail::read_u32_be(images, images_path);
  const std::uint32_t rows = detail::read_u32_be(images, images_path);
  const std::uint32_t cols = detail::read_u32_be(images, images_path);

  if (detail::read_u32_be(labels, labels_path) != 0x00000801u) {
    throw DataError("bad IDX label magic in " + labels_path);
  }
  const std::uint32_t n_labels = detail::read_u32_be(labels, labels_path);
  if (n_images != n_labels) {
    throw DataError("IDX image/label count mismatch: " + images_path);
  }

  Dataset data;
  data.dims = static_cast<std::size_t>(rows) * cols;
  data.features.resize(static_cast<std::size_t>(n_images) * data.dims);
  data.labels.resize(n_images);

  std::vector<unsigned char> buf(data.dims);
  for (std::uint32_t i = 0; i < n_images; ++i) {
    if (!images.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
      throw DataError("IDX file truncated: " + images_path);
    }
    double* x = data.features.data() + static_cast<std::size_t>(i) * data.dims;
    for (std::size_t d = 0; d < data.dims; ++d) x[d] = buf[d] / 255.0;
    char y = 0;
    if (!labels.read(&y, 1)) throw DataError("IDX file truncated: " + labels_path);
    data.labels[i] = static_cast<unsigned char>(y);
  }
  data.classes = data.labels.empty()
                     ? 0
                     : *std::max_element(data.labels.begin(), data.labels.end()) + 1;
  return data;
}

}  // namespace fedpower
