// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tissuenet/random.hpp"
#include "tissuenet/tensor.hpp"

namespace tissuenet {

enum class Split { train, test };

struct Dataset {
  Tensor images;  // [N,C,H,W]
  std::vector<std::uint8_t> labels;
  Split split = Split::train;
  std::size_t class_count = 0;

  std::size_t size() const noexcept { return labels.size(); }
  Shape sample_shape() const;
  void validate() const;
};

struct DatasetPair {
  Dataset train;
  Dataset test;
};

// Loaders reject any byte-count anomaly; nothing is padded or truncated.

/// train-images-idx3-ubyte, train-labels-idx1-ubyte, t10k-* in `dir`.
DatasetPair load_mnist(const std::filesystem::path& dir);
Dataset load_idx_pair(const std::filesystem::path& images, const std::filesystem::path& labels,
                      Split split);

/// data_batch_1..5.bin and test_batch.bin in `dir`.
DatasetPair load_cifar10(const std::filesystem::path& dir);
/// Reads up to `limit` records (0 = all) from one CIFAR-10 batch file.
Dataset load_cifar10_batch(const std::filesystem::path& file, Split split, std::size_t limit = 0);
/// train.bin and test.bin (coarse label, fine label, pixels); fine labels.
DatasetPair load_cifar100(const std::filesystem::path& dir);

/// First n samples.
Dataset head(const Dataset& ds, std::size_t n);

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> std;
};

ChannelStats channel_stats(const Dataset& ds);
/// x <- (x - mean[c]) / std[c]
void normalize(Dataset& ds, const ChannelStats& stats);
void denormalize(Dataset& ds, const ChannelStats& stats);

/// Random crop from a zero-padded image plus horizontal flip with
/// probability 0.5. Stateful; one instance per consumer.
class CropFlipAugmenter {
 public:
  CropFlipAugmenter(std::size_t pad, std::uint64_t seed) : pad_(pad), rng_(seed) {}
  /// Augments a [N,C,H,W] batch in place.
  void apply(Tensor& batch);

 private:
  std::size_t pad_;
  Rng rng_;
};

/// Deterministic synthetic data. Separable mode puts class means 8 sigma
/// out along distinct axes with noise clipped at 2 sigma.
Dataset synth_dataset(std::uint64_t seed, std::size_t n, std::size_t classes, const Shape& shape,
                      bool separable);

struct Batch {
  Tensor images;
  std::vector<std::uint8_t> labels;
};

Batch gather(const Dataset& ds, std::span<const std::size_t> indices);

}  // namespace tissuenet
