// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include "tissuenet/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "tissuenet/error.hpp"

namespace tissuenet {

Shape Dataset::sample_shape() const {
  return Shape(images.shape().begin() + 1, images.shape().end());
}

void Dataset::validate() const {
  if (images.rank() < 2 || images.dim(0) != labels.size()) {
    fail(ErrorCategory::format, "dataset holds " + shape_to_string(images.shape()) + " images for " +
                                    std::to_string(labels.size()) + " labels");
  }
  for (std::uint8_t l : labels) {
    if (l >= class_count) {
      fail(ErrorCategory::format, "label " + std::to_string(l) + " outside " +
                                      std::to_string(class_count) + " classes");
    }
  }
}

namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCategory::io, "cannot open '" + path.string() + "'");
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<unsigned char> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) fail(ErrorCategory::io, "read of '" + path.string() + "' failed");
  return bytes;
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

}  // namespace

Dataset load_idx_pair(const std::filesystem::path& images, const std::filesystem::path& labels,
                      Split split) {
  const std::vector<unsigned char> img = read_bytes(images);
  const std::vector<unsigned char> lbl = read_bytes(labels);
  if (img.size() < 16) fail(ErrorCategory::format, images.string() + ": truncated IDX header");
  if (lbl.size() < 8) fail(ErrorCategory::format, labels.string() + ": truncated IDX header");
  if (be32(img, 0) != 0x00000803) {
    fail(ErrorCategory::format, images.string() + ": bad magic, expected 0x00000803");
  }
  if (be32(lbl, 0) != 0x00000801) {
    fail(ErrorCategory::format, labels.string() + ": bad magic, expected 0x00000801");
  }
  const std::size_t n = be32(img, 4), rows = be32(img, 8), cols = be32(img, 12);
  const std::size_t n_labels = be32(lbl, 4);
  if (n != n_labels) {
    fail(ErrorCategory::format, "image count " + std::to_string(n) + " != label count " +
                                    std::to_string(n_labels));
  }
  if (n == 0 || rows == 0 || cols == 0) fail(ErrorCategory::format, images.string() + ": empty IDX");
  if (img.size() != 16 + n * rows * cols) {
    fail(ErrorCategory::format, images.string() + ": truncated or oversized, expected " +
                                    std::to_string(16 + n * rows * cols) + " bytes, found " +
                                    std::to_string(img.size()));
  }
  if (lbl.size() != 8 + n) {
    fail(ErrorCategory::format, labels.string() + ": truncated or oversized, expected " +
                                    std::to_string(8 + n) + " bytes, found " +
                                    std::to_string(lbl.size()));
  }
  Dataset ds;
  ds.split = split;
  ds.class_count = 10;
  ds.images = Tensor({n, 1, rows, cols});
  for (std::size_t i = 0; i < n * rows * cols; ++i) ds.images[i] = img[16 + i] / 255.0;
  ds.labels.assign(lbl.begin() + 8, lbl.end());
  ds.validate();
  return ds;
}

DatasetPair load_mnist(const std::filesystem::path& dir) {
  return {load_idx_pair(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", Split::train),
          load_idx_pair(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte", Split::test)};
}

namespace {

constexpr std::size_t kCifarPixels = 3 * 32 * 32;

// Appends records of `label_bytes` label prefix plus 3072 pixels.
void read_cifar_records(const std::filesystem::path& file, std::size_t label_bytes,
                        std::size_t label_index, std::size_t classes, std::size_t limit,
                        std::vector<double>& pixels, std::vector<std::uint8_t>& labels) {
  const std::vector<unsigned char> b = read_bytes(file);
  const std::size_t record = label_bytes + kCifarPixels;
  if (b.empty() || b.size() % record != 0) {
    fail(ErrorCategory::format, file.string() + ": size " + std::to_string(b.size()) +
                                    " is not a multiple of " + std::to_string(record));
  }
  std::size_t count = b.size() / record;
  if (limit != 0 && limit < count) count = limit;
  pixels.reserve(pixels.size() + count * kCifarPixels);
  for (std::size_t r = 0; r < count; ++r) {
    const unsigned char* rec = b.data() + r * record;
    const unsigned char label = rec[label_index];
    if (label >= classes) {
      fail(ErrorCategory::format, file.string() + ": record " + std::to_string(r) + " has label " +
                                      std::to_string(label));
    }
    labels.push_back(label);
    for (std::size_t i = 0; i < kCifarPixels; ++i) pixels.push_back(rec[label_bytes + i] / 255.0);
  }
}

Dataset make_cifar(std::vector<double> pixels, std::vector<std::uint8_t> labels, Split split,
                   std::size_t classes) {
  Dataset ds;
  ds.split = split;
  ds.class_count = classes;
  const std::size_t n = labels.size();
  ds.images = Tensor({n, 3, 32, 32}, std::move(pixels));
  ds.labels = std::move(labels);
  return ds;
}

}  // namespace

Dataset load_cifar10_batch(const std::filesystem::path& file, Split split, std::size_t limit) {
  std::vector<double> px;
  std::vector<std::uint8_t> lb;
  read_cifar_records(file, 1, 0, 10, limit, px, lb);
  return make_cifar(std::move(px), std::move(lb), split, 10);
}

DatasetPair load_cifar10(const std::filesystem::path& dir) {
  std::vector<double> px;
  std::vector<std::uint8_t> lb;
  for (int i = 1; i <= 5; ++i) {
    read_cifar_records(dir / ("data_batch_" + std::to_string(i) + ".bin"), 1, 0, 10, 0, px, lb);
  }
  DatasetPair p;
  p.train = make_cifar(std::move(px), std::move(lb), Split::train, 10);
  p.test = load_cifar10_batch(dir / "test_batch.bin", Split::test);
  return p;
}

DatasetPair load_cifar100(const std::filesystem::path& dir) {
  DatasetPair p;
  for (Split s : {Split::train, Split::test}) {
    std::vector<double> px;
    std::vector<std::uint8_t> lb;
    read_cifar_records(dir / (s == Split::train ? "train.bin" : "test.bin"), 2, 1, 100, 0, px, lb);
    (s == Split::train ? p.train : p.test) = make_cifar(std::move(px), std::move(lb), s, 100);
  }
  return p;
}

Dataset head(const Dataset& ds, std::size_t n) {
  if (n == 0 || n > ds.size()) {
    fail(ErrorCategory::config, "cannot take " + std::to_string(n) + " of " +
                                    std::to_string(ds.size()) + " samples");
  }
  Dataset out;
  out.split = ds.split;
  out.class_count = ds.class_count;
  Shape s = ds.images.shape();
  const std::size_t per = ds.images.size() / s[0];
  s[0] = n;
  out.images = Tensor(s, std::vector<double>(ds.images.data(), ds.images.data() + n * per));
  out.labels.assign(ds.labels.begin(), ds.labels.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

ChannelStats channel_stats(const Dataset& ds) {
  const std::size_t n = ds.images.dim(0), c = ds.images.dim(1);
  const std::size_t plane = ds.images.size() / (n * c);
  ChannelStats st{std::vector<double>(c, 0.0), std::vector<double>(c, 0.0)};
  for (std::size_t ch = 0; ch < c; ++ch) {
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double* p = ds.images.data() + (i * c + ch) * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        sum += p[k];
        sq += p[k] * p[k];
      }
    }
    const double count = static_cast<double>(n * plane);
    st.mean[ch] = sum / count;
    st.std[ch] = std::sqrt(std::max(0.0, sq / count - st.mean[ch] * st.mean[ch]));
  }
  return st;
}

namespace {

void affine_per_channel(Dataset& ds, const ChannelStats& st, bool forward) {
  const std::size_t n = ds.images.dim(0), c = ds.images.dim(1);
  if (st.mean.size() != c || st.std.size() != c) {
    fail(ErrorCategory::config, "normalization stats cover " + std::to_string(st.mean.size()) +
                                    " channels, data has " + std::to_string(c));
  }
  for (double s : st.std) {
    if (!(s > 0.0)) fail(ErrorCategory::domain, "normalization std must be > 0");
  }
  const std::size_t plane = ds.images.size() / (n * c);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      double* p = ds.images.data() + (i * c + ch) * plane;
      for (std::size_t k = 0; k < plane; ++k) {
        p[k] = forward ? (p[k] - st.mean[ch]) / st.std[ch] : p[k] * st.std[ch] + st.mean[ch];
      }
    }
  }
}

}  // namespace

void normalize(Dataset& ds, const ChannelStats& stats) { affine_per_channel(ds, stats, true); }
void denormalize(Dataset& ds, const ChannelStats& stats) { affine_per_channel(ds, stats, false); }

void CropFlipAugmenter::apply(Tensor& batch) {
  if (batch.rank() != 4) fail(ErrorCategory::config, "augmentation expects [N,C,H,W]");
  const std::size_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  std::vector<double> src(c * h * w);
  for (std::size_t i = 0; i < n; ++i) {
    double* img = batch.data() + i * c * h * w;
    std::memcpy(src.data(), img, src.size() * sizeof(double));
    // Offsets into the padded image; pad_ means no shift.
    const auto dy = static_cast<std::ptrdiff_t>(rng_.below(2 * pad_ + 1)) - static_cast<std::ptrdiff_t>(pad_);
    const auto dx = static_cast<std::ptrdiff_t>(rng_.below(2 * pad_ + 1)) - static_cast<std::ptrdiff_t>(pad_);
    const bool flip = rng_.below(2) == 1;
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
          const std::size_t xx = flip ? w - 1 - x : x;
          const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xx) + dx;
          const bool inside = sy >= 0 && sy < static_cast<std::ptrdiff_t>(h) && sx >= 0 &&
                              sx < static_cast<std::ptrdiff_t>(w);
          img[(ch * h + y) * w + x] =
              inside ? src[(ch * h + static_cast<std::size_t>(sy)) * w + static_cast<std::size_t>(sx)]
                     : 0.0;
        }
      }
    }
  }
}

Dataset synth_dataset(std::uint64_t seed, std::size_t n, std::size_t classes, const Shape& shape,
                      bool separable) {
  if (classes == 0 || classes > 256 || n < classes) {
    fail(ErrorCategory::config, "synth_dataset needs 1 <= classes <= 256 and n >= classes");
  }
  const std::size_t dim = shape_numel(shape);
  Rng rng(seed);
  Dataset ds;
  ds.class_count = classes;
  Shape full{n};
  full.insert(full.end(), shape.begin(), shape.end());
  ds.images = Tensor(full);
  if (separable && dim < classes) {
    fail(ErrorCategory::config, "separable synth data needs at least one feature per class");
  }
  // Class k is shifted along feature (k mod dim) by 8 sigma when separable,
  // 0.5 sigma otherwise. Separable noise is clipped to 2 sigma, so the
  // identity map followed by argmax classifies every sample. Labels cycle,
  // so class counts differ by at most one.
  const double shift = separable ? 8.0 : 0.5;
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = static_cast<std::uint8_t>(i % classes);
    ds.labels.push_back(label);
    double* x = ds.images.data() + i * dim;
    for (std::size_t k = 0; k < dim; ++k) {
      const double z = rng.normal();
      x[k] = separable ? std::clamp(z, -2.0, 2.0) : z;
    }
    x[label % dim] += shift;
  }
  return ds;
}

Batch gather(const Dataset& ds, std::span<const std::size_t> indices) {
  Shape s = ds.images.shape();
  const std::size_t per = ds.images.size() / s[0];
  s[0] = indices.size();
  Batch b{Tensor(s), {}};
  b.labels.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::memcpy(b.images.data() + i * per, ds.images.data() + indices[i] * per, per * sizeof(double));
    b.labels.push_back(ds.labels[indices[i]]);
  }
  return b;
}

}  // namespace tissuenet
