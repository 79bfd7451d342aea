// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include "tissuenet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "tissuenet/error.hpp"

namespace tissuenet {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  return os.str();
}

namespace {

void check_dims(const Shape& shape) {
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (shape[i] == 0) {
      fail(ErrorCategory::config,
           "tensor dimension " + std::to_string(i) + " is zero in shape " +
               shape_to_string(shape));
    }
  }
}

}  // namespace

Tensor::Tensor() : data_(1, 0.0) {}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  check_dims(shape_);
  data_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, const std::vector<double>& values)
    : Tensor(std::move(shape), AlignedBuffer(values.begin(), values.end()), Adopt{}) {}

Tensor::Tensor(Shape shape, AlignedBuffer values, Adopt)
    : shape_(std::move(shape)), data_(std::move(values)) {
  check_dims(shape_);
  if (data_.size() != shape_numel(shape_)) {
    fail(ErrorCategory::config,
         "tensor of shape " + shape_to_string(shape_) + " needs " +
             std::to_string(shape_numel(shape_)) + " values, got " +
             std::to_string(data_.size()));
  }
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    fail(ErrorCategory::config, "axis " + std::to_string(axis) +
                                    " out of range for shape " +
                                    shape_to_string(shape_));
  }
  return shape_[axis];
}

std::size_t Tensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != shape_.size()) {
    fail(ErrorCategory::config, "index rank " + std::to_string(index.size()) +
                                    " does not match shape " +
                                    shape_to_string(shape_));
  }
  std::size_t flat = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= shape_[i]) {
      fail(ErrorCategory::config, "index " + std::to_string(index[i]) +
                                      " out of range on axis " +
                                      std::to_string(i) + " of shape " +
                                      shape_to_string(shape_));
    }
    flat = flat * shape_[i] + index[i];
  }
  return flat;
}

double& Tensor::at(std::initializer_list<std::size_t> index) {
  return data_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  return data_[offset(std::span<const std::size_t>(index.begin(), index.size()))];
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape_numel(shape) != data_.size()) {
    fail(ErrorCategory::config, "cannot reshape " + shape_to_string(shape_) +
                                    " into " + shape_to_string(shape));
  }
  return Tensor(std::move(shape), data_, Adopt{});
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool operator==(const Tensor& a, const Tensor& b) {
  return a.shape_ == b.shape_ &&
         std::memcmp(a.data_.data(), b.data_.data(),
                     a.data_.size() * sizeof(double)) == 0;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    fail(ErrorCategory::config, "shape mismatch " + shape_to_string(a.shape()) +
                                    " vs " + shape_to_string(b.shape()));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

bool all_finite(const Tensor& t) {
  return std::all_of(t.values().begin(), t.values().end(),
                     [](double v) { return std::isfinite(v); });
}

}  // namespace tissuenet
