// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#pragma once

#include <cstdint>
#include <span>

#include "tissuenet/tensor.hpp"

namespace tissuenet {

struct LossResult {
  double loss;
  Tensor grad;  // dL/dlogits = (softmax - onehot) / N
};

/// Mean softmax cross-entropy over the batch. Labels must lie in [0, K).
LossResult cross_entropy(const Tensor& logits, std::span<const std::uint8_t> labels);

}  // namespace tissuenet
