// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include "tissuenet/loss.hpp"

#include <algorithm>
#include <cmath>

#include "tissuenet/error.hpp"

namespace tissuenet {

LossResult cross_entropy(const Tensor& logits, std::span<const std::uint8_t> labels) {
  if (logits.rank() != 2) {
    fail(ErrorCategory::config, "cross_entropy expects [N,K] logits, got " +
                                    shape_to_string(logits.shape()));
  }
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (labels.size() != n) {
    fail(ErrorCategory::config, "cross_entropy got " + std::to_string(labels.size()) +
                                    " labels for batch of " + std::to_string(n));
  }
  LossResult r{0.0, Tensor(logits.shape())};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= k) {
      fail(ErrorCategory::domain, "label " + std::to_string(labels[i]) +
                                      " out of range for " + std::to_string(k) + " classes");
    }
    const double* row = logits.data() + i * k;
    const double peak = *std::max_element(row, row + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) total += std::exp(row[j] - peak);
    const double log_z = peak + std::log(total);
    r.loss += (log_z - row[labels[i]]) * inv_n;
    for (std::size_t j = 0; j < k; ++j) {
      r.grad[i * k + j] = std::exp(row[j] - log_z) * inv_n;
    }
    r.grad[i * k + labels[i]] -= inv_n;
  }
  return r;
}

}  // namespace tissuenet
