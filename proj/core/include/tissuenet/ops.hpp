// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "tissuenet/tensor.hpp"

namespace tissuenet {

struct ConvGeometry {
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t groups = 1;

  /// floor((size + 2p - d) / s) + 1; geometry error when the window does
  /// not fit the padded input.
  std::size_t out_size(std::size_t size) const;
  void validate() const;

  friend bool operator==(const ConvGeometry&, const ConvGeometry&) = default;
};

// Convolution. Weight layout is [C_out, C_in / g, d, d]; cross-correlation,
// no kernel flip.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor* bias,
              const ConvGeometry& geom);
Tensor conv2d_reference(const Tensor& input, const Tensor& weight,
                        const Tensor* bias, const ConvGeometry& geom);

struct Conv2dGrads {
  Tensor input;
  Tensor weight;
  std::optional<Tensor> bias;
};

/// Gradients of conv2d with respect to all operands given dL/dY.
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& weight,
                            bool has_bias, const Tensor& grad_out,
                            const ConvGeometry& geom);

Tensor matmul(const Tensor& a, const Tensor& b);
/// a^T b and a b^T without materialising the transpose.
Tensor matmul_tn(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);

// Channel partitioning along axis 1 for tensors of rank >= 2.
std::vector<Tensor> channel_split(const Tensor& input,
                                  const std::vector<std::size_t>& sizes);
Tensor channel_concat(const std::vector<Tensor>& pieces);

Tensor relu(const Tensor& x);
/// Gradient passes where the forward input was strictly positive.
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

struct MaxPoolResult {
  Tensor output;
  std::vector<std::size_t> argmax;  // flat input offset per output element
};

MaxPoolResult max_pool2d(const Tensor& x, std::size_t window,
                         std::size_t stride);
Tensor max_pool2d_backward(const Shape& input_shape,
                           const std::vector<std::size_t>& argmax,
                           const Tensor& grad_out);

Tensor global_avg_pool(const Tensor& x);
Tensor global_avg_pool_backward(const Shape& input_shape,
                                const Tensor& grad_out);

/// Row-wise softmax over the last axis of a rank-2 tensor, max-shifted.
Tensor softmax(const Tensor& logits);

}  // namespace tissuenet
