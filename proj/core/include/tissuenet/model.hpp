// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tissuenet/layers.hpp"

namespace tissuenet {

/// Ordered layer sequence with a static shape walk done at construction, so
/// inter-layer mismatches surface before any data flows.
class Model {
 public:
  Model(Shape input_shape, std::vector<LayerPtr> layers);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& grad_out);

  std::vector<Parameter*> parameters();
  void zero_grad();
  void initialize(Rng& rng);

  const Shape& input_shape() const noexcept { return shapes_.front(); }
  const Shape& output_shape() const noexcept { return shapes_.back(); }
  /// Per-sample shape entering layer i; index size() gives the output.
  const Shape& shape_at(std::size_t i) const { return shapes_.at(i); }
  std::size_t size() const noexcept { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  /// Runs forward layer by layer and names the first layer whose output
  /// holds a non-finite value, if any.
  std::optional<std::string> first_nonfinite_layer(const Tensor& x);

 private:
  std::vector<LayerPtr> layers_;
  std::vector<Shape> shapes_;
};

}  // namespace tissuenet
