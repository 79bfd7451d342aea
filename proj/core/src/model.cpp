// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include "tissuenet/model.hpp"

#include "tissuenet/error.hpp"

namespace tissuenet {

Model::Model(Shape input_shape, std::vector<LayerPtr> layers) : layers_(std::move(layers)) {
  shapes_.push_back(std::move(input_shape));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    try {
      shapes_.push_back(layers_[i]->output_shape(shapes_.back()));
    } catch (const Error& e) {
      throw Error(e.category(), "shape walk failed at layer " + std::to_string(i) + " ('" +
                                    layers_[i]->name() + "', input [" +
                                    shape_to_string(shapes_.back()) + "]): " + e.detail());
    }
  }
}

Tensor Model::forward(const Tensor& x) {
  Tensor h = x;
  for (auto& l : layers_) h = l->forward(h);
  return h;
}

Tensor Model::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> ps;
  for (auto& l : layers_) {
    for (Parameter* p : l->parameters()) ps.push_back(p);
  }
  return ps;
}

void Model::zero_grad() {
  for (Parameter* p : parameters()) p->grad.fill(0.0);
}

void Model::initialize(Rng& rng) {
  for (auto& l : layers_) l->initialize(rng);
}

std::optional<std::string> Model::first_nonfinite_layer(const Tensor& x) {
  if (!all_finite(x)) return std::string("<input>");
  Tensor h = x;
  for (auto& l : layers_) {
    h = l->forward(h);
    if (!all_finite(h)) return l->name();
  }
  return std::nullopt;
}

}  // namespace tissuenet
