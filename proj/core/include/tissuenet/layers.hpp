// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tissuenet/ops.hpp"
#include "tissuenet/random.hpp"
#include "tissuenet/tensor.hpp"

namespace tissuenet {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string n, Shape shape)
      : name(std::move(n)), value(shape), grad(shape) {}
};

enum class Activation { relu, identity };

enum class LayerKind {
  normal_conv,
  stacked_conv,
  dense,
  stacked_dense,
  residual_block,
  basic_unit,
  pool,
  flatten,
  global_avg_pool,
  softmax_output,
};

std::string_view to_string(LayerKind kind) noexcept;

/// Shapes passed to output_shape() and macs() are per sample (no batch
/// axis). Tensors passed to forward()/backward() carry the batch axis.
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;
  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  virtual LayerKind kind() const = 0;
  virtual Shape output_shape(const Shape& input) const = 0;
  /// Multiply-accumulates per sample, biases excluded.
  virtual std::uint64_t macs(const Shape& input) const = 0;

  virtual Tensor forward(const Tensor& x) = 0;
  /// Accumulates into parameter grads and returns dL/dx.
  virtual Tensor backward(const Tensor& grad_out) = 0;

  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual void initialize(Rng& /*rng*/) {}
  /// Sets the activation applied last in this layer, if it has one.
  virtual void set_output_activation(Activation /*act*/) {}

  /// Parameter entries excluding biases.
  std::uint64_t weight_count();

  const std::string& name() const noexcept { return name_; }

 protected:
  void require_forward(bool cached) const;

 private:
  std::string name_;
};

using LayerPtr = std::unique_ptr<Layer>;

class Conv2dLayer final : public Layer {
 public:
  Conv2dLayer(std::string name, std::size_t c_in, std::size_t c_out,
              ConvGeometry geom, bool bias = true,
              Activation act = Activation::relu);

  LayerKind kind() const override { return LayerKind::normal_conv; }
  Shape output_shape(const Shape& input) const override;
  std::uint64_t macs(const Shape& input) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override;
  void initialize(Rng& rng) override;
  void set_output_activation(Activation act) override { act_ = act; }

  const ConvGeometry& geometry() const noexcept { return geom_; }
  std::size_t in_channels() const noexcept { return c_in_; }
  std::size_t out_channels() const noexcept { return c_out_; }
  Parameter& weight() noexcept { return weight_; }
  Parameter* bias() noexcept { return bias_ ? &*bias_ : nullptr; }

 private:
  std::size_t c_in_, c_out_;
  ConvGeometry geom_;
  Activation act_;
  Parameter weight_;
  std::optional<Parameter> bias_;
  std::optional<Tensor> input_, pre_;
};

/// y = x W + b with W stored [in, out].
class DenseLayer final : public Layer {
 public:
  DenseLayer(std::string name, std::size_t in, std::size_t out, bool bias = true,
             Activation act = Activation::relu);

  LayerKind kind() const override { return LayerKind::dense; }
  Shape output_shape(const Shape& input) const override;
  std::uint64_t macs(const Shape& input) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override;
  void initialize(Rng& rng) override;
  void set_output_activation(Activation act) override { act_ = act; }

  std::size_t in_features() const noexcept { return in_; }
  std::size_t out_features() const noexcept { return out_; }
  Parameter& weight() noexcept { return weight_; }
  Parameter* bias() noexcept { return bias_ ? &*bias_ : nullptr; }

 private:
  std::size_t in_, out_;
  Activation act_;
  Parameter weight_;
  std::optional<Parameter> bias_;
  std::optional<Tensor> input_, pre_;
};

enum class UnitKind { conv, dense };

/// Two chained transforms c_in' -> c_h -> c_out'. For conv units the stride
/// applies to the left transform only; dense units ignore geometry.
class BasicUnit final : public Layer {
 public:
  BasicUnit(std::string name, UnitKind kind, std::size_t c_in, std::size_t c_h,
            std::size_t c_out, std::size_t kernel = 1, std::size_t stride = 1,
            std::size_t padding = 0, bool bias = true,
            Activation hidden = Activation::relu,
            Activation output = Activation::relu);

  LayerKind kind() const override { return LayerKind::basic_unit; }
  Shape output_shape(const Shape& input) const override;
  std::uint64_t macs(const Shape& input) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override;
  void initialize(Rng& rng) override;
  void set_output_activation(Activation act) override { right_->set_output_activation(act); }

  UnitKind unit_kind() const noexcept { return kind_; }
  std::size_t c_in() const noexcept { return c_in_; }
  std::size_t c_h() const noexcept { return c_h_; }
  std::size_t c_out() const noexcept { return c_out_; }
  Layer& left() noexcept { return *left_; }
  Layer& right() noexcept { return *right_; }

 private:
  UnitKind kind_;
  std::size_t c_in_, c_h_, c_out_;
  LayerPtr left_, right_;
};

/// m independent units on contiguous channel (or feature) slices; outputs
/// are concatenated in unit order.
class StackedLayer final : public Layer {
 public:
  StackedLayer(std::string name, std::vector<std::unique_ptr<BasicUnit>> units);

  LayerKind kind() const override;
  Shape output_shape(const Shape& input) const override;
  std::uint64_t macs(const Shape& input) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override;
  void initialize(Rng& rng) override;
  void set_output_activation(Activation act) override;

  std::size_t unit_count() const noexcept { return units_.size(); }
  BasicUnit& unit(std::size_t i) { return *units_.at(i); }
  const std::vector<std::size_t>& input_sizes() const noexcept { return in_sizes_; }
  const std::vector<std::size_t>& output_sizes() const noexcept { return out_sizes_; }

 private:
  std::vector<std::unique_ptr<BasicUnit>> units_;
  std::vector<std::size_t> in_sizes_, out_sizes_;
  bool cached_ = false;
};

/// act(main(x) + shortcut(x)). The last main-path layer has its own output
/// activation forced to identity so the activation follows the sum.
class ResidualBlock final : public Layer {
 public:
  ResidualBlock(std::string name, std::vector<LayerPtr> main, LayerPtr shortcut,
                Activation act = Activation::relu);

  LayerKind kind() const override { return LayerKind::residual_block; }
  Shape output_shape(const Shape& input) const override;
  std::uint64_t macs(const Shape& input) const override;
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;
  std::vector<Parameter*> parameters() override;
  void initialize(Rng& rng) override;
  void set_output_activation(Activation act) override { act_ = act; }

  const std::vector<LayerPtr>& main_path() const noexcept { return main_; }
  Layer* shortcut() noexcept { return shortcut_.get(); }

 private:
  std::vector<LayerPtr> main_;
  LayerPtr shortcut_;
  Activation act_;
  std::optional<Tensor> sum_;
};

class MaxPool2dLayer final : public Layer {
 public:
  MaxPool2dLayer(std::string name, std::size_t window, std::size_t stride);

  LayerKind kind() const override { return LayerKind::pool; }
  Shape output_shape(const Shape& input) const override;
  std::uint64_t macs(const Shape&) const override { return 0; }
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::size_t window_, stride_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

class GlobalAvgPoolLayer final : public Layer {
 public:
  using Layer::Layer;

  LayerKind kind() const override { return LayerKind::global_avg_pool; }
  Shape output_shape(const Shape& input) const override;
  std::uint64_t macs(const Shape&) const override { return 0; }
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Shape input_shape_;
};

class FlattenLayer final : public Layer {
 public:
  using Layer::Layer;

  LayerKind kind() const override { return LayerKind::flatten; }
  Shape output_shape(const Shape& input) const override;
  std::uint64_t macs(const Shape&) const override { return 0; }
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Shape input_shape_;
};

/// Probabilities over the last axis. Training uses cross_entropy on logits;
/// this layer exists for inference graphs.
class SoftmaxLayer final : public Layer {
 public:
  using Layer::Layer;

  LayerKind kind() const override { return LayerKind::softmax_output; }
  Shape output_shape(const Shape& input) const override;
  std::uint64_t macs(const Shape&) const override { return 0; }
  Tensor forward(const Tensor& x) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  std::optional<Tensor> probs_;
};

}  // namespace tissuenet
