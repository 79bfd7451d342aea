// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include "tissuenet/layers.hpp"

#include <cmath>

#include "tissuenet/error.hpp"

namespace tissuenet {

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::normal_conv: return "normal-conv";
    case LayerKind::stacked_conv: return "stacked-conv";
    case LayerKind::dense: return "dense";
    case LayerKind::stacked_dense: return "stacked-dense";
    case LayerKind::residual_block: return "residual-block";
    case LayerKind::basic_unit: return "basic-unit";
    case LayerKind::pool: return "pool";
    case LayerKind::flatten: return "flatten";
    case LayerKind::global_avg_pool: return "global-avg-pool";
    case LayerKind::softmax_output: return "softmax-output";
  }
  return "unknown";
}

namespace {

bool is_bias(const Parameter& p) {
  const std::string_view n = p.name;
  return n.size() >= 5 && n.substr(n.size() - 5) == ".bias";
}

void kaiming_uniform(Tensor& w, std::size_t fan_in, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (double& v : w.values()) v = rng.uniform(-bound, bound);
}

Tensor apply(Activation act, const Tensor& z) {
  return act == Activation::relu ? relu(z) : z;
}

Tensor apply_backward(Activation act, const Tensor& z, const Tensor& g) {
  return act == Activation::relu ? relu_backward(z, g) : g;
}

void add_into(Tensor& acc, const Tensor& g) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

void check_batch_shape(const Layer& layer, const Tensor& x, const Shape& sample) {
  bool ok = x.rank() == sample.size() + 1;
  for (std::size_t i = 0; ok && i < sample.size(); ++i) ok = x.dim(i + 1) == sample[i];
  if (!ok) {
    fail(ErrorCategory::config, "layer '" + layer.name() + "' expects [N," +
                                    shape_to_string(sample) + "], got " +
                                    shape_to_string(x.shape()));
  }
}

}  // namespace

std::uint64_t Layer::weight_count() {
  std::uint64_t total = 0;
  for (const Parameter* p : parameters()) {
    if (!is_bias(*p)) total += p->value.size();
  }
  return total;
}

void Layer::require_forward(bool cached) const {
  if (!cached) {
    fail(ErrorCategory::state, "backward called before forward on layer '" + name_ + "'");
  }
}

// ---------------------------------------------------------------------------

Conv2dLayer::Conv2dLayer(std::string name, std::size_t c_in, std::size_t c_out,
                         ConvGeometry geom, bool bias, Activation act)
    : Layer(name),
      c_in_(c_in),
      c_out_(c_out),
      geom_(geom),
      act_(act),
      weight_(name + ".weight",
              Shape{c_out, geom.groups ? c_in / geom.groups : 1, geom.kernel, geom.kernel}) {
  geom_.validate();
  if (c_in == 0 || c_out == 0) {
    fail(ErrorCategory::config, "conv layer '" + name + "' has zero channels");
  }
  if (c_in % geom.groups != 0 || c_out % geom.groups != 0) {
    fail(ErrorCategory::config, "conv layer '" + name + "': channels " +
                                    std::to_string(c_in) + "->" + std::to_string(c_out) +
                                    " not divisible by groups " + std::to_string(geom.groups));
  }
  if (bias) bias_.emplace(name + ".bias", Shape{c_out});
}

Shape Conv2dLayer::output_shape(const Shape& input) const {
  if (input.size() != 3 || input[0] != c_in_) {
    fail(ErrorCategory::config, "conv layer '" + name() + "' expects [" +
                                    std::to_string(c_in_) + ",H,W], got [" +
                                    shape_to_string(input) + "]");
  }
  return {c_out_, geom_.out_size(input[1]), geom_.out_size(input[2])};
}

std::uint64_t Conv2dLayer::macs(const Shape& input) const {
  const Shape out = output_shape(input);
  return static_cast<std::uint64_t>(weight_.value.size()) * out[1] * out[2];
}

Tensor Conv2dLayer::forward(const Tensor& x) {
  Tensor z = conv2d(x, weight_.value, bias_ ? &bias_->value : nullptr, geom_);
  input_ = x;
  Tensor y = apply(act_, z);
  pre_ = std::move(z);
  return y;
}

Tensor Conv2dLayer::backward(const Tensor& grad_out) {
  require_forward(input_.has_value());
  const Tensor gz = apply_backward(act_, *pre_, grad_out);
  Conv2dGrads g = conv2d_backward(*input_, weight_.value, bias_.has_value(), gz, geom_);
  add_into(weight_.grad, g.weight);
  if (bias_) add_into(bias_->grad, *g.bias);
  return std::move(g.input);
}

std::vector<Parameter*> Conv2dLayer::parameters() {
  std::vector<Parameter*> ps{&weight_};
  if (bias_) ps.push_back(&*bias_);
  return ps;
}

void Conv2dLayer::initialize(Rng& rng) {
  kaiming_uniform(weight_.value, (c_in_ / geom_.groups) * geom_.kernel * geom_.kernel, rng);
  if (bias_) bias_->value.fill(0.0);
}

// ---------------------------------------------------------------------------

DenseLayer::DenseLayer(std::string name, std::size_t in, std::size_t out, bool bias,
                       Activation act)
    : Layer(name), in_(in), out_(out), act_(act), weight_(name + ".weight", Shape{in, out}) {
  if (bias) bias_.emplace(name + ".bias", Shape{out});
}

Shape DenseLayer::output_shape(const Shape& input) const {
  if (input.size() != 1 || input[0] != in_) {
    fail(ErrorCategory::config, "dense layer '" + name() + "' expects [" +
                                    std::to_string(in_) + "], got [" +
                                    shape_to_string(input) + "]");
  }
  return {out_};
}

std::uint64_t DenseLayer::macs(const Shape& input) const {
  output_shape(input);
  return static_cast<std::uint64_t>(in_) * out_;
}

Tensor DenseLayer::forward(const Tensor& x) {
  check_batch_shape(*this, x, {in_});
  Tensor z = matmul(x, weight_.value);
  if (bias_) {
    const std::size_t n = z.dim(0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < out_; ++j) z[i * out_ + j] += bias_->value[j];
    }
  }
  input_ = x;
  Tensor y = apply(act_, z);
  pre_ = std::move(z);
  return y;
}

Tensor DenseLayer::backward(const Tensor& grad_out) {
  require_forward(input_.has_value());
  const Tensor gz = apply_backward(act_, *pre_, grad_out);
  add_into(weight_.grad, matmul_tn(*input_, gz));
  if (bias_) {
    const std::size_t n = gz.dim(0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < out_; ++j) bias_->grad[j] += gz[i * out_ + j];
    }
  }
  return matmul_nt(gz, weight_.value);
}

std::vector<Parameter*> DenseLayer::parameters() {
  std::vector<Parameter*> ps{&weight_};
  if (bias_) ps.push_back(&*bias_);
  return ps;
}

void DenseLayer::initialize(Rng& rng) {
  kaiming_uniform(weight_.value, in_, rng);
  if (bias_) bias_->value.fill(0.0);
}

// ---------------------------------------------------------------------------

BasicUnit::BasicUnit(std::string name, UnitKind kind, std::size_t c_in, std::size_t c_h,
                     std::size_t c_out, std::size_t kernel, std::size_t stride,
                     std::size_t padding, bool bias, Activation hidden, Activation output)
    : Layer(name), kind_(kind), c_in_(c_in), c_h_(c_h), c_out_(c_out) {
  if (c_in == 0 || c_h == 0 || c_out == 0) {
    fail(ErrorCategory::config, "unit '" + name + "' has a zero channel count");
  }
  if (kind == UnitKind::conv) {
    left_ = std::make_unique<Conv2dLayer>(name + ".left", c_in, c_h,
                                          ConvGeometry{kernel, stride, padding, 1}, bias, hidden);
    right_ = std::make_unique<Conv2dLayer>(name + ".right", c_h, c_out,
                                           ConvGeometry{kernel, 1, padding, 1}, bias, output);
  } else {
    left_ = std::make_unique<DenseLayer>(name + ".left", c_in, c_h, bias, hidden);
    right_ = std::make_unique<DenseLayer>(name + ".right", c_h, c_out, bias, output);
  }
}

Shape BasicUnit::output_shape(const Shape& input) const {
  return right_->output_shape(left_->output_shape(input));
}

std::uint64_t BasicUnit::macs(const Shape& input) const {
  return left_->macs(input) + right_->macs(left_->output_shape(input));
}

Tensor BasicUnit::forward(const Tensor& x) { return right_->forward(left_->forward(x)); }

Tensor BasicUnit::backward(const Tensor& grad_out) {
  return left_->backward(right_->backward(grad_out));
}

std::vector<Parameter*> BasicUnit::parameters() {
  std::vector<Parameter*> ps = left_->parameters();
  for (Parameter* p : right_->parameters()) ps.push_back(p);
  return ps;
}

void BasicUnit::initialize(Rng& rng) {
  left_->initialize(rng);
  right_->initialize(rng);
}

// ---------------------------------------------------------------------------

StackedLayer::StackedLayer(std::string name, std::vector<std::unique_ptr<BasicUnit>> units)
    : Layer(std::move(name)), units_(std::move(units)) {
  if (units_.empty()) fail(ErrorCategory::config, "stacked layer '" + this->name() + "' has no units");
  const UnitKind k = units_.front()->unit_kind();
  for (const auto& u : units_) {
    if (u->unit_kind() != k) {
      fail(ErrorCategory::config, "stacked layer '" + this->name() + "' mixes conv and dense units");
    }
    in_sizes_.push_back(u->c_in());
    out_sizes_.push_back(u->c_out());
  }
}

LayerKind StackedLayer::kind() const {
  return units_.front()->unit_kind() == UnitKind::conv ? LayerKind::stacked_conv
                                                       : LayerKind::stacked_dense;
}

Shape StackedLayer::output_shape(const Shape& input) const {
  std::size_t total_in = 0;
  for (std::size_t s : in_sizes_) total_in += s;
  if (input.empty() || input[0] != total_in) {
    fail(ErrorCategory::partition, "stacked layer '" + name() + "' units consume " +
                                       std::to_string(total_in) + " channels, input is [" +
                                       shape_to_string(input) + "]");
  }
  Shape out;
  std::size_t channels = 0;
  for (const auto& u : units_) {
    Shape piece = input;
    piece[0] = u->c_in();
    Shape o = u->output_shape(piece);
    if (!out.empty()) {
      for (std::size_t a = 1; a < o.size(); ++a) {
        if (o[a] != out[a]) {
          fail(ErrorCategory::config, "units of '" + name() + "' disagree on output size");
        }
      }
    }
    out = o;
    channels += o[0];
  }
  out[0] = channels;
  return out;
}

std::uint64_t StackedLayer::macs(const Shape& input) const {
  std::uint64_t total = 0;
  for (const auto& u : units_) {
    Shape piece = input;
    piece[0] = u->c_in();
    total += u->macs(piece);
  }
  return total;
}

Tensor StackedLayer::forward(const Tensor& x) {
  std::vector<Tensor> pieces = channel_split(x, in_sizes_);
  for (std::size_t i = 0; i < units_.size(); ++i) pieces[i] = units_[i]->forward(pieces[i]);
  cached_ = true;
  return channel_concat(pieces);
}

Tensor StackedLayer::backward(const Tensor& grad_out) {
  require_forward(cached_);
  std::vector<Tensor> pieces = channel_split(grad_out, out_sizes_);
  for (std::size_t i = 0; i < units_.size(); ++i) pieces[i] = units_[i]->backward(pieces[i]);
  return channel_concat(pieces);
}

std::vector<Parameter*> StackedLayer::parameters() {
  std::vector<Parameter*> ps;
  for (auto& u : units_) {
    for (Parameter* p : u->parameters()) ps.push_back(p);
  }
  return ps;
}

void StackedLayer::initialize(Rng& rng) {
  for (auto& u : units_) u->initialize(rng);
}

void StackedLayer::set_output_activation(Activation act) {
  for (auto& u : units_) u->set_output_activation(act);
}

// ---------------------------------------------------------------------------

ResidualBlock::ResidualBlock(std::string name, std::vector<LayerPtr> main, LayerPtr shortcut,
                             Activation act)
    : Layer(std::move(name)), main_(std::move(main)), shortcut_(std::move(shortcut)), act_(act) {
  if (main_.empty()) fail(ErrorCategory::config, "residual block '" + this->name() + "' has an empty main path");
  main_.back()->set_output_activation(Activation::identity);
  if (shortcut_) shortcut_->set_output_activation(Activation::identity);
}

Shape ResidualBlock::output_shape(const Shape& input) const {
  Shape s = input;
  for (const auto& l : main_) s = l->output_shape(s);
  const Shape skip = shortcut_ ? shortcut_->output_shape(input) : input;
  if (s != skip) {
    fail(ErrorCategory::config, "residual block '" + name() + "': main path gives [" +
                                    shape_to_string(s) + "] but shortcut gives [" +
                                    shape_to_string(skip) + "]");
  }
  return s;
}

std::uint64_t ResidualBlock::macs(const Shape& input) const {
  std::uint64_t total = 0;
  Shape s = input;
  for (const auto& l : main_) {
    total += l->macs(s);
    s = l->output_shape(s);
  }
  if (shortcut_) total += shortcut_->macs(input);
  return total;
}

Tensor ResidualBlock::forward(const Tensor& x) {
  Tensor h = x;
  for (auto& l : main_) h = l->forward(h);
  const Tensor skip = shortcut_ ? shortcut_->forward(x) : x;
  if (h.shape() != skip.shape()) {
    fail(ErrorCategory::config, "residual block '" + name() + "' shape mismatch at run time");
  }
  add_into(h, skip);
  Tensor y = apply(act_, h);
  sum_ = std::move(h);
  return y;
}

Tensor ResidualBlock::backward(const Tensor& grad_out) {
  require_forward(sum_.has_value());
  const Tensor gz = apply_backward(act_, *sum_, grad_out);
  Tensor g = gz;
  for (auto it = main_.rbegin(); it != main_.rend(); ++it) g = (*it)->backward(g);
  if (shortcut_) {
    add_into(g, shortcut_->backward(gz));
  } else {
    add_into(g, gz);
  }
  return g;
}

std::vector<Parameter*> ResidualBlock::parameters() {
  std::vector<Parameter*> ps;
  for (auto& l : main_) {
    for (Parameter* p : l->parameters()) ps.push_back(p);
  }
  if (shortcut_) {
    for (Parameter* p : shortcut_->parameters()) ps.push_back(p);
  }
  return ps;
}

void ResidualBlock::initialize(Rng& rng) {
  for (auto& l : main_) l->initialize(rng);
  if (shortcut_) shortcut_->initialize(rng);
}

// ---------------------------------------------------------------------------

MaxPool2dLayer::MaxPool2dLayer(std::string name, std::size_t window, std::size_t stride)
    : Layer(std::move(name)), window_(window), stride_(stride) {
  ConvGeometry{window, stride, 0, 1}.validate();
}

Shape MaxPool2dLayer::output_shape(const Shape& input) const {
  if (input.size() != 3) {
    fail(ErrorCategory::config, "pool layer '" + name() + "' expects [C,H,W], got [" +
                                    shape_to_string(input) + "]");
  }
  const ConvGeometry g{window_, stride_, 0, 1};
  return {input[0], g.out_size(input[1]), g.out_size(input[2])};
}

Tensor MaxPool2dLayer::forward(const Tensor& x) {
  MaxPoolResult r = max_pool2d(x, window_, stride_);
  input_shape_ = x.shape();
  argmax_ = std::move(r.argmax);
  return std::move(r.output);
}

Tensor MaxPool2dLayer::backward(const Tensor& grad_out) {
  require_forward(!input_shape_.empty());
  return max_pool2d_backward(input_shape_, argmax_, grad_out);
}

Shape GlobalAvgPoolLayer::output_shape(const Shape& input) const {
  if (input.size() != 3) {
    fail(ErrorCategory::config, "global average pool '" + name() + "' expects [C,H,W], got [" +
                                    shape_to_string(input) + "]");
  }
  return {input[0]};
}

Tensor GlobalAvgPoolLayer::forward(const Tensor& x) {
  input_shape_ = x.shape();
  return global_avg_pool(x);
}

Tensor GlobalAvgPoolLayer::backward(const Tensor& grad_out) {
  require_forward(!input_shape_.empty());
  return global_avg_pool_backward(input_shape_, grad_out);
}

Shape FlattenLayer::output_shape(const Shape& input) const { return {shape_numel(input)}; }

Tensor FlattenLayer::forward(const Tensor& x) {
  input_shape_ = x.shape();
  return x.reshaped({x.dim(0), x.size() / x.dim(0)});
}

Tensor FlattenLayer::backward(const Tensor& grad_out) {
  require_forward(!input_shape_.empty());
  return grad_out.reshaped(input_shape_);
}

Shape SoftmaxLayer::output_shape(const Shape& input) const {
  if (input.size() != 1) {
    fail(ErrorCategory::config, "softmax '" + name() + "' expects [K], got [" +
                                    shape_to_string(input) + "]");
  }
  return input;
}

Tensor SoftmaxLayer::forward(const Tensor& x) {
  probs_ = softmax(x);
  return *probs_;
}

Tensor SoftmaxLayer::backward(const Tensor& grad_out) {
  require_forward(probs_.has_value());
  const Tensor& p = *probs_;
  const std::size_t n = p.dim(0), k = p.dim(1);
  Tensor g(p.shape());
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < k; ++j) dot += grad_out[i * k + j] * p[i * k + j];
    for (std::size_t j = 0; j < k; ++j) {
      g[i * k + j] = p[i * k + j] * (grad_out[i * k + j] - dot);
    }
  }
  return g;
}

}  // namespace tissuenet
