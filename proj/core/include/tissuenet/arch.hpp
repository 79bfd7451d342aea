// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tissuenet/layers.hpp"
#include "tissuenet/model.hpp"
#include "tissuenet/random.hpp"

namespace tissuenet {

struct UnitSpec {
  std::size_t c_in = 2;
  std::size_t c_h = 4;
  std::size_t c_out = 2;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  UnitKind kind = UnitKind::conv;

  friend bool operator==(const UnitSpec&, const UnitSpec&) = default;
};

struct StackedLayerSpec {
  std::vector<UnitSpec> units;

  std::size_t m() const noexcept { return units.size(); }
  std::size_t in_width() const noexcept;
  std::size_t out_width() const noexcept;

  friend bool operator==(const StackedLayerSpec&, const StackedLayerSpec&) = default;
};

/// Normal (fully connected across channels) convolution; C_in comes from
/// the shape walk.
struct ConvSpec {
  std::size_t c_out = 1;
  ConvGeometry geom;
  Activation act = Activation::relu;

  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

struct DenseSpec {
  std::size_t out = 1;
  Activation act = Activation::relu;

  friend bool operator==(const DenseSpec&, const DenseSpec&) = default;
};

struct MaxPoolSpec {
  std::size_t window = 2;
  std::size_t stride = 2;

  friend bool operator==(const MaxPoolSpec&, const MaxPoolSpec&) = default;
};

struct GlobalAvgPoolSpec {
  friend bool operator==(const GlobalAvgPoolSpec&, const GlobalAvgPoolSpec&) = default;
};

struct FlattenSpec {
  friend bool operator==(const FlattenSpec&, const FlattenSpec&) = default;
};

struct LayerSpec;

struct ResidualSpec {
  std::vector<LayerSpec> main;
  std::optional<ConvSpec> shortcut;  // absent means identity

  friend bool operator==(const ResidualSpec&, const ResidualSpec&);
};

using LayerBody = std::variant<ConvSpec, StackedLayerSpec, DenseSpec, MaxPoolSpec,
                               GlobalAvgPoolSpec, FlattenSpec, ResidualSpec>;

struct LayerSpec {
  std::string name;
  LayerBody body;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

enum class Replacement {
  none,          // baseline: no stacked layers
  all,           // every eligible layer replaced
  intermediate,  // 'r': first and last stages/blocks stay normal
};

std::string_view to_string(Replacement r) noexcept;
Replacement replacement_from_string(std::string_view text);

struct HybridPolicy {
  std::vector<UnitSpec> pool;
  std::uint64_t seed = 0;

  friend bool operator==(const HybridPolicy&, const HybridPolicy&) = default;
};

struct ArchSpec {
  std::string name;
  Shape input_shape;
  std::vector<LayerSpec> layers;
  Replacement replacement = Replacement::all;
  std::optional<HybridPolicy> hybrid;
  std::uint64_t seed = 0;
  bool bias = true;

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

// Unit stacking ------------------------------------------------------------

/// Uniform stacking: m = c_in / unit.c_in units.
StackedLayerSpec stack_units(const UnitSpec& unit, std::size_t c_in);

/// Hybrid stacking: each position draws uniformly from the pool. A draw that
/// would overshoot c_in is rejected; 100 consecutive rejections raise a
/// policy error. `rng` carries state across layers of one build.
StackedLayerSpec stack_units(const HybridPolicy& policy, std::size_t c_in, Rng& rng);

// Builders -----------------------------------------------------------------

struct MlpOptions {
  Shape input_shape{1, 28, 28};
  std::uint64_t seed = 0;
};

ArchSpec build_plain_mlp(const std::vector<std::size_t>& widths, const MlpOptions& opt = {});

/// A stacked-dense group stands in for two consecutive weight layers
/// w_i -> w_{i+1} -> w_{i+2}; its width stays m * c_out'. Normal dense
/// layers follow each group; the last layer is a linear head.
ArchSpec build_mlp_style(const std::vector<std::size_t>& widths, const UnitSpec& unit,
                         const MlpOptions& opt = {});

enum class Head { global_avg_pool, flatten };

struct CnnOptions {
  std::size_t c_h = 4;
  std::size_t c_in = 2;
  std::size_t c_out = 2;
  Replacement strategy = Replacement::all;
  std::size_t classes = 10;
  Shape input_shape{3, 32, 32};
  std::optional<HybridPolicy> hybrid;
  std::uint64_t seed = 0;
};

/// Known bases: "vgg16-cifar", "vgg19-tiny", "vgg-smoke". Each stage keeps
/// its first conv normal and folds the rest into one stacked layer.
ArchSpec build_vgg_style(const std::string& base, const CnnOptions& opt);

/// Known bases: "resnet18", "resnet34". Inputs up to 64 pixels use the
/// CIFAR stem (3x3, stride 1, no pool); larger inputs the ImageNet stem.
ArchSpec build_resnet_style(const std::string& base, const CnnOptions& opt);

/// conv5x5(8) pool stacked(8) conv3x3(16) pool stacked(16) gap linear.
ArchSpec build_lenet_style(const CnnOptions& opt);

// Shape walk and instantiation --------------------------------------------

/// Per-sample output shape of one layer; errors name the layer.
Shape layer_output_shape(const LayerSpec& layer, const Shape& input);

/// Shapes entering each layer plus the final output shape.
std::vector<Shape> shape_walk(const ArchSpec& arch);

/// Replaces each stacked layer by its dense counterpart: two normal convs
/// (or dense layers) sum(c_in') -> sum(c_h) -> sum(c_out').
ArchSpec densify(const ArchSpec& arch);

/// Builds layers and initializes weights from arch.seed.
Model instantiate(const ArchSpec& arch);
LayerPtr instantiate_layer(const LayerSpec& layer, const Shape& input, bool bias);

}  // namespace tissuenet
