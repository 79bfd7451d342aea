// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include "tissuenet/arch.hpp"

#include <array>

#include "tissuenet/error.hpp"

namespace tissuenet {

std::size_t StackedLayerSpec::in_width() const noexcept {
  std::size_t w = 0;
  for (const UnitSpec& u : units) w += u.c_in;
  return w;
}

std::size_t StackedLayerSpec::out_width() const noexcept {
  std::size_t w = 0;
  for (const UnitSpec& u : units) w += u.c_out;
  return w;
}

bool operator==(const ResidualSpec& a, const ResidualSpec& b) {
  return a.main == b.main && a.shortcut == b.shortcut;
}

std::string_view to_string(Replacement r) noexcept {
  switch (r) {
    case Replacement::none: return "none";
    case Replacement::all: return "all";
    case Replacement::intermediate: return "r";
  }
  return "unknown";
}

Replacement replacement_from_string(std::string_view text) {
  if (text == "none") return Replacement::none;
  if (text == "all") return Replacement::all;
  if (text == "r" || text == "intermediate") return Replacement::intermediate;
  fail(ErrorCategory::config, "unknown replacement strategy '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------

namespace {

void check_unit(const UnitSpec& u) {
  if (u.c_in == 0 || u.c_h == 0 || u.c_out == 0 || u.kernel == 0 || u.stride == 0) {
    fail(ErrorCategory::config, "unit counts, kernel and stride must be >= 1");
  }
}

}  // namespace

StackedLayerSpec stack_units(const UnitSpec& unit, std::size_t c_in) {
  check_unit(unit);
  if (c_in % unit.c_in != 0) {
    fail(ErrorCategory::partition, "c_in " + std::to_string(c_in) +
                                       " is not divisible by unit c_in' " +
                                       std::to_string(unit.c_in));
  }
  return StackedLayerSpec{std::vector<UnitSpec>(c_in / unit.c_in, unit)};
}

StackedLayerSpec stack_units(const HybridPolicy& policy, std::size_t c_in, Rng& rng) {
  if (policy.pool.empty()) fail(ErrorCategory::policy, "hybrid pool is empty");
  for (const UnitSpec& u : policy.pool) check_unit(u);
  constexpr int kMaxRetries = 100;
  StackedLayerSpec spec;
  std::size_t filled = 0;
  int misses = 0;
  while (filled < c_in) {
    const UnitSpec& pick = policy.pool[rng.below(policy.pool.size())];
    if (filled + pick.c_in <= c_in) {
      spec.units.push_back(pick);
      filled += pick.c_in;
      misses = 0;
    } else if (++misses >= kMaxRetries) {
      fail(ErrorCategory::policy, "hybrid stacking stuck at " + std::to_string(filled) + " of " +
                                      std::to_string(c_in) + " channels after " +
                                      std::to_string(kMaxRetries) + " draws");
    }
  }
  return spec;
}

// ---------------------------------------------------------------------------

namespace {

LayerSpec flatten(std::string name) { return {std::move(name), FlattenSpec{}}; }
LayerSpec gap(std::string name) { return {std::move(name), GlobalAvgPoolSpec{}}; }
LayerSpec pool(std::string name) { return {std::move(name), MaxPoolSpec{2, 2}}; }

LayerSpec dense(std::string name, std::size_t out, bool head) {
  return {std::move(name), DenseSpec{out, head ? Activation::identity : Activation::relu}};
}

LayerSpec conv(std::string name, std::size_t c_out, std::size_t d, std::size_t stride,
               std::size_t pad) {
  return {std::move(name), ConvSpec{c_out, ConvGeometry{d, stride, pad, 1}, Activation::relu}};
}

// Stacks either uniformly or from the hybrid pool; pool entries inherit the
// geometry of `unit`.
StackedLayerSpec stack_for(const UnitSpec& unit, std::size_t c_in,
                           const std::optional<HybridPolicy>& hybrid, Rng& rng) {
  if (!hybrid) return stack_units(unit, c_in);
  HybridPolicy p = *hybrid;
  for (UnitSpec& u : p.pool) {
    u.kernel = unit.kernel;
    u.stride = unit.stride;
    u.padding = unit.padding;
    u.kind = unit.kind;
  }
  return stack_units(p, c_in, rng);
}

}  // namespace

ArchSpec build_plain_mlp(const std::vector<std::size_t>& widths, const MlpOptions& opt) {
  if (widths.size() < 2) fail(ErrorCategory::config, "an MLP needs at least two widths");
  ArchSpec a;
  a.name = "mlp";
  a.input_shape = opt.input_shape;
  a.replacement = Replacement::none;
  a.seed = opt.seed;
  if (shape_numel(opt.input_shape) != widths.front()) {
    fail(ErrorCategory::config, "input " + shape_to_string(opt.input_shape) +
                                    " does not flatten to width " + std::to_string(widths[0]));
  }
  if (opt.input_shape.size() != 1) a.layers.push_back(flatten("flatten"));
  for (std::size_t i = 1; i < widths.size(); ++i) {
    a.layers.push_back(dense("fc" + std::to_string(i), widths[i], i + 1 == widths.size()));
  }
  return a;
}

ArchSpec build_mlp_style(const std::vector<std::size_t>& widths, const UnitSpec& unit,
                         const MlpOptions& opt) {
  ArchSpec a = build_plain_mlp(widths, opt);
  a.name = "mlp-tissuenet";
  a.replacement = Replacement::all;
  a.layers.resize(opt.input_shape.size() != 1 ? 1 : 0);
  UnitSpec u = unit;
  u.kind = UnitKind::dense;
  u.kernel = 1;
  u.stride = 1;
  u.padding = 0;
  const std::size_t last = widths.size() - 1;
  std::size_t width = widths[0];
  std::size_t i = 0;
  bool after_stack = false;
  int stacks = 0, normals = 0;
  while (i < last) {
    if (!after_stack && last - i >= 3) {
      StackedLayerSpec s = stack_units(u, width);
      width = s.out_width();
      a.layers.push_back({"stack" + std::to_string(++stacks), std::move(s)});
      i += 2;
      after_stack = true;
    } else {
      width = widths[i + 1];
      a.layers.push_back(dense("fc" + std::to_string(++normals), width, i + 1 == last));
      i += 1;
      after_stack = false;
    }
  }
  return a;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kPool = 0;

std::vector<std::size_t> vgg_plan(const std::string& base) {
  if (base == "vgg16-cifar") {
    return {64, 64, kPool, 128, 128, kPool, 256, 256, 256, kPool,
            512, 512, 512, kPool, 512, 512, 512, kPool};
  }
  if (base == "vgg19-tiny") {
    return {64, 64, kPool, 128, 128, kPool, 256, 256, 256, 256, kPool,
            512, 512, 512, 512, kPool, 512, 512, 512, 512, kPool};
  }
  if (base == "vgg-smoke") return {16, 16, kPool, 32, 32, kPool};
  fail(ErrorCategory::config, "unknown VGG base '" + base + "'");
}

}  // namespace

ArchSpec build_vgg_style(const std::string& base, const CnnOptions& opt) {
  const std::vector<std::size_t> plan = vgg_plan(base);
  std::vector<std::vector<std::size_t>> stages(1);
  for (std::size_t w : plan) {
    if (w == kPool) {
      stages.emplace_back();
    } else {
      stages.back().push_back(w);
    }
  }
  stages.pop_back();

  ArchSpec a;
  a.name = base + "-tissuenet";
  a.input_shape = opt.input_shape;
  a.replacement = opt.strategy;
  a.hybrid = opt.hybrid;
  a.seed = opt.seed;
  if (opt.strategy == Replacement::none) a.name = base;
  Rng rng(opt.hybrid ? opt.hybrid->seed : 0);
  const UnitSpec unit{opt.c_in, opt.c_h, opt.c_out, 3, 1, 1, UnitKind::conv};

  for (std::size_t s = 0; s < stages.size(); ++s) {
    const std::string tag = std::to_string(s + 1);
    const bool boundary = s == 0 || s + 1 == stages.size();
    const bool replace = opt.strategy == Replacement::all ||
                         (opt.strategy == Replacement::intermediate && !boundary);
    const std::vector<std::size_t>& widths = stages[s];
    a.layers.push_back(conv("conv" + tag + "_1", widths[0], 3, 1, 1));
    if (replace && widths.size() > 1) {
      a.layers.push_back({"stack" + tag, stack_for(unit, widths[0], opt.hybrid, rng)});
    } else {
      for (std::size_t j = 1; j < widths.size(); ++j) {
        a.layers.push_back(conv("conv" + tag + "_" + std::to_string(j + 1), widths[j], 3, 1, 1));
      }
    }
    a.layers.push_back(pool("pool" + tag));
  }
  const bool flat = base == "vgg-smoke";
  a.layers.push_back(flat ? flatten("flatten") : gap("gap"));
  a.layers.push_back(dense("fc", opt.classes, true));
  return a;
}

// ---------------------------------------------------------------------------

ArchSpec build_resnet_style(const std::string& base, const CnnOptions& opt) {
  std::array<std::size_t, 4> blocks{};
  if (base == "resnet18") {
    blocks = {2, 2, 2, 2};
  } else if (base == "resnet34") {
    blocks = {3, 4, 6, 3};
  } else {
    fail(ErrorCategory::config, "unknown ResNet base '" + base + "'");
  }
  if (opt.input_shape.size() != 3) {
    fail(ErrorCategory::config, "ResNet input must be [C,H,W]");
  }
  ArchSpec a;
  a.name = opt.strategy == Replacement::none ? base : base + "-tissuenet";
  a.input_shape = opt.input_shape;
  a.replacement = opt.strategy;
  a.hybrid = opt.hybrid;
  a.seed = opt.seed;
  Rng rng(opt.hybrid ? opt.hybrid->seed : 0);

  const bool cifar_stem = opt.input_shape[1] <= 64;
  if (cifar_stem) {
    a.layers.push_back(conv("stem", 64, 3, 1, 1));
  } else {
    a.layers.push_back(conv("stem", 64, 7, 2, 3));
    a.layers.push_back({"stem_pool", MaxPoolSpec{2, 2}});
  }

  const std::array<std::size_t, 4> widths{64, 128, 256, 512};
  std::size_t total = 0;
  for (std::size_t b : blocks) total += b;
  std::size_t c_prev = 64;
  std::size_t index = 0;
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t b = 0; b < blocks[s]; ++b, ++index) {
      const std::size_t c = widths[s];
      const std::size_t stride = (s > 0 && b == 0) ? 2 : 1;
      const bool boundary = index == 0 || index + 1 == total;
      const bool replace = opt.strategy == Replacement::all ||
                           (opt.strategy == Replacement::intermediate && !boundary);
      const std::string tag = std::to_string(s + 1) + "_" + std::to_string(b + 1);
      ResidualSpec r;
      if (replace) {
        if ((c * opt.c_in) % c_prev != 0) {
          fail(ErrorCategory::partition, "block " + tag + ": width ratio " +
                                             std::to_string(c) + "/" + std::to_string(c_prev) +
                                             " incompatible with c_in' " +
                                             std::to_string(opt.c_in));
        }
        UnitSpec unit{opt.c_in, opt.c_h, opt.c_in * c / c_prev, 3, stride, 1, UnitKind::conv};
        if (opt.hybrid) {
          HybridPolicy scaled = *opt.hybrid;
          for (UnitSpec& u : scaled.pool) u.c_out = u.c_in * c / c_prev;
          r.main.push_back({"stack" + tag, stack_for(unit, c_prev, scaled, rng)});
        } else {
          r.main.push_back({"stack" + tag, stack_units(unit, c_prev)});
        }
      } else {
        r.main.push_back(conv("conv" + tag + "a", c, 3, stride, 1));
        r.main.push_back(conv("conv" + tag + "b", c, 3, 1, 1));
      }
      if (stride != 1 || c != c_prev) {
        r.shortcut = ConvSpec{c, ConvGeometry{1, stride, 0, 1}, Activation::identity};
      }
      a.layers.push_back({"block" + tag, std::move(r)});
      c_prev = c;
    }
  }
  a.layers.push_back(gap("gap"));
  a.layers.push_back(dense("fc", opt.classes, true));
  return a;
}

ArchSpec build_lenet_style(const CnnOptions& opt) {
  ArchSpec a;
  a.name = opt.strategy == Replacement::none ? "lenet" : "lenet-tissuenet";
  a.input_shape = opt.input_shape;
  a.replacement = opt.strategy;
  a.hybrid = opt.hybrid;
  a.seed = opt.seed;
  Rng rng(opt.hybrid ? opt.hybrid->seed : 0);
  const UnitSpec unit{opt.c_in, opt.c_h, opt.c_out, 3, 1, 1, UnitKind::conv};
  const bool replace = opt.strategy != Replacement::none;

  a.layers.push_back(conv("conv1", 8, 5, 1, 2));
  a.layers.push_back(pool("pool1"));
  if (replace) a.layers.push_back({"stack1", stack_for(unit, 8, opt.hybrid, rng)});
  a.layers.push_back(conv("conv2", 16, 3, 1, 0));
  a.layers.push_back(pool("pool2"));
  if (replace) a.layers.push_back({"stack2", stack_for(unit, 16, opt.hybrid, rng)});
  a.layers.push_back(gap("gap"));
  a.layers.push_back(dense("fc", opt.classes, true));
  return a;
}

// ---------------------------------------------------------------------------

LayerPtr instantiate_layer(const LayerSpec& layer, const Shape& input, bool bias) {
  const std::string& name = layer.name;
  return std::visit(
      [&](const auto& body) -> LayerPtr {
        using T = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<T, ConvSpec>) {
          if (input.size() != 3) {
            fail(ErrorCategory::config, "conv layer '" + name + "' needs [C,H,W] input, got [" +
                                            shape_to_string(input) + "]");
          }
          return std::make_unique<Conv2dLayer>(name, input[0], body.c_out, body.geom, bias,
                                               body.act);
        } else if constexpr (std::is_same_v<T, StackedLayerSpec>) {
          std::vector<std::unique_ptr<BasicUnit>> units;
          units.reserve(body.units.size());
          for (std::size_t i = 0; i < body.units.size(); ++i) {
            const UnitSpec& u = body.units[i];
            units.push_back(std::make_unique<BasicUnit>(name + ".unit" + std::to_string(i), u.kind,
                                                        u.c_in, u.c_h, u.c_out, u.kernel, u.stride,
                                                        u.padding, bias));
          }
          return std::make_unique<StackedLayer>(name, std::move(units));
        } else if constexpr (std::is_same_v<T, DenseSpec>) {
          if (input.size() != 1) {
            fail(ErrorCategory::config, "dense layer '" + name + "' needs flat input, got [" +
                                            shape_to_string(input) + "]");
          }
          return std::make_unique<DenseLayer>(name, input[0], body.out, bias, body.act);
        } else if constexpr (std::is_same_v<T, MaxPoolSpec>) {
          return std::make_unique<MaxPool2dLayer>(name, body.window, body.stride);
        } else if constexpr (std::is_same_v<T, GlobalAvgPoolSpec>) {
          return std::make_unique<GlobalAvgPoolLayer>(name);
        } else if constexpr (std::is_same_v<T, FlattenSpec>) {
          return std::make_unique<FlattenLayer>(name);
        } else {
          std::vector<LayerPtr> main;
          Shape s = input;
          for (const LayerSpec& inner : body.main) {
            main.push_back(instantiate_layer(inner, s, bias));
            s = main.back()->output_shape(s);
          }
          LayerPtr shortcut;
          if (body.shortcut) {
            shortcut = std::make_unique<Conv2dLayer>(name + ".shortcut", input.at(0),
                                                     body.shortcut->c_out, body.shortcut->geom,
                                                     bias, Activation::identity);
          }
          return std::make_unique<ResidualBlock>(name, std::move(main), std::move(shortcut));
        }
      },
      layer.body);
}

Shape layer_output_shape(const LayerSpec& layer, const Shape& input) {
  try {
    return instantiate_layer(layer, input, false)->output_shape(input);
  } catch (const Error& e) {
    throw Error(e.category(), "layer '" + layer.name + "': " + e.detail());
  }
}

std::vector<Shape> shape_walk(const ArchSpec& arch) {
  std::vector<Shape> shapes{arch.input_shape};
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    try {
      shapes.push_back(layer_output_shape(arch.layers[i], shapes.back()));
    } catch (const Error& e) {
      throw Error(e.category(), "shape walk failed at layer " + std::to_string(i) + ": " +
                                    e.detail());
    }
  }
  return shapes;
}

namespace {

std::vector<LayerSpec> densify_layers(const std::vector<LayerSpec>& layers) {
  std::vector<LayerSpec> out;
  for (const LayerSpec& l : layers) {
    if (const auto* s = std::get_if<StackedLayerSpec>(&l.body)) {
      const UnitSpec& u0 = s->units.front();
      std::size_t hidden = 0;
      for (const UnitSpec& u : s->units) {
        if (u.kind != u0.kind || u.kernel != u0.kernel || u.stride != u0.stride ||
            u.padding != u0.padding) {
          fail(ErrorCategory::config, "cannot densify '" + l.name + "': units differ in geometry");
        }
        hidden += u.c_h;
      }
      if (u0.kind == UnitKind::dense) {
        out.push_back(dense(l.name + ".left", hidden, false));
        out.push_back(dense(l.name + ".right", s->out_width(), false));
      } else {
        out.push_back({l.name + ".left",
                       ConvSpec{hidden, ConvGeometry{u0.kernel, u0.stride, u0.padding, 1}}});
        out.push_back({l.name + ".right",
                       ConvSpec{s->out_width(), ConvGeometry{u0.kernel, 1, u0.padding, 1}}});
      }
    } else if (const auto* r = std::get_if<ResidualSpec>(&l.body)) {
      ResidualSpec copy = *r;
      copy.main = densify_layers(r->main);
      out.push_back({l.name, std::move(copy)});
    } else {
      out.push_back(l);
    }
  }
  return out;
}

}  // namespace

ArchSpec densify(const ArchSpec& arch) {
  ArchSpec a = arch;
  a.name = arch.name + "-dense";
  a.replacement = Replacement::none;
  a.hybrid.reset();
  a.layers = densify_layers(arch.layers);
  return a;
}

Model instantiate(const ArchSpec& arch) {
  std::vector<LayerPtr> layers;
  Shape s = arch.input_shape;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    try {
      layers.push_back(instantiate_layer(arch.layers[i], s, arch.bias));
      s = layers.back()->output_shape(s);
    } catch (const Error& e) {
      throw Error(e.category(), "shape walk failed at layer " + std::to_string(i) + " ('" +
                                    arch.layers[i].name + "'): " + e.detail());
    }
  }
  Model model(arch.input_shape, std::move(layers));
  Rng rng(arch.seed);
  model.initialize(rng);
  return model;
}

}  // namespace tissuenet
