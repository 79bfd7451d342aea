// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include <gtest/gtest.h>

#include <filesystem>

#include "oracles.hpp"
#include "tissuenet/arch.hpp"
#include "tissuenet/arch_io.hpp"
#include "tissuenet/cost.hpp"
#include "tissuenet/error.hpp"
#include "tissuenet/loss.hpp"
#include "tissuenet/optim.hpp"

namespace tn = tissuenet;
using tn::UnitSpec;

namespace {

tn::ErrorCategory category_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const tn::Error& e) {
    return e.category();
  }
  ADD_FAILURE() << "expected tissuenet::Error";
  return tn::ErrorCategory::numeric;
}

std::size_t stacked_count(const std::vector<tn::LayerSpec>& layers) {
  std::size_t n = 0;
  for (const auto& l : layers) {
    if (std::holds_alternative<tn::StackedLayerSpec>(l.body)) ++n;
    if (const auto* r = std::get_if<tn::ResidualSpec>(&l.body)) n += stacked_count(r->main);
  }
  return n;
}

tn::CnnOptions cnn(tn::Replacement strategy, std::size_t classes = 10, tn::Shape input = {3, 32, 32}) {
  tn::CnnOptions o;
  o.strategy = strategy;
  o.classes = classes;
  o.input_shape = std::move(input);
  return o;
}

}  // namespace

TEST(StackUnits, UniformCount) {
  EXPECT_EQ(tn::stack_units(UnitSpec{2, 4, 2}, 16).m(), 8u);
  const auto single = tn::stack_units(UnitSpec{16, 4, 16}, 16);
  EXPECT_EQ(single.m(), 1u);
  EXPECT_EQ(single.units[0].c_in, 16u);
  EXPECT_EQ(category_of([] { tn::stack_units(UnitSpec{3, 4, 3}, 16); }), tn::ErrorCategory::partition);
}

TEST(StackUnits, HybridReplaysAndFillsExactly) {
  const tn::HybridPolicy policy{{UnitSpec{2, 2, 2}, UnitSpec{2, 4, 2}, UnitSpec{4, 4, 4}}, 99};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    tn::Rng a(seed), b(seed);
    const auto first = tn::stack_units(policy, 8, a);
    const auto second = tn::stack_units(policy, 8, b);
    EXPECT_EQ(first, second);
    EXPECT_EQ(first.in_width(), 8u);
  }
  tn::Rng rng(1);
  EXPECT_EQ(category_of([&] { tn::stack_units(tn::HybridPolicy{{UnitSpec{3, 2, 3}}, 0}, 8, rng); }),
            tn::ErrorCategory::policy);
}

TEST(MlpBuilder, TissueNetCostsAndOutputShape) {
  const tn::ArchSpec arch = tn::build_mlp_style({784, 500, 300, 10}, UnitSpec{2, 4, 2});
  const tn::CostReport r = tn::analyze(arch);
  EXPECT_LE(r.total_params, 20000u);
  EXPECT_LE(r.flops(tn::FlopConvention::two_mac), 30000.0);
  tn::Model model = tn::instantiate(arch);
  const tn::Tensor y = model.forward(tn::oracle::random_tensor({5, 1, 28, 28}, 1, 0.0, 1.0));
  EXPECT_EQ(y.shape(), (tn::Shape{5, 10}));
  EXPECT_TRUE(tn::cross_check(arch, model).pass);
}

TEST(MlpBuilder, SingleWideUnitCollapsesToPlainMlp) {
  const tn::ArchSpec stacked = tn::build_mlp_style({784, 500, 300, 10}, UnitSpec{784, 500, 300});
  const tn::ArchSpec plain = tn::build_plain_mlp({784, 500, 300, 10});
  const auto a = tn::analyze(stacked), b = tn::analyze(plain);
  EXPECT_EQ(a.total_params, b.total_params);
  EXPECT_EQ(a.total_macs, b.total_macs);
  EXPECT_EQ(b.total_params, 784u * 500 + 500 * 300 + 300 * 10);
}

TEST(VggBuilder, Cifar16ShapesAndCrossCheck) {
  const tn::ArchSpec arch = tn::build_vgg_style("vgg16-cifar", cnn(tn::Replacement::all));
  const auto shapes = tn::shape_walk(arch);
  EXPECT_EQ(shapes.back(), (tn::Shape{10}));
  tn::Model model = tn::instantiate(arch);
  EXPECT_TRUE(tn::cross_check(arch, model).pass);
  EXPECT_EQ(stacked_count(arch.layers), 5u);
}

TEST(VggBuilder, SingleUnitStackEqualsDensified) {
  // c_in' equal to the stage width gives m = 1 in every stacked layer, and
  // the stacked layer then is exactly its dense two-conv counterpart.
  tn::CnnOptions o = cnn(tn::Replacement::all);
  o.c_in = o.c_out = 16;
  const tn::ArchSpec arch = tn::build_vgg_style("vgg-smoke", o);
  // vgg-smoke stages are 16 and 32 wide; only the first stack has m = 1.
  const auto& first = std::get<tn::StackedLayerSpec>(arch.layers[1].body);
  EXPECT_EQ(first.m(), 1u);
  const auto a = tn::analyze(arch);
  const auto b = tn::analyze(tn::densify(arch));
  EXPECT_EQ(a.layers[1].params, b.layers[1].params + b.layers[2].params);
  EXPECT_EQ(a.layers[1].macs, b.layers[1].macs + b.layers[2].macs);
}

TEST(VggBuilder, TrainsOneStepOnRandomData) {
  tn::ArchSpec arch = tn::build_vgg_style("vgg16-cifar", cnn(tn::Replacement::all));
  tn::Model model = tn::instantiate(arch);
  const tn::Tensor x = tn::oracle::random_tensor({2, 3, 32, 32}, 2);
  const std::vector<std::uint8_t> labels{1, 7};
  const auto loss0 = tn::cross_entropy(model.forward(x), labels);
  model.zero_grad();
  model.backward(loss0.grad);
  tn::OptimizerState state;
  tn::sgd_momentum_step(model.parameters(), state, 0.01, 0.9, 0.0);
  const auto loss1 = tn::cross_entropy(model.forward(x), labels);
  EXPECT_TRUE(std::isfinite(loss1.loss));
  EXPECT_NE(loss0.loss, loss1.loss);
}

TEST(ResnetBuilder, IntermediateStrategyReplacesFewerLayers) {
  for (const char* base : {"resnet18", "resnet34"}) {
    const auto all = tn::build_resnet_style(base, cnn(tn::Replacement::all, 100));
    const auto r = tn::build_resnet_style(base, cnn(tn::Replacement::intermediate, 100));
    EXPECT_LT(stacked_count(r.layers), stacked_count(all.layers)) << base;
    const auto ca = tn::analyze(all), cr = tn::analyze(r);
    EXPECT_GT(cr.total_params, ca.total_params) << base;
    EXPECT_GT(cr.total_macs, ca.total_macs) << base;
  }
}

TEST(ResnetBuilder, ShapesReconcileAt32And224) {
  for (std::size_t side : {32u, 224u}) {
    for (auto strategy : {tn::Replacement::none, tn::Replacement::all, tn::Replacement::intermediate}) {
      const auto arch = tn::build_resnet_style("resnet18", cnn(strategy, 100, {3, side, side}));
      EXPECT_EQ(tn::shape_walk(arch).back(), (tn::Shape{100}));
    }
  }
  tn::ArchSpec arch = tn::build_resnet_style("resnet18", cnn(tn::Replacement::all, 10, {3, 32, 32}));
  tn::Model model = tn::instantiate(arch);
  EXPECT_TRUE(tn::cross_check(arch, model).pass);
  EXPECT_EQ(model.forward(tn::oracle::random_tensor({1, 3, 32, 32}, 3)).shape(), (tn::Shape{1, 10}));
}

TEST(LenetBuilder, CostBudget) {
  tn::CnnOptions o = cnn(tn::Replacement::all, 10, {1, 28, 28});
  const auto arch = tn::build_lenet_style(o);
  const auto r = tn::analyze(arch);
  EXPECT_LE(r.flops(tn::FlopConvention::mac), 1.3e6);
  tn::Model model = tn::instantiate(arch);
  EXPECT_TRUE(tn::cross_check(arch, model).pass);
}

TEST(ShapeWalk, ErrorNamesFirstBadLayer) {
  tn::ArchSpec arch = tn::build_vgg_style("vgg-smoke", cnn(tn::Replacement::all));
  arch.input_shape = {3, 2, 2};  // pool1 leaves 1x1, which pool2 cannot cover
  try {
    tn::shape_walk(arch);
    FAIL() << "expected an error";
  } catch (const tn::Error& e) {
    EXPECT_NE(std::string(e.what()).find("layer 5: layer 'pool2'"), std::string::npos) << e.what();
  }
}

TEST(Instantiate, SeedDeterminesWeights) {
  tn::ArchSpec arch = tn::build_lenet_style(cnn(tn::Replacement::all, 10, {1, 28, 28}));
  tn::Model a = tn::instantiate(arch), b = tn::instantiate(arch);
  arch.seed = 1;
  tn::Model c = tn::instantiate(arch);
  const auto pa = a.parameters(), pb = b.parameters(), pc = c.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i]->name, pb[i]->name);
    EXPECT_EQ(pa[i]->value, pb[i]->value);
    if (!(pa[i]->value == pc[i]->value)) any_diff = true;
  }
  EXPECT_TRUE(any_diff);
  EXPECT_EQ(pa[2]->name, "stack1.unit0.left.weight");
}

// Serialization ------------------------------------------------------------

TEST(ArchJson, RoundTripEveryBuilder) {
  tn::CnnOptions hybrid = cnn(tn::Replacement::all, 10, {1, 28, 28});
  hybrid.hybrid = tn::HybridPolicy{{UnitSpec{2, 2, 2}, UnitSpec{2, 4, 2}, UnitSpec{4, 4, 4}}, 5};
  const std::vector<tn::ArchSpec> archs{
      tn::build_plain_mlp({784, 500, 300, 10}),
      tn::build_mlp_style({784, 500, 300, 10}, UnitSpec{2, 4, 2}),
      tn::build_vgg_style("vgg16-cifar", cnn(tn::Replacement::intermediate)),
      tn::build_resnet_style("resnet18", cnn(tn::Replacement::all, 100)),
      tn::build_lenet_style(hybrid),
  };
  for (const auto& a : archs) {
    const std::string text = tn::arch_to_json(a);
    EXPECT_EQ(tn::arch_from_json(text), a) << a.name;
    EXPECT_EQ(tn::arch_to_json(tn::arch_from_json(text)), text);
  }
}

TEST(ArchJson, BuilderKeyExpands) {
  const auto a = tn::arch_from_json(R"({"builder": {"type": "vgg", "base": "vgg16-cifar", "c_h": 4},
                                        "input_shape": [3, 32, 32], "seed": 3})");
  tn::CnnOptions o = cnn(tn::Replacement::all);
  o.seed = 3;
  EXPECT_EQ(a, tn::build_vgg_style("vgg16-cifar", o));
  const auto m = tn::arch_from_json(R"({"builder": {"type": "mlp-tissuenet", "widths": [784, 500, 300, 10],
                                        "unit": {"c_in": 2, "c_h": 4, "c_out": 2}}})");
  EXPECT_EQ(m, tn::build_mlp_style({784, 500, 300, 10}, UnitSpec{2, 4, 2}));
}

TEST(ArchJson, ErrorsCarryLocation) {
  try {
    tn::arch_from_json("{\n  \"name\": \"x\",\n  \"layers\": [,]\n}");
    FAIL();
  } catch (const tn::Error& e) {
    EXPECT_EQ(e.category(), tn::ErrorCategory::parse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  try {
    tn::arch_from_json(R"({"input_shape": [4, 8, 8], "layers": [
        {"name": "a", "type": "conv", "out": 4, "kernel": 3},
        {"name": "s", "type": "stacked", "units": [{"count": 2, "unit": {"c_in": 2, "c_out": 2}}]}]})");
    FAIL();
  } catch (const tn::Error& e) {
    EXPECT_EQ(e.category(), tn::ErrorCategory::parse);
    EXPECT_NE(std::string(e.what()).find("layers[1].units[0].unit.c_h"), std::string::npos) << e.what();
  }
  EXPECT_EQ(category_of([] { tn::arch_from_json(R"({"builder": {"type": "vgg", "base": "vgg7"}})"); }),
            tn::ErrorCategory::config);
  EXPECT_EQ(category_of([] { tn::load_arch("/nonexistent/arch.json"); }), tn::ErrorCategory::io);
}

TEST(ArchJson, SaveAndLoadFile) {
  const auto path = std::filesystem::temp_directory_path() / "tissuenet_arch_test.json";
  const auto a = tn::build_lenet_style(cnn(tn::Replacement::all, 10, {1, 28, 28}));
  tn::save_arch(a, path);
  EXPECT_EQ(tn::load_arch(path), a);
  std::filesystem::remove(path);
}
