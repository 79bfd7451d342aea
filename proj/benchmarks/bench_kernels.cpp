// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors
//
// Kernel timings: direct vs GEMM convolution, matmul, and a stacked layer
// against its dense two-conv counterpart at equal channel widths.

#include <benchmark/benchmark.h>

#include <random>

#include "tissuenet/arch.hpp"
#include "tissuenet/ops.hpp"

namespace tn = tissuenet;

namespace {

tn::Tensor random_tensor(const tn::Shape& shape, std::uint64_t seed) {
  tn::Tensor t(shape);
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = dist(gen);
  return t;
}

// Args: channels, spatial size.
void BM_Conv2dGemm(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  const tn::Tensor x = random_tensor({8, c, hw, hw}, 1);
  const tn::Tensor w = random_tensor({c, c, 3, 3}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(tn::conv2d(x, w, nullptr, {3, 1, 1, 1}));
  state.counters["MAC/s"] = benchmark::Counter(
      static_cast<double>(8 * c * c * 9 * hw * hw) * static_cast<double>(state.iterations()),
      benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Conv2dGemm)->Args({16, 16})->Args({64, 16})->Args({64, 32});

void BM_Conv2dDirect(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const auto hw = static_cast<std::size_t>(state.range(1));
  const tn::Tensor x = random_tensor({8, c, hw, hw}, 1);
  const tn::Tensor w = random_tensor({c, c, 3, 3}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(tn::conv2d_reference(x, w, nullptr, {3, 1, 1, 1}));
  state.counters["MAC/s"] = benchmark::Counter(
      static_cast<double>(8 * c * c * 9 * hw * hw) * static_cast<double>(state.iterations()),
      benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Conv2dDirect)->Args({16, 16})->Args({64, 16});

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const tn::Tensor a = random_tensor({n, n}, 3);
  const tn::Tensor b = random_tensor({n, n}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(tn::matmul(a, b));
  state.counters["MAC/s"] = benchmark::Counter(
      static_cast<double>(n * n * n) * static_cast<double>(state.iterations()),
      benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Matmul)->RangeMultiplier(4)->Range(16, 256);

tn::ArchSpec stacked_probe(std::size_t c, std::size_t hw) {
  tn::ArchSpec a;
  a.name = "bench";
  a.input_shape = {c, hw, hw};
  a.layers.push_back({"stack", tn::stack_units(tn::UnitSpec{2, 4, 2, 3, 1, 1}, c)});
  return a;
}

// Forward plus backward of one stacked layer (arg 1 = 0) or its densified
// two-conv counterpart (arg 1 = 1).
void BM_StackedVsDense(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const tn::ArchSpec stacked = stacked_probe(c, 16);
  const tn::ArchSpec arch = state.range(1) == 0 ? stacked : tn::densify(stacked);
  tn::Model model = tn::instantiate(arch);
  const tn::Tensor x = random_tensor({8, c, 16, 16}, 5);
  for (auto _ : state) {
    const tn::Tensor y = model.forward(x);
    benchmark::DoNotOptimize(model.backward(tn::Tensor(y.shape(), 1.0)));
  }
  state.SetLabel(state.range(1) == 0 ? "stacked" : "dense");
}
BENCHMARK(BM_StackedVsDense)->ArgsProduct({{16, 64}, {0, 1}});

}  // namespace

BENCHMARK_MAIN();
