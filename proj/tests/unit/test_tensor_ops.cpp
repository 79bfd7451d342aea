// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "tissuenet/error.hpp"
#include "tissuenet/ops.hpp"
#include "tissuenet/tensor.hpp"

namespace tn = tissuenet;
using tn::ConvGeometry;
using tn::Tensor;

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

}  // namespace

TEST(Tensor, RejectsZeroDimension) {
  EXPECT_EQ(category_of([] { Tensor t({2, 0, 3}); }), tn::ErrorCategory::config);
}

TEST(Tensor, StorageIsCacheLineAligned) {
  for (std::size_t n : {1u, 3u, 17u, 1000u}) {
    const Tensor t({n}, 1.0);
    EXPECT_EQ(reinterpret_cast<std::uintptr_t>(t.data()) % 64, 0u) << n;
    EXPECT_EQ(reinterpret_cast<std::uintptr_t>(t.reshaped({1, n}).data()) % 64, 0u) << n;
  }
}

TEST(Tensor, CheckedIndexing) {
  Tensor t({2, 3});
  t.at({1, 2}) = 5.0;
  EXPECT_EQ(t[5], 5.0);
  EXPECT_EQ(category_of([&] { (void)t.at({2, 0}); }), tn::ErrorCategory::config);
  EXPECT_EQ(t.reshaped({3, 2})[5], 5.0);
  EXPECT_THROW((void)t.reshaped({4, 2}), tn::Error);
}

TEST(Conv2d, IdentityDepthwiseKernelCopiesInput) {
  const Tensor x = tn::oracle::random_tensor({2, 3, 4, 5}, 1);
  const Tensor w({3, 1, 1, 1}, 1.0);
  EXPECT_EQ(tn::conv2d(x, w, nullptr, ConvGeometry{1, 1, 0, 3}), x);
}

TEST(Conv2d, SumOfEntries) {
  const Tensor x({1, 1, 2, 2}, {1, 2, 3, 4});
  const Tensor w({1, 1, 2, 2}, 1.0);
  const Tensor y = tn::conv2d(x, w, nullptr, ConvGeometry{2, 1, 0, 1});
  ASSERT_EQ(y.shape(), (tn::Shape{1, 1, 1, 1}));
  EXPECT_EQ(y[0], 10.0);
}

TEST(Conv2d, GroupedEqualsTwoIndependentHalves) {
  const Tensor x = tn::oracle::random_tensor({2, 4, 8, 8}, 2);
  const Tensor w = tn::oracle::random_tensor({6, 2, 3, 3}, 3);
  const Tensor y = tn::conv2d(x, w, nullptr, ConvGeometry{3, 1, 1, 2});
  const auto xs = tn::channel_split(x, {2, 2});
  const auto ws = tn::channel_split(w.reshaped({1, 6, 2, 9}), {3, 3});
  const Tensor y0 = tn::conv2d(xs[0], ws[0].reshaped({3, 2, 3, 3}), nullptr, ConvGeometry{3, 1, 1, 1});
  const Tensor y1 = tn::conv2d(xs[1], ws[1].reshaped({3, 2, 3, 3}), nullptr, ConvGeometry{3, 1, 1, 1});
  EXPECT_LE(tn::max_abs_diff(y, tn::channel_concat({y0, y1})), 1e-12);
  EXPECT_LE(tn::max_abs_diff(y, tn::oracle::loop_conv2d(x, w, nullptr, 1, 1, 2)), 1e-12);
}

TEST(Conv2d, MatchesLoopOracleAcrossGeometries) {
  std::uint64_t seed = 10;
  for (std::size_t d : {1, 3, 5}) {
    for (std::size_t stride : {1, 2}) {
      for (std::size_t pad : {0, 1, 2}) {
        for (std::size_t groups : {1, 2}) {
          const Tensor x = tn::oracle::random_tensor({2, 4, 9, 7}, ++seed);
          const Tensor w = tn::oracle::random_tensor({6, 4 / groups, d, d}, ++seed);
          const Tensor b = tn::oracle::random_tensor({6}, ++seed);
          const ConvGeometry g{d, stride, pad, groups};
          const Tensor expect = tn::oracle::loop_conv2d(x, w, &b, stride, pad, groups);
          EXPECT_LE(tn::max_abs_diff(tn::conv2d(x, w, &b, g), expect), 1e-12)
              << "d=" << d << " s=" << stride << " p=" << pad << " g=" << groups;
          EXPECT_LE(tn::max_abs_diff(tn::conv2d_reference(x, w, &b, g), expect), 1e-12);
        }
      }
    }
  }
}

TEST(Conv2d, GeometryErrors) {
  const Tensor x({1, 4, 3, 3});
  EXPECT_EQ(category_of([&] { tn::conv2d(x, Tensor({2, 4, 5, 5}), nullptr, ConvGeometry{5, 1, 0, 1}); }),
            tn::ErrorCategory::geometry);
  EXPECT_EQ(category_of([&] { tn::conv2d(x, Tensor({3, 2, 1, 1}), nullptr, ConvGeometry{1, 1, 0, 2}); }),
            tn::ErrorCategory::config);
  EXPECT_THROW(ConvGeometry({1, 0, 0, 1}).validate(), tn::Error);
}

TEST(Conv2d, BackwardMatchesFiniteDifferences) {
  const Tensor x = tn::oracle::random_tensor({2, 4, 6, 5}, 7);
  const Tensor w = tn::oracle::random_tensor({4, 2, 3, 3}, 8);
  const ConvGeometry g{3, 2, 1, 2};
  const Tensor gy = tn::oracle::random_tensor(tn::conv2d(x, w, nullptr, g).shape(), 9);
  const auto grads = tn::conv2d_backward(x, w, true, gy, g);

  const auto dot = [&](const Tensor& y) {
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * gy[i];
    return s;
  };
  const auto in_loss = [&](const std::vector<double>& v) {
    return dot(tn::conv2d(Tensor(x.shape(), v), w, nullptr, g));
  };
  const auto w_loss = [&](const std::vector<double>& v) {
    return dot(tn::conv2d(x, Tensor(w.shape(), v), nullptr, g));
  };
  const std::vector<double> xv(x.values().begin(), x.values().end());
  const std::vector<double> wv(w.values().begin(), w.values().end());
  EXPECT_LE(tn::oracle::relative_error({grads.input.values().begin(), grads.input.values().end()},
                                       tn::oracle::numeric_gradient(in_loss, xv, 1e-3)),
            1e-8);
  EXPECT_LE(tn::oracle::relative_error({grads.weight.values().begin(), grads.weight.values().end()},
                                       tn::oracle::numeric_gradient(w_loss, wv, 1e-3)),
            1e-8);
  ASSERT_TRUE(grads.bias.has_value());
  for (std::size_t o = 0; o < 4; ++o) {
    double s = 0;
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t k = 0; k < 9; ++k) s += gy[(n * 4 + o) * 9 + k];
    EXPECT_NEAR((*grads.bias)[o], s, 1e-12);
  }
}

TEST(Matmul, IdentityLeavesOperand) {
  Tensor eye({3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye[i * 4] = 1.0;
  const Tensor b = tn::oracle::random_tensor({3, 2}, 4);
  EXPECT_EQ(tn::matmul(eye, b), b);
}

TEST(Matmul, HandArithmetic) {
  const Tensor y = tn::matmul(Tensor({2, 2}, {1, 2, 3, 4}), Tensor({2, 1}, {5, 6}));
  EXPECT_EQ(y, Tensor({2, 1}, {17, 39}));
}

TEST(Matmul, AgreesWithTripleLoopIncludingTransposes) {
  const Tensor a = tn::oracle::random_tensor({4, 5}, 5);
  const Tensor b = tn::oracle::random_tensor({5, 3}, 6);
  const Tensor expect = tn::oracle::triple_loop_matmul(a, b);
  EXPECT_LE(tn::max_abs_diff(tn::matmul(a, b), expect), 1e-12);

  Tensor at({5, 4}), bt({3, 5});
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 5; ++j) at[j * 4 + i] = a[i * 5 + j];
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 3; ++j) bt[j * 5 + i] = b[i * 3 + j];
  EXPECT_LE(tn::max_abs_diff(tn::matmul_tn(at, b), expect), 1e-12);
  EXPECT_LE(tn::max_abs_diff(tn::matmul_nt(a, bt), expect), 1e-12);
  EXPECT_THROW(tn::matmul(a, a), tn::Error);
}

TEST(ChannelSplit, EvenSplitAndIdentity) {
  const Tensor x = tn::oracle::random_tensor({2, 4, 3, 3}, 11);
  const auto parts = tn::channel_split(x, {2, 2});
  ASSERT_EQ(parts.size(), 2u);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t k = 0; k < 9; ++k)
        EXPECT_EQ(parts[c / 2][(n * 2 + c % 2) * 9 + k], x[(n * 4 + c) * 9 + k]);
  const auto whole = tn::channel_split(x, {4});
  ASSERT_EQ(whole.size(), 1u);
  EXPECT_EQ(whole[0], x);
  EXPECT_EQ(category_of([&] { tn::channel_split(x, {2, 1}); }), tn::ErrorCategory::partition);
}

TEST(ChannelSplit, RoundTripIsBitExact) {
  const Tensor x = tn::oracle::random_tensor({3, 6, 2, 5}, 12);
  EXPECT_EQ(tn::channel_concat(tn::channel_split(x, {1, 2, 3})), x);
  const Tensor flat = tn::oracle::random_tensor({3, 6}, 13);
  EXPECT_EQ(tn::channel_concat(tn::channel_split(flat, {4, 2})), flat);
}

TEST(ChannelConcat, PieceOrderAndSinglePiece) {
  const Tensor a({2, 1, 2, 2}, 1.0), b({2, 2, 2, 2}, 2.0);
  const Tensor y = tn::channel_concat({a, b});
  ASSERT_EQ(y.shape(), (tn::Shape{2, 3, 2, 2}));
  for (std::size_t n = 0; n < 2; ++n) {
    EXPECT_EQ(y.at({n, 0, 1, 1}), 1.0);
    EXPECT_EQ(y.at({n, 1, 0, 0}), 2.0);
    EXPECT_EQ(y.at({n, 2, 1, 0}), 2.0);
  }
  EXPECT_EQ(tn::channel_concat({a}), a);
  EXPECT_THROW(tn::channel_concat({a, Tensor({2, 1, 3, 2})}), tn::Error);
}

TEST(Elementwise, ReluPoolSoftmax) {
  EXPECT_EQ(tn::relu(Tensor({3}, {-1, 0, 2})), Tensor({3}, {0, 0, 2}));
  const Tensor gap = tn::global_avg_pool(Tensor({2, 3, 4, 4}, 1.75));
  ASSERT_EQ(gap.shape(), (tn::Shape{2, 3}));
  for (double v : gap.values()) EXPECT_DOUBLE_EQ(v, 1.75);
  const Tensor s = tn::softmax(Tensor({1, 2}, {0, 0}));
  EXPECT_EQ(s[0], 0.5);
  EXPECT_EQ(s[1], 0.5);
  const Tensor big = tn::softmax(Tensor({1, 3}, {1000, 1000, -1000}));
  EXPECT_TRUE(tn::all_finite(big));
  EXPECT_NEAR(big[0], 0.5, 1e-15);
}

TEST(MaxPool, ForwardAndRoutedBackward) {
  const Tensor x({1, 1, 4, 4}, {1, 2, 5, 3,  //
                                4, 0, 1, 1,  //
                                9, 8, 0, 0,  //
                                7, 6, 0, 2});
  const auto r = tn::max_pool2d(x, 2, 2);
  EXPECT_EQ(r.output, Tensor({1, 1, 2, 2}, {4, 5, 9, 2}));
  const Tensor g = tn::max_pool2d_backward(x.shape(), r.argmax, Tensor({1, 1, 2, 2}, {1, 2, 3, 4}));
  EXPECT_EQ(g.at({0, 0, 1, 0}), 1.0);
  EXPECT_EQ(g.at({0, 0, 0, 2}), 2.0);
  EXPECT_EQ(g.at({0, 0, 2, 0}), 3.0);
  EXPECT_EQ(g.at({0, 0, 3, 3}), 4.0);
  double total = 0;
  for (double v : g.values()) total += v;
  EXPECT_EQ(total, 10.0);
}
