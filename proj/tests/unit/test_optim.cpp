// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include <gtest/gtest.h>

#include <cmath>

#include "tissuenet/error.hpp"
#include "tissuenet/optim.hpp"

namespace tn = tissuenet;

namespace {

struct OneParam {
  tn::Parameter p{"w", {3}};
  std::vector<tn::Parameter*> list() { return {&p}; }
};

}  // namespace

TEST(Sgd, ZeroGradientLeavesWeights) {
  OneParam w;
  w.p.value = tn::Tensor({3}, {1, -2, 3});
  tn::OptimizerState s;
  tn::sgd_momentum_step(w.list(), s, 0.1, 0.9, 0.0);
  EXPECT_EQ(w.p.value, tn::Tensor({3}, {1, -2, 3}));
}

TEST(Sgd, HandArithmetic) {
  OneParam w;
  w.p.value.fill(1.0);
  w.p.grad.fill(0.5);
  tn::OptimizerState s;
  tn::sgd_momentum_step(w.list(), s, 0.1, 0.9, 0.0);
  EXPECT_DOUBLE_EQ(s.first[0][0], 0.5);
  EXPECT_DOUBLE_EQ(w.p.value[0], 0.95);
}

TEST(Sgd, TwoStepsFollowUnrolledRecurrence) {
  OneParam w;
  w.p.value.fill(2.0);
  w.p.grad.fill(0.3);
  tn::OptimizerState s;
  const double lr = 0.05, mu = 0.8, wd = 0.01;
  double v = 0.0, x = 2.0;
  for (int step = 0; step < 2; ++step) {
    tn::sgd_momentum_step(w.list(), s, lr, mu, wd);
    v = mu * v + (0.3 + wd * x);
    x = x - lr * v;
  }
  EXPECT_EQ(w.p.value[1], x);
  EXPECT_EQ(s.step, 2u);
}

TEST(Adam, ZeroGradientLeavesWeights) {
  OneParam w;
  w.p.value = tn::Tensor({3}, {4, 5, 6});
  tn::OptimizerState s;
  tn::adam_step(w.list(), s, 0.01, 0.9, 0.999, 0.01, 0.0);
  EXPECT_EQ(w.p.value, tn::Tensor({3}, {4, 5, 6}));
}

TEST(Adam, FirstStepHandArithmetic) {
  OneParam w;
  w.p.value.fill(1.0);
  w.p.grad.fill(1.0);
  tn::OptimizerState s;
  tn::adam_step(w.list(), s, 0.01, 0.9, 0.999, 0.01, 0.0);
  // Bias-corrected moments are both 1 after one step with unit gradient.
  for (double v : w.p.value.values()) EXPECT_NEAR(v, 1.0 - 0.01 / 1.01, 1e-15);
  EXPECT_EQ(s.step, 1u);
  tn::adam_step(w.list(), s, 0.01, 0.9, 0.999, 0.01, 0.0);
  EXPECT_EQ(s.step, 2u);
}

TEST(Schedule, WarmupAndCosineEndpoints) {
  tn::TrainConfig c;
  c.lr0 = 0.1;
  c.epochs = 30;
  c.warmup_epochs = 10;
  EXPECT_DOUBLE_EQ(tn::lr_at(0, c), 0.01);
  EXPECT_DOUBLE_EQ(tn::lr_at(9, c), 0.1);
  EXPECT_EQ(tn::lr_at(10, c), 0.1);
  EXPECT_NEAR(tn::lr_at(20, c), 0.05, 1e-15);
  EXPECT_NEAR(tn::cosine_lr(0.1, 1.0), 0.0, 1e-12);
  EXPECT_NEAR(tn::cosine_lr(0.1, 0.5), 0.05, 1e-15);
  EXPECT_THROW(tn::lr_at(30, c), tn::Error);
  for (std::size_t e = 11; e < 30; ++e) EXPECT_LT(tn::lr_at(e, c), tn::lr_at(e - 1, c));
  c.schedule = tn::Schedule::constant;
  EXPECT_EQ(tn::lr_at(29, c), 0.1);
}

TEST(TrainConfig, ValidationAndNames) {
  tn::TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.warmup_epochs = c.epochs + 1;
  EXPECT_THROW(c.validate(), tn::Error);
  c = {};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), tn::Error);
  EXPECT_EQ(tn::optimizer_from_string("adam"), tn::OptimizerKind::adam);
  EXPECT_EQ(tn::optimizer_from_string(tn::to_string(tn::OptimizerKind::sgd_momentum)),
            tn::OptimizerKind::sgd_momentum);
  EXPECT_EQ(tn::schedule_from_string("constant"), tn::Schedule::constant);
  EXPECT_THROW(tn::optimizer_from_string("rmsprop"), tn::Error);
}
