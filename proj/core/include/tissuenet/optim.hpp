// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tissuenet/layers.hpp"

namespace tissuenet {

enum class OptimizerKind { sgd_momentum, adam };
enum class Schedule { constant, cosine };

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::sgd_momentum;
  double lr0 = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 0.01;
  std::size_t batch_size = 128;
  std::size_t epochs = 30;
  std::size_t warmup_epochs = 10;
  Schedule schedule = Schedule::cosine;
  std::uint64_t seed = 0;

  void validate() const;
};

std::string_view to_string(OptimizerKind k) noexcept;
std::string_view to_string(Schedule s) noexcept;
OptimizerKind optimizer_from_string(std::string_view text);
Schedule schedule_from_string(std::string_view text);

/// Lazily sized on first step; `first` holds SGD velocity or Adam m.
struct OptimizerState {
  std::vector<Tensor> first;
  std::vector<Tensor> second;
  std::uint64_t step = 0;
};

/// v <- momentum v + (g + wd w);  w <- w - lr v
void sgd_momentum_step(const std::vector<Parameter*>& params, OptimizerState& state, double lr,
                       double momentum, double weight_decay);

/// Bias-corrected Adam with decoupled decay: w <- w - lr wd w first, then
/// w <- w - lr m_hat / (sqrt(v_hat) + eps).
void adam_step(const std::vector<Parameter*>& params, OptimizerState& state, double lr,
               double beta1, double beta2, double epsilon, double weight_decay);

/// Linear warmup lr0 (e+1)/warmup, then lr0 for constant schedules or
/// cosine_lr(lr0, (e - warmup) / (epochs - warmup)).
double lr_at(std::size_t epoch, const TrainConfig& config);
double cosine_lr(double lr0, double t);

}  // namespace tissuenet
