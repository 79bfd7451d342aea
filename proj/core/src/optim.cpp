// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include "tissuenet/optim.hpp"

#include <cmath>
#include <numbers>

#include "tissuenet/error.hpp"

namespace tissuenet {

void TrainConfig::validate() const {
  if (!(lr0 >= 0.0) || !std::isfinite(lr0)) fail(ErrorCategory::domain, "lr0 must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) fail(ErrorCategory::domain, "momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) fail(ErrorCategory::domain, "weight_decay must be >= 0");
  if (!(adam_epsilon > 0.0)) fail(ErrorCategory::domain, "adam_epsilon must be > 0");
  if (batch_size == 0) fail(ErrorCategory::domain, "batch_size must be >= 1");
  if (epochs == 0) fail(ErrorCategory::domain, "epochs must be >= 1");
  if (warmup_epochs > epochs) fail(ErrorCategory::domain, "warmup_epochs exceeds epochs");
}

std::string_view to_string(OptimizerKind k) noexcept {
  return k == OptimizerKind::adam ? "adam" : "sgd-momentum";
}

std::string_view to_string(Schedule s) noexcept {
  return s == Schedule::cosine ? "cosine" : "constant";
}

OptimizerKind optimizer_from_string(std::string_view text) {
  if (text == "sgd" || text == "sgd-momentum") return OptimizerKind::sgd_momentum;
  if (text == "adam") return OptimizerKind::adam;
  fail(ErrorCategory::config, "unknown optimizer '" + std::string(text) + "'");
}

Schedule schedule_from_string(std::string_view text) {
  if (text == "cosine") return Schedule::cosine;
  if (text == "constant") return Schedule::constant;
  fail(ErrorCategory::config, "unknown schedule '" + std::string(text) + "'");
}

namespace {

void prepare(const std::vector<Parameter*>& params, OptimizerState& state, bool two_moments) {
  for (const Parameter* p : params) {
    if (p->grad.shape() != p->value.shape()) {
      fail(ErrorCategory::state, "parameter '" + p->name + "' has no gradient of matching shape");
    }
  }
  if (state.first.empty()) {
    for (const Parameter* p : params) {
      state.first.emplace_back(p->value.shape());
      if (two_moments) state.second.emplace_back(p->value.shape());
    }
  }
  if (state.first.size() != params.size() || (two_moments && state.second.size() != params.size())) {
    fail(ErrorCategory::state, "optimizer state was created for a different parameter set");
  }
}

}  // namespace

void sgd_momentum_step(const std::vector<Parameter*>& params, OptimizerState& state, double lr,
                       double momentum, double weight_decay) {
  prepare(params, state, false);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = params[i]->value;
    const Tensor& g = params[i]->grad;
    Tensor& v = state.first[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      v[k] = momentum * v[k] + (g[k] + weight_decay * w[k]);
      w[k] -= lr * v[k];
    }
  }
  ++state.step;
}

void adam_step(const std::vector<Parameter*>& params, OptimizerState& state, double lr,
               double beta1, double beta2, double epsilon, double weight_decay) {
  prepare(params, state, true);
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = params[i]->value;
    const Tensor& g = params[i]->grad;
    Tensor& m = state.first[i];
    Tensor& v = state.second[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      w[k] -= lr * weight_decay * w[k];
      m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
      v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
      w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + epsilon);
    }
  }
}

double cosine_lr(double lr0, double t) {
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

double lr_at(std::size_t epoch, const TrainConfig& config) {
  if (epoch >= config.epochs) {
    fail(ErrorCategory::domain, "epoch " + std::to_string(epoch) + " outside [0, " +
                                    std::to_string(config.epochs) + ")");
  }
  if (epoch < config.warmup_epochs) {
    return config.lr0 * static_cast<double>(epoch + 1) / static_cast<double>(config.warmup_epochs);
  }
  if (config.schedule == Schedule::constant) return config.lr0;
  const double t = static_cast<double>(epoch - config.warmup_epochs) /
                   static_cast<double>(config.epochs - config.warmup_epochs);
  return cosine_lr(config.lr0, t);
}

}  // namespace tissuenet
