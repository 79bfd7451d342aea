// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tissuenet/arch.hpp"
#include "tissuenet/cost.hpp"
#include "tissuenet/data.hpp"
#include "tissuenet/model.hpp"
#include "tissuenet/optim.hpp"
#include "tissuenet/provenance.hpp"

namespace tissuenet {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double train_loss = 0.0;  // mean over the epoch's minibatches, sample weighted
  double train_acc = 0.0;
  double test_acc = 0.0;  // NaN when no test set is supplied
  double seconds = 0.0;
};

struct RunLog {
  std::vector<EpochRecord> epochs;
  std::uint64_t seed = 0;
  double best_test_acc = 0.0;
  std::size_t best_epoch = 0;
};

struct TrainOptions {
  const Dataset* test = nullptr;
  /// Written whenever test accuracy improves; needs `arch`.
  std::optional<std::filesystem::path> best_checkpoint;
  const ArchSpec* arch = nullptr;
  /// Crop/flip with this padding when set (train split only).
  std::optional<std::size_t> augment_pad;
  std::function<void(const EpochRecord&)> on_epoch;
};

/// Seeded Fisher-Yates shuffle per epoch, then forward, loss, backward and
/// an optimizer step per minibatch. A non-finite loss aborts with the name
/// of the first layer producing a non-finite activation.
RunLog train(Model& model, const Dataset& data, const TrainConfig& config,
             const TrainOptions& options = {});

/// Top-1 accuracy in percent; argmax ties go to the lowest class index.
double evaluate(Model& model, const Dataset& data, std::size_t batch_size = 500);
std::size_t argmax_row(const Tensor& logits, std::size_t row);

std::string run_log_csv(const RunLog& log, const Provenance& prov);

struct RunSummary {
  std::string arch_name;
  double final_test_acc = 0.0;
  double best_test_acc = 0.0;
  std::size_t best_epoch = 0;
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
  std::optional<std::string> baseline_name;
  std::optional<BaselineRecord> baseline;
  std::optional<EfficiencyScores> scores;
};

RunSummary summarize(const RunLog& log, const CostReport& cost, const std::string& arch_name);
std::string run_summary_json(const RunSummary& summary, const Provenance& prov);
/// Reads back the fields written by run_summary_json.
RunSummary parse_run_summary(const std::string& text);

std::string train_config_json(const TrainConfig& config);

}  // namespace tissuenet
