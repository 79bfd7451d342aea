// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include "tissuenet/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "tissuenet/checkpoint.hpp"
#include "tissuenet/error.hpp"
#include "tissuenet/loss.hpp"

namespace tissuenet {

std::size_t argmax_row(const Tensor& logits, std::size_t row) {
  const std::size_t k = logits.dim(1);
  const double* r = logits.data() + row * k;
  std::size_t best = 0;
  for (std::size_t j = 1; j < k; ++j) {
    if (r[j] > r[best]) best = j;
  }
  return best;
}

double evaluate(Model& model, const Dataset& data, std::size_t batch_size) {
  if (data.size() == 0) fail(ErrorCategory::config, "cannot evaluate on an empty dataset");
  if (batch_size == 0) fail(ErrorCategory::domain, "batch_size must be >= 1");
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::size_t correct = 0;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, data.size());
    const Batch b = gather(data, std::span<const std::size_t>(idx.data() + start, end - start));
    const Tensor logits = model.forward(b.images);
    for (std::size_t i = 0; i < b.labels.size(); ++i) {
      if (argmax_row(logits, i) == b.labels[i]) ++correct;
    }
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(data.size());
}

RunLog train(Model& model, const Dataset& data, const TrainConfig& config,
             const TrainOptions& options) {
  config.validate();
  if (data.size() == 0) fail(ErrorCategory::config, "training set is empty");
  if (data.sample_shape() != model.input_shape()) {
    fail(ErrorCategory::config, "dataset samples are [" + shape_to_string(data.sample_shape()) +
                                    "] but the model expects [" +
                                    shape_to_string(model.input_shape()) + "]");
  }
  if (options.best_checkpoint && options.arch == nullptr) {
    fail(ErrorCategory::config, "best-checkpoint saving needs the ArchSpec");
  }
  RunLog log;
  log.seed = config.seed;
  Rng shuffle_rng(config.seed);
  std::optional<CropFlipAugmenter> augment;
  if (options.augment_pad) augment.emplace(*options.augment_pad, config.seed ^ 0x9E3779B97F4A7C15ULL);

  const std::vector<Parameter*> params = model.parameters();
  OptimizerState state;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = lr_at(epoch, config);
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, order.size());
      Batch b = gather(data, std::span<const std::size_t>(order.data() + start, end - start));
      if (augment) augment->apply(b.images);
      model.zero_grad();
      const Tensor logits = model.forward(b.images);
      const LossResult loss = cross_entropy(logits, b.labels);
      if (!std::isfinite(loss.loss)) {
        const auto culprit = model.first_nonfinite_layer(b.images);
        fail(ErrorCategory::numeric, "non-finite loss in epoch " + std::to_string(epoch + 1) +
                                         "; first non-finite activation: " +
                                         culprit.value_or("<loss>"));
      }
      model.backward(loss.grad);
      if (config.optimizer == OptimizerKind::sgd_momentum) {
        sgd_momentum_step(params, state, lr, config.momentum, config.weight_decay);
      } else {
        adam_step(params, state, lr, config.adam_beta1, config.adam_beta2, config.adam_epsilon,
                  config.weight_decay);
      }
      loss_sum += loss.loss * static_cast<double>(end - start);
      for (std::size_t i = 0; i < b.labels.size(); ++i) {
        if (argmax_row(logits, i) == b.labels[i]) ++correct;
      }
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(data.size());
    rec.train_acc = 100.0 * static_cast<double>(correct) / static_cast<double>(data.size());
    rec.test_acc = options.test ? evaluate(model, *options.test)
                                : std::numeric_limits<double>::quiet_NaN();
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (options.test && (log.best_epoch == 0 || rec.test_acc > log.best_test_acc)) {
      log.best_test_acc = rec.test_acc;
      log.best_epoch = rec.epoch;
      if (options.best_checkpoint) {
        std::ostringstream meta;
        meta << "{\"epoch\":" << rec.epoch << ",\"test_acc\":" << rec.test_acc << "}";
        save_checkpoint(*options.best_checkpoint, *options.arch, model, meta.str());
      }
    }
    log.epochs.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
  }
  return log;
}

std::string run_log_csv(const RunLog& log, const Provenance& prov) {
  std::ostringstream os;
  os << csv_header(prov);
  os << "epoch,lr,train_loss,train_acc,test_acc,seconds\n";
  os.precision(17);
  for (const EpochRecord& e : log.epochs) {
    os << e.epoch << ',' << e.lr << ',' << e.train_loss << ',' << e.train_acc << ',';
    if (std::isfinite(e.test_acc)) os << e.test_acc;
    os << ',' << e.seconds << '\n';
  }
  return os.str();
}

RunSummary summarize(const RunLog& log, const CostReport& cost, const std::string& arch_name) {
  RunSummary s;
  s.arch_name = arch_name;
  if (!log.epochs.empty()) s.final_test_acc = log.epochs.back().test_acc;
  s.best_test_acc = log.best_test_acc;
  s.best_epoch = log.best_epoch;
  s.params = cost.total_params;
  s.macs = cost.total_macs;
  return s;
}

std::string run_summary_json(const RunSummary& s, const Provenance& prov) {
  nlohmann::ordered_json j;
  j["header"] = nlohmann::ordered_json::parse(provenance_json(prov));
  j["arch"] = s.arch_name;
  j["final_test_acc"] = std::isfinite(s.final_test_acc) ? nlohmann::ordered_json(s.final_test_acc)
                                                        : nlohmann::ordered_json(nullptr);
  j["best_test_acc"] = s.best_test_acc;
  j["best_epoch"] = s.best_epoch;
  j["params"] = s.params;
  j["macs"] = s.macs;
  j["flops_1mac"] = static_cast<double>(s.macs);
  j["flops_2mac"] = 2.0 * static_cast<double>(s.macs);
  if (s.baseline) {
    nlohmann::ordered_json b;
    b["name"] = s.baseline_name.value_or("baseline");
    b["acc"] = s.baseline->acc;
    b["flops"] = s.baseline->flops;
    b["params"] = s.baseline->params;
    j["baseline"] = std::move(b);
  }
  if (s.scores) {
    j["ce"] = s.scores->ce;
    j["se"] = s.scores->se;
  }
  return j.dump(2) + "\n";
}

RunSummary parse_run_summary(const std::string& text) {
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorCategory::parse, "run summary is not a JSON object");
  RunSummary s;
  try {
    s.arch_name = j.at("arch").get<std::string>();
    s.final_test_acc = j.at("final_test_acc").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                        : j.at("final_test_acc").get<double>();
    s.best_test_acc = j.at("best_test_acc").get<double>();
    s.best_epoch = j.at("best_epoch").get<std::size_t>();
    s.params = j.at("params").get<std::uint64_t>();
    s.macs = j.at("macs").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, std::string("run summary: ") + e.what());
  }
  return s;
}

std::string train_config_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["optimizer"] = to_string(c.optimizer);
  j["lr0"] = c.lr0;
  j["momentum"] = c.momentum;
  j["weight_decay"] = c.weight_decay;
  j["adam_epsilon"] = c.adam_epsilon;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["warmup_epochs"] = c.warmup_epochs;
  j["schedule"] = to_string(c.schedule);
  j["seed"] = c.seed;
  return j.dump();
}

}  // namespace tissuenet
