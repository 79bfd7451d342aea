// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tissuenet/data.hpp"
#include "tissuenet/optim.hpp"

namespace tissuenet::cli {

struct AnalyzeOptions {
  std::filesystem::path arch;
  std::optional<std::string> input_shape;  // "CxHxW"
  std::optional<std::filesystem::path> out;
  std::string format = "table";  // table | csv | json
};

struct DataOptions {
  std::string dataset;  // mnist | cifar10 | cifar100 | synth
  std::filesystem::path data_dir;
  std::size_t train_limit = 0;  // 0 keeps the whole split
  std::size_t test_limit = 0;
  std::optional<ChannelStats> normalize;
  bool no_normalize = false;
  std::size_t synth_train = 512;
  std::size_t synth_test = 128;
};

struct TrainOptionsCli {
  std::filesystem::path arch;
  DataOptions data;
  TrainConfig config;
  std::optional<std::size_t> augment_pad;
  std::filesystem::path out;
  std::string effective_config;  // single-line JSON written into headers
  bool quiet = false;
};

struct EvalOptions {
  std::filesystem::path checkpoint;
  DataOptions data;
  std::optional<std::filesystem::path> out;
};

struct CompareOptions {
  std::filesystem::path run;
  std::filesystem::path baseline;
  std::string convention = "2mac";  // flops field used from run summaries
  std::optional<std::filesystem::path> out;
};

struct BuildArchOptions {
  std::string builder;  // mlp | mlp-tissuenet | vgg | resnet | lenet
  std::string base;
  std::vector<std::size_t> widths;
  std::size_t c_h = 4, c_in = 2, c_out = 2, classes = 10;
  std::string strategy = "all";
  std::optional<std::string> input_shape;
  std::vector<std::string> hybrid;  // "c_in,c_h,c_out" entries
  std::uint64_t hybrid_seed = 0;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> out;
};

int cmd_analyze(const AnalyzeOptions& opt);
int cmd_train(const TrainOptionsCli& opt);
int cmd_eval(const EvalOptions& opt);
int cmd_compare(const CompareOptions& opt);
int cmd_build_arch(const BuildArchOptions& opt);

/// Loads train/test splits; CIFAR sets are normalized with the default
/// per-channel constants unless overridden or disabled.
DatasetPair load_dataset(const DataOptions& opt, const Shape& sample_shape, std::size_t classes);

Shape parse_shape_flag(const std::string& text);

}  // namespace tissuenet::cli
