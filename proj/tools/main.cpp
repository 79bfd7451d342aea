// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors
//
// tissuenet: analyze | train | eval | compare | build-arch
// Failures print one line "error: <category>: <message>" and exit 1;
// usage errors exit 2; an analyzer closed-form mismatch exits 3.

#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "json.hpp"
#include "tissuenet/arch_io.hpp"
#include "tissuenet/error.hpp"
#include "tissuenet/provenance.hpp"
#include "tissuenet/trainer.hpp"

namespace tn = tissuenet;
namespace fs = std::filesystem;

namespace {

struct TrainFlags {
  std::optional<std::string> config_file;
  std::optional<std::string> arch, dataset, data_dir, out, optimizer, schedule;
  std::optional<std::size_t> epochs, batch_size, warmup, augment_pad, train_limit, test_limit;
  std::optional<std::uint64_t> seed;
  std::optional<double> lr, momentum, weight_decay;
  bool no_normalize = false;
  bool quiet = false;
};

void add_data_flags(CLI::App* cmd, std::optional<std::string>& dataset,
                    std::optional<std::string>& data_dir, std::optional<std::size_t>& train_limit,
                    std::optional<std::size_t>& test_limit) {
  cmd->add_option("--dataset", dataset, "mnist | cifar10 | cifar100 | synth")
      ->check(CLI::IsMember({"mnist", "cifar10", "cifar100", "synth"}));
  cmd->add_option("--data-dir", data_dir, "directory holding the dataset files");
  cmd->add_option("--train-limit", train_limit, "use only the first N training samples");
  cmd->add_option("--test-limit", test_limit, "use only the first N test samples");
}

// Defaults < config file < command line. Paths inside a config file are
// relative to the file.
tn::cli::TrainOptionsCli resolve_train(const TrainFlags& f) {
  tn::cli::TrainOptionsCli o;
  nlohmann::json cfg = nlohmann::json::object();
  fs::path base;
  if (f.config_file) {
    const std::string text = tn::read_text_file(*f.config_file);
    cfg = nlohmann::json::parse(text, nullptr, false);
    if (cfg.is_discarded() || !cfg.is_object()) {
      tn::fail(tn::ErrorCategory::parse, *f.config_file + ": not a JSON object");
    }
    base = fs::path(*f.config_file).parent_path();
  }
  const auto rel = [&](const std::string& p) { return base.empty() ? fs::path(p) : base / p; };
  try {
    tn::TrainConfig& c = o.config;
    if (cfg.contains("arch")) o.arch = rel(cfg["arch"].get<std::string>());
    if (cfg.contains("dataset")) o.data.dataset = cfg["dataset"].get<std::string>();
    if (cfg.contains("data_dir")) o.data.data_dir = rel(cfg["data_dir"].get<std::string>());
    if (cfg.contains("train_limit")) o.data.train_limit = cfg["train_limit"].get<std::size_t>();
    if (cfg.contains("test_limit")) o.data.test_limit = cfg["test_limit"].get<std::size_t>();
    if (cfg.contains("augment_pad")) o.augment_pad = cfg["augment_pad"].get<std::size_t>();
    if (cfg.contains("normalize")) {
      if (cfg["normalize"].is_null() || cfg["normalize"] == false) {
        o.data.no_normalize = true;
      } else {
        o.data.normalize = tn::ChannelStats{cfg["normalize"].at("mean").get<std::vector<double>>(),
                                            cfg["normalize"].at("std").get<std::vector<double>>()};
      }
    }
    if (cfg.contains("optimizer")) c.optimizer = tn::optimizer_from_string(cfg["optimizer"].get<std::string>());
    if (cfg.contains("schedule")) c.schedule = tn::schedule_from_string(cfg["schedule"].get<std::string>());
    if (cfg.contains("lr0")) c.lr0 = cfg["lr0"].get<double>();
    if (cfg.contains("momentum")) c.momentum = cfg["momentum"].get<double>();
    if (cfg.contains("weight_decay")) c.weight_decay = cfg["weight_decay"].get<double>();
    if (cfg.contains("adam_epsilon")) c.adam_epsilon = cfg["adam_epsilon"].get<double>();
    if (cfg.contains("batch_size")) c.batch_size = cfg["batch_size"].get<std::size_t>();
    if (cfg.contains("epochs")) c.epochs = cfg["epochs"].get<std::size_t>();
    if (cfg.contains("warmup_epochs")) c.warmup_epochs = cfg["warmup_epochs"].get<std::size_t>();
    if (cfg.contains("seed")) c.seed = cfg["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    tn::fail(tn::ErrorCategory::parse, f.config_file.value_or("config") + ": " + e.what());
  }

  tn::TrainConfig& c = o.config;
  if (f.arch) o.arch = *f.arch;
  if (f.dataset) o.data.dataset = *f.dataset;
  if (f.data_dir) o.data.data_dir = *f.data_dir;
  if (f.train_limit) o.data.train_limit = *f.train_limit;
  if (f.test_limit) o.data.test_limit = *f.test_limit;
  if (f.augment_pad) o.augment_pad = *f.augment_pad;
  if (f.no_normalize) o.data.no_normalize = true;
  if (f.optimizer) c.optimizer = tn::optimizer_from_string(*f.optimizer);
  if (f.schedule) c.schedule = tn::schedule_from_string(*f.schedule);
  if (f.lr) c.lr0 = *f.lr;
  if (f.momentum) c.momentum = *f.momentum;
  if (f.weight_decay) c.weight_decay = *f.weight_decay;
  if (f.batch_size) c.batch_size = *f.batch_size;
  if (f.epochs) {
    c.epochs = *f.epochs;
    if (!f.warmup && c.warmup_epochs > c.epochs) c.warmup_epochs = c.epochs;
  }
  if (f.warmup) c.warmup_epochs = *f.warmup;
  if (f.seed) c.seed = *f.seed;
  if (f.out) o.out = *f.out;
  o.quiet = f.quiet;

  if (o.arch.empty()) tn::fail(tn::ErrorCategory::config, "train needs --arch (or \"arch\" in --config)");
  if (o.data.dataset.empty()) tn::fail(tn::ErrorCategory::config, "train needs --dataset");
  if (o.out.empty()) tn::fail(tn::ErrorCategory::config, "train needs --out");

  nlohmann::ordered_json eff = nlohmann::ordered_json::parse(tn::train_config_json(c));
  eff["arch"] = o.arch.string();
  eff["dataset"] = o.data.dataset;
  eff["data_dir"] = o.data.data_dir.string();
  eff["train_limit"] = o.data.train_limit;
  eff["test_limit"] = o.data.test_limit;
  eff["augment_pad"] = o.augment_pad ? nlohmann::ordered_json(*o.augment_pad) : nlohmann::ordered_json(nullptr);
  eff["normalize"] = o.data.no_normalize ? nlohmann::ordered_json(false)
                     : o.data.normalize ? nlohmann::ordered_json{{"mean", o.data.normalize->mean},
                                                                 {"std", o.data.normalize->std}}
                                        : nlohmann::ordered_json("default");
  o.effective_config = eff.dump();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TissueNet: stacked basic-unit networks, cost analysis and training"};
  app.set_version_flag("--version", std::string(tn::tool_version()));
  app.require_subcommand(1);

  tn::cli::AnalyzeOptions analyze;
  std::string analyze_arch;
  std::optional<std::string> analyze_out;
  auto* a = app.add_subcommand("analyze", "per-layer and total params/FLOPs with closed-form check");
  a->add_option("--arch", analyze_arch, "architecture JSON")->required();
  a->add_option("--input-shape", analyze.input_shape, "override input shape, CxHxW");
  a->add_option("--format", analyze.format, "table | csv | json")->check(CLI::IsMember({"table", "csv", "json"}));
  a->add_option("--out", analyze_out, "also write cost.csv and cost.json here");

  TrainFlags tf;
  auto* t = app.add_subcommand("train", "train an architecture and log every epoch");
  t->add_option("--config", tf.config_file, "JSON run configuration");
  t->add_option("--arch", tf.arch, "architecture JSON");
  add_data_flags(t, tf.dataset, tf.data_dir, tf.train_limit, tf.test_limit);
  t->add_option("--epochs", tf.epochs);
  t->add_option("--seed", tf.seed);
  t->add_option("--out", tf.out, "output directory");
  t->add_option("--lr", tf.lr, "initial learning rate");
  t->add_option("--batch-size", tf.batch_size);
  t->add_option("--warmup", tf.warmup, "linear warmup epochs");
  t->add_option("--optimizer", tf.optimizer, "sgd | adam");
  t->add_option("--schedule", tf.schedule, "cosine | constant");
  t->add_option("--momentum", tf.momentum);
  t->add_option("--weight-decay", tf.weight_decay);
  t->add_option("--augment-pad", tf.augment_pad, "random crop padding with horizontal flips");
  t->add_flag("--no-normalize", tf.no_normalize, "skip per-channel normalization");
  t->add_flag("--quiet", tf.quiet);

  tn::cli::EvalOptions ev;
  std::string ev_ckpt;
  std::optional<std::string> ev_dataset, ev_dir, ev_out;
  std::optional<std::size_t> ev_train_limit, ev_test_limit;
  auto* e = app.add_subcommand("eval", "test accuracy of a checkpoint");
  e->add_option("--checkpoint", ev_ckpt)->required();
  add_data_flags(e, ev_dataset, ev_dir, ev_train_limit, ev_test_limit);
  e->add_option("--out", ev_out, "also write eval.json here");

  tn::cli::CompareOptions cmp;
  std::string cmp_run, cmp_base;
  std::optional<std::string> cmp_out;
  auto* c = app.add_subcommand("compare", "computation and storage efficiency against a baseline");
  c->add_option("--run", cmp_run, "summary.json of a run, or an {acc, flops, params} record")->required();
  c->add_option("--baseline", cmp_base, "same formats as --run")->required();
  c->add_option("--convention", cmp.convention, "FLOPs per MAC for run summaries: mac | 2mac")
      ->check(CLI::IsMember({"mac", "2mac"}));
  c->add_option("--out", cmp_out, "also write compare.json here");

  tn::cli::BuildArchOptions ba;
  std::optional<std::string> ba_out;
  auto* b = app.add_subcommand("build-arch", "expand a builder into an architecture JSON");
  b->add_option("--builder", ba.builder, "mlp | mlp-tissuenet | vgg | resnet | lenet")->required();
  b->add_option("--base", ba.base, "vgg16-cifar | vgg19-tiny | vgg-smoke | resnet18 | resnet34");
  b->add_option("--widths", ba.widths, "MLP layer widths")->delimiter(',');
  b->add_option("--c-h", ba.c_h);
  b->add_option("--c-in", ba.c_in);
  b->add_option("--c-out", ba.c_out);
  b->add_option("--classes", ba.classes);
  b->add_option("--strategy", ba.strategy, "none | all | r");
  b->add_option("--input-shape", ba.input_shape, "CxHxW");
  b->add_option("--hybrid", ba.hybrid, "pool entry c_in,c_h,c_out (repeatable)");
  b->add_option("--hybrid-seed", ba.hybrid_seed);
  b->add_option("--seed", ba.seed);
  b->add_option("--out", ba_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (a->parsed()) {
      analyze.arch = analyze_arch;
      if (analyze_out) analyze.out = *analyze_out;
      return tn::cli::cmd_analyze(analyze);
    }
    if (t->parsed()) return tn::cli::cmd_train(resolve_train(tf));
    if (e->parsed()) {
      ev.checkpoint = ev_ckpt;
      if (!ev_dataset) tn::fail(tn::ErrorCategory::config, "eval needs --dataset");
      ev.data.dataset = *ev_dataset;
      if (ev_dir) ev.data.data_dir = *ev_dir;
      if (ev_test_limit) ev.data.test_limit = *ev_test_limit;
      if (ev_train_limit) ev.data.train_limit = *ev_train_limit;
      if (ev_out) ev.out = *ev_out;
      return tn::cli::cmd_eval(ev);
    }
    if (c->parsed()) {
      cmp.run = cmp_run;
      cmp.baseline = cmp_base;
      if (cmp_out) cmp.out = *cmp_out;
      return tn::cli::cmd_compare(cmp);
    }
    if (b->parsed()) {
      if (ba_out) ba.out = *ba_out;
      return tn::cli::cmd_build_arch(ba);
    }
  } catch (const tn::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: internal: " << err.what() << "\n";
    return 1;
  }
  return 2;
}
