// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include "commands.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "tissuenet/arch_io.hpp"
#include "tissuenet/checkpoint.hpp"
#include "tissuenet/cost.hpp"
#include "tissuenet/error.hpp"
#include "tissuenet/provenance.hpp"
#include "tissuenet/trainer.hpp"

namespace tissuenet::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCategory::io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorCategory::io, "write to '" + path.string() + "' failed");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCategory::io, "cannot create '" + dir.string() + "': " + ec.message());
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) fail(ErrorCategory::io, what + " '" + path.string() + "' not found");
}

// Standard per-channel constants; nothing more specific is published.
ChannelStats cifar_stats(std::size_t classes) {
  if (classes == 100) return {{0.5071, 0.4865, 0.4409}, {0.2673, 0.2564, 0.2762}};
  return {{0.4914, 0.4822, 0.4465}, {0.2470, 0.2435, 0.2616}};
}

std::size_t class_count(const ArchSpec& arch) {
  const Shape out = shape_walk(arch).back();
  if (out.size() != 1) fail(ErrorCategory::config, "architecture output must be flat logits");
  return out[0];
}

}  // namespace

Shape parse_shape_flag(const std::string& text) {
  Shape s;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t next = text.find('x', pos);
    const std::string part = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size() || v == 0) {
      fail(ErrorCategory::parse, "shape '" + text + "' is not of the form CxHxW");
    }
    s.push_back(v);
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return s;
}

DatasetPair load_dataset(const DataOptions& opt, const Shape& sample_shape, std::size_t classes) {
  DatasetPair p;
  if (opt.dataset == "mnist") {
    p = load_mnist(opt.data_dir);
  } else if (opt.dataset == "cifar10") {
    if (opt.train_limit != 0 && opt.train_limit <= 10000) {
      // Small subsets come from the first batch only.
      p.train = load_cifar10_batch(opt.data_dir / "data_batch_1.bin", Split::train, opt.train_limit);
      p.test = load_cifar10_batch(opt.data_dir / "test_batch.bin", Split::test, opt.test_limit);
    } else {
      p = load_cifar10(opt.data_dir);
    }
  } else if (opt.dataset == "cifar100") {
    p = load_cifar100(opt.data_dir);
  } else if (opt.dataset == "synth") {
    p.train = synth_dataset(1, opt.synth_train, classes, sample_shape, true);
    p.test = synth_dataset(2, opt.synth_test, classes, sample_shape, true);
    p.test.split = Split::test;
  } else {
    fail(ErrorCategory::config, "unknown dataset '" + opt.dataset + "'");
  }
  if (opt.train_limit != 0 && opt.train_limit < p.train.size()) p.train = head(p.train, opt.train_limit);
  if (opt.test_limit != 0 && opt.test_limit < p.test.size()) p.test = head(p.test, opt.test_limit);

  std::optional<ChannelStats> stats = opt.normalize;
  if (!stats && (opt.dataset == "cifar10" || opt.dataset == "cifar100")) stats = cifar_stats(p.train.class_count);
  if (stats && !opt.no_normalize) {
    normalize(p.train, *stats);
    normalize(p.test, *stats);
  }
  if (p.train.sample_shape() != sample_shape) {
    fail(ErrorCategory::config, "dataset '" + opt.dataset + "' yields [" +
                                    shape_to_string(p.train.sample_shape()) +
                                    "] samples but the architecture expects [" +
                                    shape_to_string(sample_shape) + "]");
  }
  if (p.train.class_count > classes) {
    fail(ErrorCategory::config, "dataset has " + std::to_string(p.train.class_count) +
                                    " classes but the architecture emits " + std::to_string(classes));
  }
  return p;
}

int cmd_analyze(const AnalyzeOptions& opt) {
  require_file(opt.arch, "architecture file");
  ArchSpec arch = load_arch(opt.arch);
  if (opt.input_shape) arch.input_shape = parse_shape_flag(*opt.input_shape);
  const CostReport report = analyze(arch);
  Model model = instantiate(arch);
  const CrossCheck check = cross_check(arch, model);

  ordered_json cfg;
  cfg["arch"] = opt.arch.string();
  cfg["input_shape"] = shape_to_string(arch.input_shape);
  const Provenance prov{"analyze", cfg.dump(), arch.seed};

  if (opt.format == "csv") {
    std::cout << cost_report_csv(report, prov);
  } else if (opt.format == "json") {
    std::cout << cost_report_json(report, prov, &check);
  } else {
    std::cout << cost_report_table(report);
    std::cout << "closed-form check: " << (check.pass ? "PASS" : "FAIL") << "\n";
    for (const std::string& m : check.mismatches) std::cout << "  " << m << "\n";
  }
  if (opt.out) {
    ensure_dir(*opt.out);
    write_file(*opt.out / "cost.csv", cost_report_csv(report, prov));
    write_file(*opt.out / "cost.json", cost_report_json(report, prov, &check));
  }
  return check.pass ? 0 : 3;
}

int cmd_train(const TrainOptionsCli& opt) {
  require_file(opt.arch, "architecture file");
  const ArchSpec arch = load_arch(opt.arch);
  opt.config.validate();
  if (opt.data.dataset != "synth" && !fs::is_directory(opt.data.data_dir)) {
    fail(ErrorCategory::io, "data directory '" + opt.data.data_dir.string() + "' not found");
  }
  const DatasetPair data = load_dataset(opt.data, arch.input_shape, class_count(arch));
  ensure_dir(opt.out);

  Model model = instantiate(arch);
  const CostReport cost = analyze(arch);
  const Provenance prov{"train", opt.effective_config, opt.config.seed};
  write_file(opt.out / "arch.json", arch_to_json(arch));

  TrainOptions to;
  to.test = &data.test;
  to.arch = &arch;
  to.best_checkpoint = opt.out / "best.ckpt";
  to.augment_pad = opt.augment_pad;
  if (!opt.quiet) {
    std::cout << "arch " << arch.name << ": " << cost.total_params << " params, "
              << cost.total_macs << " MACs; train " << data.train.size() << " / test "
              << data.test.size() << "\n";
    to.on_epoch = [](const EpochRecord& e) {
      std::cout << "epoch " << e.epoch << " lr " << e.lr << " loss " << e.train_loss << " train "
                << e.train_acc << "% test " << e.test_acc << "% (" << e.seconds << " s)"
                << std::endl;
    };
  }
  const RunLog log = train(model, data.train, opt.config, to);
  write_file(opt.out / "runlog.csv", run_log_csv(log, prov));
  save_checkpoint(opt.out / "final.ckpt", arch, model, "{\"epoch\":" + std::to_string(log.epochs.size()) + "}");
  write_file(opt.out / "summary.json", run_summary_json(summarize(log, cost, arch.name), prov));
  if (!opt.quiet) {
    std::cout << "final test " << log.epochs.back().test_acc << "%, best " << log.best_test_acc
              << "% at epoch " << log.best_epoch << "; outputs in " << opt.out.string() << "\n";
  }
  return 0;
}

int cmd_eval(const EvalOptions& opt) {
  require_file(opt.checkpoint, "checkpoint");
  const Checkpoint ck = read_checkpoint(opt.checkpoint);
  Model model = load_model(ck);
  const DatasetPair data = load_dataset(opt.data, ck.arch.input_shape, class_count(ck.arch));
  const double acc = evaluate(model, data.test);
  ordered_json cfg;
  cfg["checkpoint"] = opt.checkpoint.string();
  cfg["dataset"] = opt.data.dataset;
  const Provenance prov{"eval", cfg.dump(), ck.arch.seed};
  ordered_json j;
  j["header"] = ordered_json::parse(provenance_json(prov));
  j["arch"] = ck.arch.name;
  j["test_samples"] = data.test.size();
  j["test_acc"] = acc;
  std::cout << "test accuracy " << acc << "% on " << data.test.size() << " samples\n";
  if (opt.out) {
    ensure_dir(*opt.out);
    write_file(*opt.out / "eval.json", j.dump(2) + "\n");
  }
  return 0;
}

namespace {

// Either a bare {acc, flops, params} record or a train summary.
BaselineRecord read_record(const fs::path& path, const std::string& convention, std::string& name) {
  require_file(path, "record");
  const std::string text = read_text_file(path);
  const auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorCategory::parse, path.string() + ": not a JSON object");
  BaselineRecord r;
  try {
    if (j.contains("acc")) {
      r.acc = j.at("acc").get<double>();
      r.flops = j.at("flops").get<double>();
      r.params = j.at("params").get<double>();
      name = j.value("name", path.stem().string());
      return r;
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::parse, path.string() + ": " + e.what());
  }
  const RunSummary s = parse_run_summary(text);
  if (!std::isfinite(s.final_test_acc)) {
    fail(ErrorCategory::parse, path.string() + ": run summary has no test accuracy");
  }
  r.acc = s.final_test_acc;
  r.flops = static_cast<double>(s.macs) * (convention == "mac" ? 1.0 : 2.0);
  r.params = static_cast<double>(s.params);
  name = s.arch_name;
  return r;
}

}  // namespace

int cmd_compare(const CompareOptions& opt) {
  if (opt.convention != "mac" && opt.convention != "2mac") {
    fail(ErrorCategory::config, "convention must be 'mac' or '2mac'");
  }
  std::string run_name, base_name;
  const BaselineRecord run = read_record(opt.run, opt.convention, run_name);
  const BaselineRecord base = read_record(opt.baseline, opt.convention, base_name);
  const EfficiencyScores s = compute_scores(run, base);

  ordered_json cfg;
  cfg["run"] = opt.run.string();
  cfg["baseline"] = opt.baseline.string();
  cfg["convention"] = opt.convention;
  const Provenance prov{"compare", cfg.dump(), 0};
  ordered_json j;
  j["header"] = ordered_json::parse(provenance_json(prov));
  for (const auto& [key, rec, nm] : {std::tuple{"model", run, run_name}, std::tuple{"baseline", base, base_name}}) {
    ordered_json e;
    e["name"] = nm;
    e["acc"] = rec.acc;
    e["flops"] = rec.flops;
    e["params"] = rec.params;
    j[key] = std::move(e);
  }
  j["ce"] = s.ce;
  j["se"] = s.se;

  std::ostringstream os;
  os.precision(6);
  os << "model    " << run_name << ": acc " << run.acc << " flops " << run.flops << " params "
     << run.params << "\n"
     << "baseline " << base_name << ": acc " << base.acc << " flops " << base.flops << " params "
     << base.params << "\n"
     << "CE " << s.ce << "  SE " << s.se << "\n";
  std::cout << os.str();
  if (opt.out) {
    ensure_dir(*opt.out);
    write_file(*opt.out / "compare.json", j.dump(2) + "\n");
  }
  return 0;
}

int cmd_build_arch(const BuildArchOptions& opt) {
  ArchSpec arch;
  if (opt.builder == "mlp" || opt.builder == "mlp-tissuenet") {
    MlpOptions mo;
    mo.seed = opt.seed;
    if (opt.input_shape) mo.input_shape = parse_shape_flag(*opt.input_shape);
    arch = opt.builder == "mlp"
               ? build_plain_mlp(opt.widths, mo)
               : build_mlp_style(opt.widths, UnitSpec{opt.c_in, opt.c_h, opt.c_out, 1, 1, 0, UnitKind::dense}, mo);
  } else {
    CnnOptions co;
    co.c_h = opt.c_h;
    co.c_in = opt.c_in;
    co.c_out = opt.c_out;
    co.classes = opt.classes;
    co.strategy = replacement_from_string(opt.strategy);
    co.seed = opt.seed;
    if (opt.builder == "lenet") co.input_shape = {1, 28, 28};
    if (opt.input_shape) co.input_shape = parse_shape_flag(*opt.input_shape);
    if (!opt.hybrid.empty()) {
      HybridPolicy h;
      h.seed = opt.hybrid_seed;
      for (const std::string& entry : opt.hybrid) {
        const Shape s = parse_shape_flag([&] {
          std::string t = entry;
          for (char& c : t) if (c == ',') c = 'x';
          return t;
        }());
        if (s.size() != 3) fail(ErrorCategory::parse, "hybrid unit '" + entry + "' must be c_in,c_h,c_out");
        h.pool.push_back(UnitSpec{s[0], s[1], s[2], 3, 1, 1, UnitKind::conv});
      }
      co.hybrid = h;
    }
    if (opt.builder == "vgg") {
      arch = build_vgg_style(opt.base, co);
    } else if (opt.builder == "resnet") {
      arch = build_resnet_style(opt.base, co);
    } else if (opt.builder == "lenet") {
      arch = build_lenet_style(co);
    } else {
      fail(ErrorCategory::config, "unknown builder '" + opt.builder + "'");
    }
  }
  shape_walk(arch);
  const std::string text = arch_to_json(arch);
  if (opt.out) {
    write_file(*opt.out, text);
  } else {
    std::cout << text;
  }
  return 0;
}

}  // namespace tissuenet::cli
