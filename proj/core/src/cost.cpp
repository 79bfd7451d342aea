// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include "tissuenet/cost.hpp"

#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "tissuenet/error.hpp"

namespace tissuenet {

CostPair stacked_costs_closed_form(std::uint64_t m, std::uint64_t d, std::uint64_t c_h,
                                   std::uint64_t c_in, std::uint64_t c_out, const UnitMaps& maps) {
  return {m * d * d * c_h * (c_in + c_out),
          m * d * d * c_h * (c_in * maps.w_l * maps.h_l + maps.w_r * maps.h_r * c_out)};
}

CostPair dense_costs_closed_form(std::uint64_t m, std::uint64_t d, std::uint64_t c_h,
                                 std::uint64_t c_in, std::uint64_t c_out, const UnitMaps& maps) {
  return {m * m * d * d * c_h * (c_in + c_out),
          m * m * d * d * c_h * (c_in * maps.w_l * maps.h_l + maps.w_r * maps.h_r * c_out)};
}

UnitMaps unit_maps(const UnitSpec& unit, const Shape& input) {
  if (unit.kind == UnitKind::dense) return {};
  if (input.size() != 3) {
    fail(ErrorCategory::config, "conv unit needs [C,H,W] input, got [" + shape_to_string(input) + "]");
  }
  const ConvGeometry left{unit.kernel, unit.stride, unit.padding, 1};
  const ConvGeometry right{unit.kernel, 1, unit.padding, 1};
  UnitMaps m;
  m.h_l = left.out_size(input[1]);
  m.w_l = left.out_size(input[2]);
  m.h_r = right.out_size(m.h_l);
  m.w_r = right.out_size(m.w_l);
  return m;
}

LayerCost count_layer(const LayerSpec& layer, const Shape& input) {
  LayerCost c;
  c.name = layer.name;
  c.out_shape = layer_output_shape(layer, input);
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, ConvSpec>) {
          c.kind = "normal-conv";
          const std::uint64_t d = b.geom.kernel;
          c.params = d * d * (input[0] / b.geom.groups) * b.c_out;
          c.macs = c.params * c.out_shape[1] * c.out_shape[2];
        } else if constexpr (std::is_same_v<T, StackedLayerSpec>) {
          c.kind = b.units.front().kind == UnitKind::conv ? "stacked-conv" : "stacked-dense";
          Shape piece = input;
          for (const UnitSpec& u : b.units) {
            piece[0] = u.c_in;
            const CostPair p = stacked_costs_closed_form(1, u.kernel, u.c_h, u.c_in, u.c_out,
                                                         unit_maps(u, piece));
            c.params += p.memory;
            c.macs += p.flops;
          }
        } else if constexpr (std::is_same_v<T, DenseSpec>) {
          c.kind = "dense";
          c.params = static_cast<std::uint64_t>(input[0]) * b.out;
          c.macs = c.params;
        } else if constexpr (std::is_same_v<T, MaxPoolSpec>) {
          c.kind = "pool";
        } else if constexpr (std::is_same_v<T, GlobalAvgPoolSpec>) {
          c.kind = "global-avg-pool";
        } else if constexpr (std::is_same_v<T, FlattenSpec>) {
          c.kind = "flatten";
        } else {
          c.kind = "residual-block";
          Shape s = input;
          for (const LayerSpec& inner : b.main) {
            const LayerCost ic = count_layer(inner, s);
            c.params += ic.params;
            c.macs += ic.macs;
            s = ic.out_shape;
          }
          if (b.shortcut) {
            const LayerCost sc = count_layer(LayerSpec{layer.name + ".shortcut", *b.shortcut}, input);
            c.params += sc.params;
            c.macs += sc.macs;
          }
        }
      },
      layer.body);
  return c;
}

CostReport analyze(const ArchSpec& arch) {
  CostReport r;
  r.arch_name = arch.name;
  r.input_shape = arch.input_shape;
  const std::vector<Shape> shapes = shape_walk(arch);
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    r.layers.push_back(count_layer(arch.layers[i], shapes[i]));
    r.total_params += r.layers.back().params;
    r.total_macs += r.layers.back().macs;
  }
  return r;
}

CrossCheck cross_check(const ArchSpec& arch, Model& model) {
  CrossCheck cc;
  const CostReport r = analyze(arch);
  if (model.size() != r.layers.size()) {
    cc.pass = false;
    cc.mismatches.push_back("layer count differs between spec and model");
    return cc;
  }
  for (std::size_t i = 0; i < model.size(); ++i) {
    Layer& l = model.layer(i);
    const std::uint64_t weights = l.weight_count();
    const std::uint64_t macs = l.macs(model.shape_at(i));
    if (weights != r.layers[i].params || macs != r.layers[i].macs) {
      cc.pass = false;
      cc.mismatches.push_back(r.layers[i].name + ": closed form " +
                              std::to_string(r.layers[i].params) + "/" +
                              std::to_string(r.layers[i].macs) + " vs built " +
                              std::to_string(weights) + "/" + std::to_string(macs));
    }
  }
  return cc;
}

// ---------------------------------------------------------------------------

double compute_ce(double acc_n, double flops_n, const BaselineRecord& base) {
  if (!(flops_n > 0.0) || !(base.flops > 0.0)) fail(ErrorCategory::domain, "FLOPs must be positive");
  if (!(base.acc > 0.0)) fail(ErrorCategory::domain, "baseline accuracy must be positive");
  return (acc_n / flops_n) / (base.acc / base.flops);
}

double compute_se(double acc_n, double param_n, const BaselineRecord& base) {
  if (!(param_n > 0.0) || !(base.params > 0.0)) {
    fail(ErrorCategory::domain, "parameter counts must be positive");
  }
  if (!(base.acc > 0.0)) fail(ErrorCategory::domain, "baseline accuracy must be positive");
  return (acc_n / param_n) / (base.acc / base.params);
}

EfficiencyScores compute_scores(const BaselineRecord& model, const BaselineRecord& base) {
  return {compute_ce(model.acc, model.flops, base), compute_se(model.acc, model.params, base)};
}

// ---------------------------------------------------------------------------

std::string cost_report_table(const CostReport& report) {
  std::size_t name_w = 5;
  for (const LayerCost& l : report.layers) name_w = std::max(name_w, l.name.size());
  std::ostringstream os;
  os << "arch: " << report.arch_name << "  input: " << shape_to_string(report.input_shape) << "\n";
  os << std::left << std::setw(static_cast<int>(name_w) + 2) << "layer" << std::setw(16) << "kind"
     << std::right << std::setw(12) << "params" << std::setw(14) << "MACs" << "  out_shape\n";
  for (const LayerCost& l : report.layers) {
    os << std::left << std::setw(static_cast<int>(name_w) + 2) << l.name << std::setw(16) << l.kind
       << std::right << std::setw(12) << l.params << std::setw(14) << l.macs << "  "
       << shape_to_string(l.out_shape) << "\n";
  }
  os << std::left << std::setw(static_cast<int>(name_w) + 2) << "total" << std::setw(16) << ""
     << std::right << std::setw(12) << report.total_params << std::setw(14) << report.total_macs
     << "\n";
  os << std::setprecision(4) << "params: " << static_cast<double>(report.total_params) / 1e6
     << "M  FLOPs(1xMAC): " << report.flops(FlopConvention::mac) / 1e6
     << "M  FLOPs(2xMAC): " << report.flops(FlopConvention::two_mac) / 1e6 << "M\n";
  return os.str();
}

std::string cost_report_csv(const CostReport& report, const Provenance& prov) {
  std::ostringstream os;
  os << csv_header(prov);
  os << "layer,kind,params,flops,out_shape\n";
  for (const LayerCost& l : report.layers) {
    os << l.name << ',' << l.kind << ',' << l.params << ',' << l.macs << ','
       << shape_to_string(l.out_shape) << '\n';
  }
  os << "total,,"
     << report.total_params << ',' << report.total_macs << ','
     << (report.layers.empty() ? std::string() : shape_to_string(report.layers.back().out_shape))
     << '\n';
  return os.str();
}

std::string cost_report_json(const CostReport& report, const Provenance& prov,
                             const CrossCheck* check) {
  nlohmann::ordered_json j;
  j["header"] = nlohmann::ordered_json::parse(provenance_json(prov));
  j["arch"] = report.arch_name;
  j["input_shape"] = report.input_shape;
  j["layers"] = nlohmann::ordered_json::array();
  for (const LayerCost& l : report.layers) {
    nlohmann::ordered_json e;
    e["layer"] = l.name;
    e["kind"] = l.kind;
    e["params"] = l.params;
    e["flops"] = l.macs;
    e["out_shape"] = l.out_shape;
    j["layers"].push_back(std::move(e));
  }
  nlohmann::ordered_json t;
  t["params"] = report.total_params;
  t["macs"] = report.total_macs;
  t["flops_1mac"] = report.flops(FlopConvention::mac);
  t["flops_2mac"] = report.flops(FlopConvention::two_mac);
  j["totals"] = std::move(t);
  if (check != nullptr) {
    j["closed_form_check"] = check->pass ? "PASS" : "FAIL";
    j["closed_form_mismatches"] = check->mismatches;
  }
  return j.dump(2) + "\n";
}

}  // namespace tissuenet
