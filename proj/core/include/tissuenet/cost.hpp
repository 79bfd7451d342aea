// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tissuenet/arch.hpp"
#include "tissuenet/model.hpp"
#include "tissuenet/provenance.hpp"

namespace tissuenet {

/// Internal counts are multiply-accumulates. The published MLP and CNN
/// tables both match two operations per MAC, so reports carry both.
enum class FlopConvention { mac, two_mac };

struct LayerCost {
  std::string name;
  std::string kind;
  std::uint64_t params = 0;  // weights only, biases excluded
  std::uint64_t macs = 0;    // per sample
  Shape out_shape;
};

struct CostReport {
  std::string arch_name;
  Shape input_shape;
  std::vector<LayerCost> layers;
  std::uint64_t total_params = 0;
  std::uint64_t total_macs = 0;

  double flops(FlopConvention c) const noexcept {
    return static_cast<double>(total_macs) * (c == FlopConvention::two_mac ? 2.0 : 1.0);
  }
};

/// Closed-form cost of one layer spec applied to a per-sample input shape.
LayerCost count_layer(const LayerSpec& layer, const Shape& input);
CostReport analyze(const ArchSpec& arch);

/// Per-unit closed form for conv and dense units (dense: d = 1, maps 1x1).
struct CostPair {
  std::uint64_t memory = 0;
  std::uint64_t flops = 0;

  friend bool operator==(const CostPair&, const CostPair&) = default;
};

/// Spatial extent of the left and right conv outputs inside a unit.
struct UnitMaps {
  std::uint64_t h_l = 1, w_l = 1, h_r = 1, w_r = 1;
};

/// M_s = m d^2 c_h (c_in' + c_out'),
/// C_s = m d^2 c_h (c_in' w_l h_l + w_r h_r c_out').
CostPair stacked_costs_closed_form(std::uint64_t m, std::uint64_t d, std::uint64_t c_h,
                                   std::uint64_t c_in, std::uint64_t c_out, const UnitMaps& maps);
/// Same node counts fully connected: M_n = m^2 d^2 c_h (c_in' + c_out'),
/// C_n = m^2 d^2 c_h (c_in' w_l h_l + w_r h_r c_out').
CostPair dense_costs_closed_form(std::uint64_t m, std::uint64_t d, std::uint64_t c_h,
                                 std::uint64_t c_in, std::uint64_t c_out, const UnitMaps& maps);

UnitMaps unit_maps(const UnitSpec& unit, const Shape& input);

struct CrossCheck {
  bool pass = true;
  std::vector<std::string> mismatches;
};

/// Compares every closed-form layer count against weight enumeration and
/// the MAC count of the instantiated layer.
CrossCheck cross_check(const ArchSpec& arch, Model& model);

// Efficiency scores -------------------------------------------------------

struct BaselineRecord {
  double acc = 0.0;
  double flops = 0.0;
  double params = 0.0;
};

struct EfficiencyScores {
  double ce = 0.0;
  double se = 0.0;
};

/// (acc_n / flops_n) / (acc_b / flops_b)
double compute_ce(double acc_n, double flops_n, const BaselineRecord& base);
/// (acc_n / param_n) / (acc_b / param_b)
double compute_se(double acc_n, double param_n, const BaselineRecord& base);
EfficiencyScores compute_scores(const BaselineRecord& model, const BaselineRecord& base);

// Reports -----------------------------------------------------------------

std::string cost_report_table(const CostReport& report);
/// Columns: layer,kind,params,flops,out_shape (flops in MACs) preceded by
/// a '#' header block and followed by a total row.
std::string cost_report_csv(const CostReport& report, const Provenance& prov);
std::string cost_report_json(const CostReport& report, const Provenance& prov,
                             const CrossCheck* check = nullptr);

}  // namespace tissuenet
