// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#include "tissuenet/provenance.hpp"

#include "json.hpp"

namespace tissuenet {

std::string_view tool_version() noexcept { return TISSUENET_VERSION; }

namespace {

nlohmann::ordered_json config_value(const std::string& text) {
  if (text.empty()) return nullptr;
  auto j = nlohmann::ordered_json::parse(text, nullptr, false);
  return j.is_discarded() ? nlohmann::ordered_json(text) : j;
}

}  // namespace

std::string csv_header(const Provenance& p) {
  std::string out = "# tool: tissuenet\n# version: ";
  out += tool_version();
  out += "\n# command: " + p.command + "\n# seed: " + std::to_string(p.seed) + "\n# config: " +
         config_value(p.config).dump() + "\n";
  return out;
}

std::string provenance_json(const Provenance& p) {
  nlohmann::ordered_json j;
  j["tool"] = "tissuenet";
  j["version"] = tool_version();
  j["command"] = p.command;
  j["seed"] = p.seed;
  j["config"] = config_value(p.config);
  return j.dump();
}

}  // namespace tissuenet
