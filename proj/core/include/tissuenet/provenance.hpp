// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace tissuenet {

std::string_view tool_version() noexcept;

/// Header block stamped on every file the tools write.
struct Provenance {
  std::string command;  // e.g. "train"
  std::string config;   // single-line JSON of the effective configuration
  std::uint64_t seed = 0;
};

/// "# key: value" lines, for CSV outputs.
std::string csv_header(const Provenance& p);
/// JSON object text {"tool":...,"version":...,"command":...,"seed":...,"config":{...}}.
std::string provenance_json(const Provenance& p);

}  // namespace tissuenet
