// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "tissuenet/arch.hpp"

namespace tissuenet {

// Canonical ArchSpec text is JSON; the schema is documented in
// docs/arch-format.md. A file may instead name a builder ("builder" key),
// which is expanded on load.

std::string arch_to_json(const ArchSpec& arch);
/// Parse errors carry the line and column; field errors carry a path such
/// as layers[3].units[0].c_h.
ArchSpec arch_from_json(std::string_view text);

ArchSpec load_arch(const std::filesystem::path& path);
void save_arch(const ArchSpec& arch, const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace tissuenet
