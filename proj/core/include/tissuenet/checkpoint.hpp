// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The TissueNet Authors

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tissuenet/arch.hpp"
#include "tissuenet/model.hpp"

namespace tissuenet {

// Container layout, all integers little-endian:
//   "TSNCKPT1"  u32 version(=1)
//   u64 n, n bytes   ArchSpec JSON
//   u64 n, n bytes   metadata JSON (free form)
//   u64 count, then per parameter:
//     u32 n, n bytes name   u32 rank   u64 dims[rank]   f64 values[prod(dims)]

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct Checkpoint {
  ArchSpec arch;
  std::string metadata;
  std::vector<NamedTensor> params;
};

void save_checkpoint(const std::filesystem::path& path, const ArchSpec& arch, Model& model,
                     const std::string& metadata = "{}");
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies stored values into `model`; names and shapes must match exactly.
void apply_checkpoint(const Checkpoint& ckpt, Model& model);
/// Instantiates the stored ArchSpec and loads its parameters.
Model load_model(const Checkpoint& ckpt);

}  // namespace tissuenet
