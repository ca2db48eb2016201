// Copyright 2026 The fedgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>

#include "fedgraph/model.hpp"

namespace fedgraph {

// Binary model checkpoint: architecture, ParamLayout, flat parameters and
// Adam state, followed by an FNV-1a checksum of everything before it.
// Byte layout is documented in docs/checkpoint_format.md. Save then load is
// bit-exact.
struct Checkpoint {
  GruSeq2Seq model;
  std::optional<AdamState> optimizer;
};

void save_checkpoint(const std::filesystem::path& path, const GruSeq2Seq& model,
                     const AdamState* optimizer = nullptr);

// Throws IntegrityError on a bad magic/version/checksum or truncated file,
// LayoutError when the stored layout disagrees with the stored architecture
// or with `expected` (when given).
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const GruArch* expected = nullptr);

}  // namespace fedgraph
