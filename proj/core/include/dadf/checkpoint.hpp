// Copyright 2026 The DADF Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "dadf/config.hpp"

DADF_NAMESPACE_BEGIN

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary layout, all integers little-endian:
///   "DADF" | u32 version | u32 entry count |
///   entries: u16 name length, name, u8 dtype (0 = f32, 1 = f64), u8 rank,
///            u64 dims[rank], raw element bytes |
///   u32 config length, config INI text (including a [state] section).
std::vector<std::uint8_t> encode_checkpoint(const DadfModel& model, const RunConfig& run);
void save_checkpoint(const std::filesystem::path& path, const DadfModel& model,
                     const RunConfig& run);

struct LoadedCheckpoint {
  RunConfig config;
  std::unique_ptr<DadfModel> model;
};

/// All-or-nothing: any malformed, truncated or mismatched content raises
/// FormatError and no model is returned.
LoadedCheckpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

/// Named tensors a checkpoint stores: every parameter plus the fixed image
/// normalization and flow standardization statistics.
ParameterList checkpoint_entries(const DadfModel& model);

DADF_NAMESPACE_END
