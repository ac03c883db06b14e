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

#include <filesystem>
#include <string>

#include "dadf/model.hpp"
#include "dadf/scoring.hpp"
#include "dadf/train.hpp"

DADF_NAMESPACE_BEGIN

/// Everything a run needs: model architecture, training schedule and
/// scoring. Serialized as INI text with [encoder], [patch], [attention],
/// [flow], [train] and [score] sections.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  ScoringOptions scoring;

  void validate() const;
};

/// Training-state flags stored alongside the config in checkpoints.
struct ConfigState {
  bool transformer_trained = false;
  bool flow_trained = false;
};

/// Parses INI text over the defaults. Unknown sections or keys and malformed
/// values raise ContractError. A [state] section is accepted only when
/// `state` is non-null.
RunConfig parse_run_config(const std::string& text, ConfigState* state = nullptr);
RunConfig load_run_config(const std::filesystem::path& path);
/// Overlays only the keys present in `text` onto `config`, without
/// validating.
void apply_config_text(RunConfig& config, const std::string& text, ConfigState* state = nullptr);
std::string read_config_file(const std::filesystem::path& path);

/// Canonical INI text; parse_run_config(serialize(c)) == c.
std::string serialize(const RunConfig& config);
std::string serialize(const RunConfig& config, const ConfigState& state);

/// Applies one "section.key=value" override. Call validate() once all
/// overrides are in.
void apply_override(RunConfig& config, const std::string& assignment);

/// Default config with a one-line description of every key.
std::string describe_defaults();

DADF_NAMESPACE_END
