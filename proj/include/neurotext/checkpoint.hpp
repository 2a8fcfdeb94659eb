// Copyright 2026 The neurotext Authors.
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
#include <optional>
#include <string>

#include "neurotext/config.hpp"
#include "neurotext/model.hpp"
#include "neurotext/optim.hpp"

namespace neurotext {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  RunConfig config;
  std::string fingerprint;
  std::size_t step = 0;
  Model model;
  AdamState adam;
};

/// Writes dir/manifest.json, params.bin (float32), moments.bin and
/// tables.bin (float64). The directory is assembled under a temporary name
/// and renamed into place, so an interrupted write never replaces a good one.
void save_checkpoint(const std::string& dir, const RunConfig& config, const Model& model,
                     const AdamState& adam, std::size_t step);

/// Verifies the manifest hash, every tensor checksum and the fingerprint.
Checkpoint load_checkpoint(const std::string& dir);

/// "step-000123".
std::string checkpoint_name(std::size_t step);
/// Highest-step checkpoint under run_dir, if any.
std::optional<std::string> latest_checkpoint(const std::string& run_dir);

}  // namespace neurotext
