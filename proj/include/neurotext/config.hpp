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
#include <string>
#include <vector>

#include "json.hpp"
#include "neurotext/beam_search.hpp"
#include "neurotext/model.hpp"
#include "neurotext/synthdata.hpp"
#include "neurotext/trainer.hpp"

namespace neurotext {

enum class LmSource { kNone, kTask, kFile };

const char* lm_source_name(LmSource s);
LmSource parse_lm_source(const std::string& name);

struct LmSection {
  std::size_t order = 4;
  double discount = 0.75;
};

struct DecodeSection {
  std::size_t beam_width = 100;
  double lm_weight = 1.5;
  double word_bonus = 0.0;
  LmSource lm = LmSource::kTask;
  /// ARPA file for LmSource::kFile.
  std::string lm_path;
  bool score_sentence_end = true;
  std::size_t nbest = 1;
};

struct EvalSection {
  std::vector<double> cutoff_steps_s{0.0, 0.5, 1.0, 1.5, 2.0};
  double stream_step_s = 0.2;
  std::size_t stream_trials = 3;
  /// Ablation grid: every combination trains one model.
  std::vector<std::string> reg_conditions{"none", "mfcc+akt"};
  std::vector<bool> calibration{true};
  std::vector<double> train_fractions{1.0};
  /// Each sets both the data and the training seed.
  std::vector<std::uint64_t> seeds{1};
};

/// Every tunable of a run as one document. Grid, feature sizes and the
/// decoder width are derived, not stored.
struct RunConfig {
  /// Model initialisation and training seed.
  std::uint64_t seed = 1;
  DatasetSpec data;
  ModelSpec model;
  /// Regularizer horizon as a fraction of train.steps.
  double reg_horizon_fraction = 0.8;
  TrainConfig train;
  /// Share of the training split used, spread over recording order.
  double train_fraction = 1.0;
  std::size_t checkpoint_every = 50;
  LmSection lm;
  DecodeSection decode;
  EvalSection eval;

  /// Fills the derived fields and validates everything.
  void finalize();
};

/// Desk-scale preset used by the acceptance benchmark.
RunConfig benchmark_config();

nlohmann::json config_to_json(const RunConfig& c);
/// Missing keys keep defaults; unknown keys throw UsageError naming the path.
/// Malformed JSON throws DataError.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
RunConfig parse_config_text(const std::string& text, RunConfig base = {});
RunConfig load_config(const std::string& path, RunConfig base = {});
void save_config(const RunConfig& c, const std::string& path);

/// FNV-1a of the canonical JSON dump.
std::string config_fingerprint(const RunConfig& c);

/// Decode options for the given LM (may be null).
DecodeConfig decode_config(const RunConfig& c, std::shared_ptr<const ArpaModel> lm);

}  // namespace neurotext
