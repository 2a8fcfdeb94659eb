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
#include <functional>
#include <vector>

#include "neurotext/model.hpp"
#include "neurotext/optim.hpp"

namespace neurotext {

struct TrainConfig {
  std::size_t steps = 300;
  std::size_t batch_size = 50;
  double lr_min = 0.0001;
  double lr_max = 0.005;
  /// Length of one learning-rate cycle in epochs.
  double lr_period_epochs = 10.0;
  double max_jitter_s = 0.25;
  /// Global gradient-norm clip; 0 disables.
  double clip_norm = 5.0;
  std::uint64_t seed = 1;

  void validate() const;
};

struct StepLog {
  std::size_t step = 0;
  double lr = 0.0;
  double decay = 0.0;
  double loss = 0.0;
  double ctc = 0.0;
  double mfcc = 0.0;
  double akt = 0.0;
  double joint = 0.0;
  double session = 0.0;
  double grad_norm = 0.0;
  std::size_t utterances = 0;
  std::size_t skipped = 0;
};

class Trainer {
 public:
  Trainer(Model& model, const Dataset& data, TrainConfig config);

  /// Resume state.
  void set_state(std::size_t step, AdamState adam);
  std::size_t step() const { return step_; }
  const AdamState& adam() const { return adam_; }
  const TrainConfig& config() const { return cfg_; }
  /// Worker threads for one batch; results do not depend on this.
  void set_threads(std::size_t n) { threads_ = n == 0 ? 1 : n; }
  CyclicLrSchedule schedule() const;

  /// Training-set indices of the batch for a given step.
  std::vector<std::size_t> batch(std::size_t step) const;
  /// One optimizer step. Throws NumericError on a non-finite loss or
  /// gradient, leaving parameters untouched.
  StepLog train_step();
  /// Runs until step() == until, calling on_step after each step.
  void run(std::size_t until, const std::function<void(const StepLog&)>& on_step = {});

 private:
  Model* model_;
  const Dataset* data_;
  TrainConfig cfg_;
  std::vector<std::size_t> train_;
  AdamState adam_;
  std::size_t step_ = 0;
  std::size_t threads_ = 1;
};

/// Batch items are split into this many ordered gradient groups.
inline constexpr std::size_t kGradGroups = 8;

}  // namespace neurotext
