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
#include <span>
#include <string>
#include <vector>

#include "neurotext/tensor.hpp"

namespace neurotext {

/// Triangular cyclic learning rate: lr_min at the start of every period,
/// lr_max at its midpoint.
struct CyclicLrSchedule {
  double lr_min = 0.0001;
  double lr_max = 0.005;
  std::uint64_t period_steps = 50;

  void validate() const;
  double rate(std::uint64_t step) const;
};

/// One trainable tensor together with the gradient to apply to it.
struct ParamRef {
  std::string name;
  Tensor* value = nullptr;
  std::span<const double> grad;
};

/// Adam optimizer state. Moment buffers are created lazily on the first
/// step and are matched to parameters by position.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// Bias-corrected Adam update. Throws NumericError naming the first
/// parameter whose gradient is not finite; nothing is modified in that case.
/// When round_to_float32 is set, updated values are rounded to the nearest
/// float32 so that float32 checkpoints reproduce them exactly.
void adam_step(std::span<ParamRef> params, AdamState& state, double rate,
               bool round_to_float32 = false);

/// Rounds every element to the nearest representable float32.
void round_to_float32(Tensor& t);

}  // namespace neurotext
