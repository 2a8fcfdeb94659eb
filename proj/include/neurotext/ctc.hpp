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

#include <span>
#include <vector>

#include "neurotext/tensor.hpp"

namespace neurotext {

/// Frames needed to align a label sequence: one per label plus one blank
/// between every pair of equal adjacent labels.
std::size_t ctc_min_frames(std::span<const int> target);

struct CtcResult {
  double loss = 0.0;
  /// d loss / d logpost, frames x symbols. Equals minus the label occupancy.
  std::vector<double> grad;
};

/// Connectionist temporal classification loss by log-space forward-backward.
///
/// logpost holds frames x symbols log-probabilities (row-major). Rows need
/// not be normalised; the loss is -log of the summed path score. Throws
/// DimensionError ("target unalignable") when frames < ctc_min_frames.
CtcResult ctc_loss(std::span<const double> logpost, std::size_t frames, std::size_t symbols,
                   std::span<const int> target, int blank);

namespace ops {
/// Tape op wrapping ctc_loss; logpost is frames x symbols.
Var ctc(Tape& tape, Var logpost, std::vector<int> target, int blank);
}  // namespace ops

}  // namespace neurotext
