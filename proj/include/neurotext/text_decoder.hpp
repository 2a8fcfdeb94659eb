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
#include <vector>

#include "neurotext/params.hpp"
#include "neurotext/tensor.hpp"
#include "neurotext/vocab.hpp"

namespace neurotext {

/// Residual dilated 1-D convolution stack that turns latent frames into
/// character logits.
struct DilatedStackSpec {
  std::size_t layers = 3;
  std::vector<std::size_t> dilations{1, 2, 4, 8, 16};
  std::size_t filter_size = 11;
  /// Channel width; must equal the latent width so residuals add directly.
  std::size_t width = 256;
  double output_dropout = 0.15;

  void validate() const;
  /// Frames seen by one layer: 1 + (filter_size - 1) * sum(dilations).
  std::size_t layer_receptive_field() const;
};

/// Per-frame log-probabilities over the character vocabulary.
class PosteriorSequence {
 public:
  PosteriorSequence() = default;
  /// Takes frames x symbols log-probabilities as they are.
  explicit PosteriorSequence(Tensor logp);
  /// Row-wise log-softmax of frames x symbols logits.
  static PosteriorSequence from_logits(const Tensor& logits);

  std::size_t frames() const { return logp_.empty() ? 0 : logp_.dim(0); }
  std::size_t symbols() const { return logp_.empty() ? CharVocab::size() : logp_.dim(1); }
  std::span<const double> frame(std::size_t t) const {
    return logp_.values().subspan(t * symbols(), symbols());
  }
  const Tensor& tensor() const { return logp_; }
  /// Frames [begin, end).
  PosteriorSequence slice(std::size_t begin, std::size_t end) const;
  /// Largest |logsumexp(frame)| over all frames.
  double max_normalization_error() const;

 private:
  Tensor logp_;
};

/// Registers "<prefix>l{i}.s{j}.kernel/.bias" and "<prefix>proj.weight/.bias".
void init_dilated_stack(ParamStore& store, const DilatedStackSpec& spec, std::size_t symbols,
                        std::uint64_t seed, const std::string& prefix = "decoder.");

/// latent T' x width -> logits T' x symbols. Each sub-layer computes
/// x + tanh(conv1d_dilated(x) + b); the stack output passes through dropout
/// and a kernel-size-1 projection.
Var dilated_stack(BoundParams& params, Var latent, const DilatedStackSpec& spec, bool training,
                  std::uint64_t dropout_seed, const std::string& prefix = "decoder.");

}  // namespace neurotext
