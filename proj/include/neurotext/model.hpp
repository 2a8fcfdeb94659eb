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

#include "neurotext/encoder.hpp"
#include "neurotext/params.hpp"
#include "neurotext/regularizers.hpp"
#include "neurotext/synthdata.hpp"
#include "neurotext/text_decoder.hpp"

namespace neurotext {

struct ModelSpec {
  EncoderSpec encoder;
  DilatedStackSpec decoder;
  RegSpec reg;
  std::size_t session_dim = 8;
  std::size_t session_window = 2;
  std::size_t akt_dim = 33;
  std::size_t mfcc_dim = 26;

  /// Also checks that decoder.width equals the latent width.
  void validate() const;
};

/// Parameters plus the fixed training-side tables.
struct Model {
  ModelSpec spec;
  ParamStore params;
  SessionEmbeddingTable sessions;
  JointProjection joint;

  static Model init(const ModelSpec& spec, std::uint64_t seed);
  /// Session table from recording order; joint projection from training targets.
  void fit_tables(const Dataset& ds, std::uint64_t seed);
};

struct ForwardResult {
  Var logits;
  Var logpost;
  Var latent;
};

ForwardResult forward(BoundParams& params, const ModelSpec& spec, const Tensor& signal, bool training,
                      std::uint64_t dropout_seed);

/// Per-utterance loss parts, each a scalar Var (or unset when unused).
struct LossParts {
  Var total;
  Var ctc;
  Var mfcc;
  Var akt;
  Var joint;
  Var session;
};

/// Training loss of one (possibly jittered) utterance at a given step.
LossParts utterance_loss(BoundParams& params, const Model& model, const Utterance& u,
                         std::size_t step, bool training, std::uint64_t dropout_seed);

/// Inference-mode log posteriors.
PosteriorSequence posteriors(const Model& model, const Tensor& signal);
/// Inference-mode latent sequence (before output dropout).
Tensor latent_of(const Model& model, const Tensor& signal);

/// Crop max_jitter_s from both ends: the centre of the training jitter range.
Utterance nominal_window(const Utterance& u, double max_jitter_s);

}  // namespace neurotext
