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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "neurotext/ops.hpp"
#include "neurotext/params.hpp"
#include "neurotext/tensor.hpp"

namespace neurotext {

/// One utterance: T x W x H x C grid signal with its labels.
struct NeuralSample {
  Tensor signal;
  std::string session_id;
  std::string text;
  /// Speech onset/offset in signal samples.
  std::size_t onset = 0;
  std::size_t offset = 0;
  double sample_rate = 200.0;

  std::size_t frames() const { return signal.empty() ? 0 : signal.dim(0); }
  void validate() const;
};

using KernelSize = std::array<std::size_t, 3>;

struct InceptionBranch {
  /// Applied in order, each followed by bias and ReLU.
  std::vector<KernelSize> kernels;
};

struct InceptionLayer {
  std::vector<InceptionBranch> branches;
  /// Output channels of every branch; the layer emits branches * this.
  std::size_t branch_channels = 8;
  /// Applied by the first kernel of every branch.
  ops::Strides3 stride{2, 2, 2};

  std::size_t out_channels() const { return branches.size() * branch_channels; }
};

struct InceptionSpec {
  std::vector<InceptionLayer> layers;

  /// Four branches (1,1,1), (3,3,3), (5,3,3), (7,3,3) per block.
  static InceptionSpec standard(const std::vector<std::size_t>& widths,
                                const std::vector<std::array<std::size_t, 2>>& spatial_strides);
  void validate() const;
  std::size_t temporal_stride() const;
};

enum class SpatialPool { kFlatten, kMean };

struct EncoderSpec {
  std::size_t in_channels = 2;
  std::size_t grid_w = 16;
  std::size_t grid_h = 16;
  InceptionSpec inception = InceptionSpec::standard({32, 64, 128}, {{2, 2}, {2, 2}, {2, 2}});
  SpatialPool pool = SpatialPool::kFlatten;
  /// Per direction; the latent width is 2 * lstm_hidden.
  std::size_t lstm_hidden = 128;
  std::size_t lstm_layers = 2;
  double lstm_dropout = 0.5;

  void validate() const;
  std::size_t latent_dim() const { return 2 * lstm_hidden; }
  std::size_t min_frames() const { return inception.temporal_stride(); }
  std::size_t output_frames(std::size_t T) const;
  /// Grid extent after the inception strides.
  std::array<std::size_t, 2> pooled_grid() const;
  std::size_t lstm_input_dim() const;
};

struct LatentSequence {
  Tensor frames;
  double frame_rate = 25.0;

  std::size_t size() const { return frames.empty() ? 0 : frames.dim(0); }
  std::size_t dim() const { return frames.empty() ? 0 : frames.dim(1); }
};

struct EncoderOutput {
  /// Latent before output dropout; regularizer heads read this.
  Var latent;
  /// Latent after output dropout; the text decoder reads this.
  Var dropped;
};

void init_encoder(ParamStore& store, const EncoderSpec& spec, std::uint64_t seed,
                  const std::string& prefix = "encoder.");

Var inception_block(BoundParams& params, Var input, const InceptionLayer& layer,
                    const std::string& prefix);

/// Bidirectional LSTM layer; output T x 2H with [forward, backward] halves.
Var bilstm(BoundParams& params, Var seq, const std::string& prefix);

EncoderOutput encode(BoundParams& params, Var signal, const EncoderSpec& spec, bool training,
                     std::uint64_t dropout_seed, const std::string& prefix = "encoder.");

/// Inference-mode forward pass.
LatentSequence encode_sample(const ParamStore& store, const EncoderSpec& spec,
                             const NeuralSample& sample, const std::string& prefix = "encoder.");

}  // namespace neurotext
