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

#include "neurotext/encoder.hpp"

#include <cmath>

#include "neurotext/errors.hpp"
#include "neurotext/rng.hpp"

namespace neurotext {

namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::string branch_name(const std::string& prefix, std::size_t b, std::size_t k) {
  return prefix + "b" + std::to_string(b) + ".k" + std::to_string(k);
}

}  // namespace

void NeuralSample::validate() const {
  if (signal.rank() != 4) throw DimensionError("signal must be T x W x H x C, got " + shape_str(signal.shape()));
  if (!signal.all_finite()) throw NumericError("signal has non-finite values");
  if (onset > offset || offset > frames()) throw DataError("speech boundaries outside the signal");
}

InceptionSpec InceptionSpec::standard(const std::vector<std::size_t>& widths,
                                      const std::vector<std::array<std::size_t, 2>>& spatial) {
  if (widths.size() != spatial.size()) throw ParameterError("one spatial stride per block");
  InceptionSpec spec;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] % 4 != 0) throw ParameterError("block width must be divisible by 4");
    InceptionLayer layer;
    layer.branches = {{{{1, 1, 1}}}, {{{3, 3, 3}}}, {{{5, 3, 3}}}, {{{7, 3, 3}}}};
    layer.branch_channels = widths[i] / 4;
    layer.stride = {2, spatial[i][0], spatial[i][1]};
    spec.layers.push_back(layer);
  }
  return spec;
}

void InceptionSpec::validate() const {
  if (layers.empty()) throw ParameterError("inception needs at least one block");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    if (layer.branches.empty() || layer.branch_channels == 0) {
      throw ParameterError("block " + std::to_string(l) + " has no branches or channels");
    }
    if (layer.stride.t < 1 || layer.stride.w < 1 || layer.stride.h < 1) {
      throw ParameterError("strides must be >= 1");
    }
    for (const auto& br : layer.branches) {
      if (br.kernels.empty()) throw ParameterError("empty inception branch");
      for (const auto& k : br.kernels) {
        for (std::size_t s : k) {
          if (s != 1 && s != 3 && s != 5 && s != 7) {
            throw ParameterError("kernel sizes must be in {1,3,5,7}, got " + std::to_string(s));
          }
        }
      }
    }
  }
}

std::size_t InceptionSpec::temporal_stride() const {
  std::size_t s = 1;
  for (const auto& l : layers) s *= l.stride.t;
  return s;
}

void EncoderSpec::validate() const {
  inception.validate();
  if (in_channels == 0 || grid_w == 0 || grid_h == 0) throw ParameterError("empty input grid");
  if (lstm_hidden == 0 || lstm_layers == 0) throw ParameterError("lstm needs hidden units and layers");
  if (!(lstm_dropout >= 0.0 && lstm_dropout < 1.0)) throw ParameterError("lstm_dropout must be in [0, 1)");
}

std::size_t EncoderSpec::output_frames(std::size_t T) const {
  for (const auto& l : inception.layers) T = ceil_div(T, l.stride.t);
  return T;
}

std::array<std::size_t, 2> EncoderSpec::pooled_grid() const {
  std::size_t w = grid_w, h = grid_h;
  for (const auto& l : inception.layers) {
    w = ceil_div(w, l.stride.w);
    h = ceil_div(h, l.stride.h);
  }
  return {w, h};
}

std::size_t EncoderSpec::lstm_input_dim() const {
  const std::size_t c = inception.layers.back().out_channels();
  if (pool == SpatialPool::kMean) return c;
  const auto g = pooled_grid();
  return g[0] * g[1] * c;
}

void init_encoder(ParamStore& store, const EncoderSpec& spec, std::uint64_t seed,
                  const std::string& prefix) {
  spec.validate();
  std::size_t cin = spec.in_channels;
  for (std::size_t l = 0; l < spec.inception.layers.size(); ++l) {
    const auto& layer = spec.inception.layers[l];
    const std::string lp = prefix + "inc" + std::to_string(l) + ".";
    for (std::size_t b = 0; b < layer.branches.size(); ++b) {
      std::size_t c = cin;
      for (std::size_t k = 0; k < layer.branches[b].kernels.size(); ++k) {
        const auto& ks = layer.branches[b].kernels[k];
        const std::string name = branch_name(lp, b, k);
        const std::size_t fan_in = ks[0] * ks[1] * ks[2] * c;
        store.add_uniform(name + ".kernel", {ks[0], ks[1], ks[2], c, layer.branch_channels}, fan_in, seed);
        store.add_uniform(name + ".bias", {layer.branch_channels}, fan_in, seed);
        c = layer.branch_channels;
      }
    }
    cin = layer.out_channels();
  }
  std::size_t din = spec.lstm_input_dim();
  const std::size_t H = spec.lstm_hidden;
  for (std::size_t l = 0; l < spec.lstm_layers; ++l) {
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string lp = prefix + "lstm" + std::to_string(l) + "." + dir + ".";
      store.add_uniform(lp + "w_in", {din, 4 * H}, H, seed);
      store.add_uniform(lp + "w_rec", {H, 4 * H}, H, seed);
      Tensor& bias = store.add_uniform(lp + "bias", {4 * H}, H, seed);
      for (std::size_t j = H; j < 2 * H; ++j) bias[j] = 1.0;
    }
    din = 2 * H;
  }
}

Var inception_block(BoundParams& params, Var input, const InceptionLayer& layer,
                    const std::string& prefix) {
  Tape& tape = params.tape();
  std::vector<Var> outs;
  for (std::size_t b = 0; b < layer.branches.size(); ++b) {
    Var x = input;
    for (std::size_t k = 0; k < layer.branches[b].kernels.size(); ++k) {
      const std::string name = branch_name(prefix, b, k);
      const ops::Strides3 st = k == 0 ? layer.stride : ops::Strides3{};
      x = ops::conv3d(tape, x, params(name + ".kernel"), st);
      x = ops::relu(tape, ops::add_bias(tape, x, params(name + ".bias")));
    }
    if (!outs.empty() && tape.shape(x) != tape.shape(outs[0])) {
      Shape a = tape.shape(x), z = tape.shape(outs[0]);
      a.pop_back();
      z.pop_back();
      if (a != z) {
        throw DimensionError("inception branch " + std::to_string(b) + " output " +
                             shape_str(tape.shape(x)) + " does not match branch 0 " +
                             shape_str(tape.shape(outs[0])));
      }
    }
    outs.push_back(x);
  }
  return outs.size() == 1 ? outs[0] : ops::concat_last(tape, outs);
}

Var bilstm(BoundParams& params, Var seq, const std::string& prefix) {
  Tape& tape = params.tape();
  Var f = ops::lstm(tape, seq, params(prefix + "fwd.w_in"), params(prefix + "fwd.w_rec"),
                    params(prefix + "fwd.bias"), false);
  Var b = ops::lstm(tape, seq, params(prefix + "bwd.w_in"), params(prefix + "bwd.w_rec"),
                    params(prefix + "bwd.bias"), true);
  return ops::concat_last(tape, {f, b});
}

EncoderOutput encode(BoundParams& params, Var signal, const EncoderSpec& spec, bool training,
                     std::uint64_t dropout_seed, const std::string& prefix) {
  Tape& tape = params.tape();
  const Shape& s = tape.shape(signal);
  if (s.size() != 4 || s[1] != spec.grid_w || s[2] != spec.grid_h || s[3] != spec.in_channels) {
    throw DimensionError("encoder expects T x " + std::to_string(spec.grid_w) + " x " +
                         std::to_string(spec.grid_h) + " x " + std::to_string(spec.in_channels) +
                         ", got " + shape_str(s));
  }
  if (s[0] < spec.min_frames()) {
    throw DimensionError("signal has " + std::to_string(s[0]) + " samples, encoder needs at least " +
                         std::to_string(spec.min_frames()));
  }
  Var x = signal;
  for (std::size_t l = 0; l < spec.inception.layers.size(); ++l) {
    x = inception_block(params, x, spec.inception.layers[l], prefix + "inc" + std::to_string(l) + ".");
  }
  const Shape& xs = tape.shape(x);
  if (spec.pool == SpatialPool::kMean) {
    x = ops::spatial_mean(tape, x);
  } else {
    x = ops::reshape(tape, x, {xs[0], xs[1] * xs[2] * xs[3]});
  }
  EncoderOutput out;
  for (std::size_t l = 0; l < spec.lstm_layers; ++l) {
    x = bilstm(params, x, prefix + "lstm" + std::to_string(l) + ".");
    if (l + 1 == spec.lstm_layers) out.latent = x;
    x = ops::dropout(tape, x, spec.lstm_dropout, training, mix_seed({dropout_seed, l}));
  }
  out.dropped = x;
  return out;
}

LatentSequence encode_sample(const ParamStore& store, const EncoderSpec& spec,
                             const NeuralSample& sample, const std::string& prefix) {
  sample.validate();
  Tape tape;
  BoundParams params(tape, store);
  const EncoderOutput out = encode(params, tape.constant(sample.signal), spec, false, 0, prefix);
  LatentSequence seq;
  seq.frames = tape.value(out.latent);
  seq.frame_rate = sample.sample_rate / static_cast<double>(spec.inception.temporal_stride());
  return seq;
}

}  // namespace neurotext
