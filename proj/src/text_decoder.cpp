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

#include "neurotext/text_decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "neurotext/errors.hpp"
#include "neurotext/ops.hpp"
#include "neurotext/rng.hpp"

namespace neurotext {

void DilatedStackSpec::validate() const {
  if (dilations != std::vector<std::size_t>{1, 2, 4, 8, 16}) {
    throw ParameterError("dilated stack: dilation ratios must be [1, 2, 4, 8, 16]");
  }
  if (filter_size != 11) throw ParameterError("dilated stack: filter size must be 11");
  if (layers < 1 || width < 1) throw ParameterError("dilated stack: layers and width must be >= 1");
  if (!(output_dropout >= 0.0) || output_dropout >= 1.0) {
    throw ParameterError("dilated stack: dropout must be in [0, 1)");
  }
}

std::size_t DilatedStackSpec::layer_receptive_field() const {
  return 1 + (filter_size - 1) * std::accumulate(dilations.begin(), dilations.end(), std::size_t{0});
}

PosteriorSequence::PosteriorSequence(Tensor logp) : logp_(std::move(logp)) {
  if (logp_.rank() != 2) {
    throw DimensionError("posteriors must be frames x symbols, got " + shape_str(logp_.shape()));
  }
}

PosteriorSequence PosteriorSequence::from_logits(const Tensor& logits) {
  if (logits.rank() != 2 || logits.dim(1) == 0) {
    throw DimensionError("logits must be frames x symbols, got " + shape_str(logits.shape()));
  }
  const std::size_t T = logits.dim(0), V = logits.dim(1);
  Tensor out(logits.shape());
  for (std::size_t t = 0; t < T; ++t) {
    const double* in = logits.data() + t * V;
    const double mx = *std::max_element(in, in + V);
    double s = 0.0;
    for (std::size_t k = 0; k < V; ++k) s += std::exp(in[k] - mx);
    const double lse = mx + std::log(s);
    for (std::size_t k = 0; k < V; ++k) out[t * V + k] = in[k] - lse;
  }
  return PosteriorSequence(std::move(out));
}

PosteriorSequence PosteriorSequence::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, frames());
  begin = std::min(begin, end);
  const std::size_t V = symbols();
  std::vector<double> vals(logp_.values().begin() + begin * V, logp_.values().begin() + end * V);
  return PosteriorSequence(Tensor({end - begin, V}, std::move(vals)));
}

double PosteriorSequence::max_normalization_error() const {
  double worst = 0.0;
  for (std::size_t t = 0; t < frames(); ++t) {
    double s = 0.0;
    for (double v : frame(t)) s += std::exp(v);
    worst = std::max(worst, std::abs(std::log(s)));
  }
  return worst;
}

void init_dilated_stack(ParamStore& store, const DilatedStackSpec& spec, std::size_t symbols,
                        std::uint64_t seed, const std::string& prefix) {
  spec.validate();
  const std::size_t D = spec.width;
  for (std::size_t l = 0; l < spec.layers; ++l) {
    for (std::size_t s = 0; s < spec.dilations.size(); ++s) {
      const std::string base = prefix + "l" + std::to_string(l) + ".s" + std::to_string(s);
      store.add_uniform(base + ".kernel", {spec.filter_size, D, D}, spec.filter_size * D, seed);
      store.add(base + ".bias", Tensor({D}));
    }
  }
  store.add_uniform(prefix + "proj.weight", {D, symbols}, D, seed);
  store.add(prefix + "proj.bias", Tensor({symbols}));
}

Var dilated_stack(BoundParams& params, Var latent, const DilatedStackSpec& spec, bool training,
                  std::uint64_t dropout_seed, const std::string& prefix) {
  Tape& tape = params.tape();
  const Shape& in = tape.shape(latent);
  if (in.size() != 2 || in[1] != spec.width) {
    throw DimensionError("dilated stack: residual width " + std::to_string(spec.width) +
                         " cannot add to latent of shape " + shape_str(in));
  }
  Var x = latent;
  for (std::size_t l = 0; l < spec.layers; ++l) {
    for (std::size_t s = 0; s < spec.dilations.size(); ++s) {
      const std::string base = prefix + "l" + std::to_string(l) + ".s" + std::to_string(s);
      Var conv = ops::conv1d_dilated(tape, x, params(base + ".kernel"), spec.dilations[s]);
      Var act = ops::tanh(tape, ops::add_bias(tape, conv, params(base + ".bias")));
      x = ops::add(tape, x, act);
    }
  }
  x = ops::dropout(tape, x, spec.output_dropout, training, dropout_seed);
  return ops::linear(tape, x, params(prefix + "proj.weight"), params(prefix + "proj.bias"));
}

}  // namespace neurotext
