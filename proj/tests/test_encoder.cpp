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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "neurotext/encoder.hpp"
#include "neurotext/errors.hpp"
#include "test_support.hpp"

using namespace neurotext;
using namespace neurotext::testing;

namespace {

EncoderSpec tiny_spec() {
  EncoderSpec spec;
  spec.grid_w = 4;
  spec.grid_h = 4;
  spec.inception = InceptionSpec::standard({4, 4, 4}, {{2, 2}, {2, 2}, {1, 1}});
  spec.lstm_hidden = 4;
  return spec;
}

Tensor relu_bias_oracle(Tensor conv, const Tensor& bias) {
  const std::size_t c = bias.size();
  for (std::size_t i = 0; i < conv.size(); ++i) conv[i] = std::max(0.0, conv[i] + bias[i % c]);
  return conv;
}

}  // namespace

TEST_CASE("identity branch passes non-negative input through") {
  InceptionLayer layer;
  layer.branches = {{{{1, 1, 1}}}};
  layer.branch_channels = 1;
  layer.stride = {1, 1, 1};
  ParamStore store;
  store.add("blk.b0.k0.kernel", Tensor({1, 1, 1, 1, 1}, {1.0}));
  store.add("blk.b0.k0.bias", Tensor({1}));
  Tensor x = random_tensor({5, 3, 3, 1}, 4);
  for (double& v : x.values()) v = std::abs(v);
  Tape tape;
  BoundParams bp(tape, store);
  const Tensor& y = tape.value(inception_block(bp, tape.constant(x), layer, "blk."));
  CHECK(max_abs_diff(x, y) == 0.0);
}

TEST_CASE("two branches equal the concatenated conv oracles") {
  InceptionLayer layer;
  layer.branches = {{{{3, 3, 3}}}, {{{5, 3, 3}}}};
  layer.branch_channels = 3;
  layer.stride = {2, 1, 2};
  ParamStore store;
  store.add("blk.b0.k0.kernel", random_tensor({3, 3, 3, 2, 3}, 1));
  store.add("blk.b0.k0.bias", random_tensor({3}, 2));
  store.add("blk.b1.k0.kernel", random_tensor({5, 3, 3, 2, 3}, 3));
  store.add("blk.b1.k0.bias", random_tensor({3}, 4));
  const Tensor x = random_tensor({9, 5, 4, 2}, 5);
  Tape tape;
  BoundParams bp(tape, store);
  const Tensor& y = tape.value(inception_block(bp, tape.constant(x), layer, "blk."));
  const Tensor a = relu_bias_oracle(conv3d_oracle(x, store.at("blk.b0.k0.kernel"), 2, 1, 2),
                                    store.at("blk.b0.k0.bias"));
  const Tensor b = relu_bias_oracle(conv3d_oracle(x, store.at("blk.b1.k0.kernel"), 2, 1, 2),
                                    store.at("blk.b1.k0.bias"));
  REQUIRE(y.shape() == Shape{5, 5, 2, 6});
  double worst = 0.0;
  for (std::size_t v = 0; v < 5 * 5 * 2; ++v) {
    for (std::size_t c = 0; c < 3; ++c) {
      worst = std::max(worst, std::abs(y[v * 6 + c] - a[v * 3 + c]));
      worst = std::max(worst, std::abs(y[v * 6 + 3 + c] - b[v * 3 + c]));
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("mismatched branch strides name the branch") {
  InceptionLayer layer;
  layer.branches = {{{{1, 1, 1}}}, {{{3, 3, 3}, {3, 3, 3}}}};
  layer.branch_channels = 1;
  layer.stride = {1, 1, 1};
  ParamStore store;
  store.add("blk.b0.k0.kernel", Tensor({1, 1, 1, 1, 1}, {1.0}));
  store.add("blk.b0.k0.bias", Tensor({1}));
  store.add("blk.b1.k0.kernel", Tensor({3, 3, 3, 1, 1}));
  store.add("blk.b1.k0.bias", Tensor({1}));
  // Wrong channel count in the second kernel of branch 1.
  store.add("blk.b1.k1.kernel", Tensor({3, 3, 3, 2, 1}));
  store.add("blk.b1.k1.bias", Tensor({1}));
  Tape tape;
  BoundParams bp(tape, store);
  CHECK_THROWS_AS(inception_block(bp, tape.constant(Tensor({4, 3, 3, 1})), layer, "blk."), DimensionError);
}

TEST_CASE("frame-count law") {
  EncoderSpec spec = tiny_spec();
  CHECK(spec.inception.temporal_stride() == 8);
  CHECK(spec.output_frames(16) == 2);
  ParamStore store;
  init_encoder(store, spec, 3);
  for (std::size_t T : {8ul, 9ul, 15ul, 16ul, 17ul, 23ul, 40ul}) {
    NeuralSample s;
    s.signal = random_tensor({T, 4, 4, 2}, T);
    s.offset = T;
    const LatentSequence z = encode_sample(store, spec, s);
    CHECK(z.size() == (T + 7) / 8);
    CHECK(z.dim() == 8);
    CHECK(z.frame_rate == 25.0);
  }
  NeuralSample short_sample;
  short_sample.signal = Tensor({7, 4, 4, 2});
  short_sample.offset = 7;
  try {
    encode_sample(store, spec, short_sample);
    FAIL("expected rejection");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("at least 8") != std::string::npos);
  }
}

TEST_CASE("default encoder maps 400 samples of a 16x16 grid to 50 x 256") {
  EncoderSpec spec;
  ParamStore store;
  init_encoder(store, spec, 1);
  NeuralSample s;
  s.signal = random_tensor({400, 16, 16, 2}, 2);
  s.offset = 400;
  s.session_id = "s1";
  const LatentSequence z = encode_sample(store, spec, s);
  CHECK(z.size() == 50);
  CHECK(z.dim() == 256);
  CHECK(z.frames.all_finite());
  const LatentSequence again = encode_sample(store, spec, s);
  CHECK(max_abs_diff(z.frames, again.frames) == 0.0);
  s.session_id = "s9";
  CHECK(max_abs_diff(z.frames, encode_sample(store, spec, s).frames) == 0.0);
}

TEST_CASE("bilstm with zero weights emits zeros") {
  ParamStore store;
  for (const char* d : {"fwd", "bwd"}) {
    const std::string p = std::string("l.") + d + ".";
    store.add(p + "w_in", Tensor({3, 8}));
    store.add(p + "w_rec", Tensor({2, 8}));
    store.add(p + "bias", Tensor({8}));
  }
  Tape tape;
  BoundParams bp(tape, store);
  const Tensor& y = tape.value(bilstm(bp, tape.constant(random_tensor({6, 3}, 1)), "l."));
  CHECK(y.shape() == Shape{6, 4});
  for (double v : y.values()) CHECK(v == 0.0);
}

TEST_CASE("bilstm time reversal symmetry") {
  ParamStore store;
  for (const char* d : {"fwd", "bwd"}) {
    const std::string p = std::string("l.") + d + ".";
    store.add(p + "w_in", random_tensor({3, 12}, fnv1a(p + "i")));
    store.add(p + "w_rec", random_tensor({3, 12}, fnv1a(p + "r")));
    store.add(p + "bias", random_tensor({12}, fnv1a(p + "b")));
  }
  ParamStore swapped;
  for (const char* n : {"w_in", "w_rec", "bias"}) {
    swapped.add(std::string("l.fwd.") + n, store.at(std::string("l.bwd.") + n));
    swapped.add(std::string("l.bwd.") + n, store.at(std::string("l.fwd.") + n));
  }
  const std::size_t T = 7;
  const Tensor x = random_tensor({T, 3}, 9);
  Tensor xr({T, 3});
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t c = 0; c < 3; ++c) xr[t * 3 + c] = x[(T - 1 - t) * 3 + c];
  Tape t1, t2;
  BoundParams b1(t1, store), b2(t2, swapped);
  const Tensor& y = t1.value(bilstm(b1, t1.constant(x), "l."));
  const Tensor& yr = t2.value(bilstm(b2, t2.constant(xr), "l."));
  double worst = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t h = 0; h < 3; ++h) {
      worst = std::max(worst, std::abs(yr[t * 6 + h] - y[(T - 1 - t) * 6 + 3 + h]));
      worst = std::max(worst, std::abs(yr[t * 6 + 3 + h] - y[(T - 1 - t) * 6 + h]));
    }
  }
  CHECK(worst < 1e-14);
}

TEST_CASE("tiny encoder gradients match finite differences") {
  const EncoderSpec spec = tiny_spec();
  ParamStore store;
  init_encoder(store, spec, 21);
  const Tensor x = random_tensor({16, 4, 4, 2}, 22);
  const Tensor target = random_tensor({2, 8}, 23);
  const double err = store_grad_check(store, [&](BoundParams& bp) {
    Tape& t = bp.tape();
    const EncoderOutput out = encode(bp, t.constant(x), spec, true, 5);
    return ops::add(t, ops::mse(t, out.latent, t.constant(target)),
                    ops::sum_squares(t, out.dropped));
  });
  CHECK(err < 1e-3);
}

TEST_CASE("mean pooling variant") {
  EncoderSpec spec = tiny_spec();
  spec.pool = SpatialPool::kMean;
  CHECK(spec.lstm_input_dim() == 4);
  CHECK(tiny_spec().lstm_input_dim() == 4);
  spec.grid_w = spec.grid_h = 8;
  CHECK(spec.lstm_input_dim() == 4);
  spec.pool = SpatialPool::kFlatten;
  CHECK(spec.lstm_input_dim() == 2 * 2 * 4);
}

TEST_CASE("inception spec validation") {
  InceptionSpec s = InceptionSpec::standard({8}, {{1, 1}});
  s.layers[0].branches[1].kernels[0] = {2, 3, 3};
  CHECK_THROWS_AS(s.validate(), ParameterError);
  CHECK_THROWS_AS(InceptionSpec::standard({6}, {{1, 1}}), ParameterError);
}
