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

#include <cmath>

#include "neurotext/ctc.hpp"
#include "neurotext/errors.hpp"
#include "neurotext/ops.hpp"
#include "neurotext/text_decoder.hpp"
#include "test_support.hpp"

using namespace neurotext;
using namespace neurotext::testing;

namespace {

std::vector<double> logs(std::initializer_list<double> probs) {
  std::vector<double> v;
  for (double p : probs) v.push_back(std::log(p));
  return v;
}

}  // namespace

TEST_CASE("ctc worked examples") {
  // Symbols {a, b, blank}.
  {
    const auto lp = logs({0.6, 0.1, 0.3});
    const std::vector<int> target{0};
    CHECK(ctc_loss(lp, 1, 3, target, 2).loss == doctest::Approx(-std::log(0.6)).epsilon(1e-14));
    CHECK(-std::log(0.6) == doctest::Approx(0.5108).epsilon(1e-4));
  }
  {
    const auto lp = logs({1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0 / 3});
    const std::vector<int> target{0};
    CHECK(std::abs(ctc_loss(lp, 2, 3, target, 2).loss - std::log(3.0)) < 1e-12);
  }
  {
    const auto lp = logs({0.05, 0.05, 0.9, 0.05, 0.05, 0.9});
    CHECK(std::abs(ctc_loss(lp, 2, 3, {}, 2).loss + 2.0 * std::log(0.9)) < 1e-12);
  }
}

TEST_CASE("ctc rejects unalignable targets") {
  const auto lp = logs({0.3, 0.3, 0.4, 0.3, 0.3, 0.4});
  const std::vector<int> aa{0, 0};
  CHECK(ctc_min_frames(aa) == 3);
  try {
    ctc_loss(lp, 2, 3, aa, 2);
    FAIL("expected an error");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("unalignable") != std::string::npos);
    CHECK(msg.find("2 labels") != std::string::npos);
    CHECK(msg.find("got 2") != std::string::npos);
  }
  const std::vector<int> ab{0, 1};
  CHECK_NOTHROW(ctc_loss(lp, 2, 3, ab, 2));
}

TEST_CASE("ctc equals brute-force path enumeration") {
  Rng rng(2024);
  int checked = 0;
  for (const auto& target : all_strings(2, 3)) {
    for (std::size_t T = 1; T <= 6; ++T) {
      if (T < std::max<std::size_t>(ctc_min_frames(target), 1)) continue;
      for (int rep = 0; rep < 3; ++rep) {
        const auto lp = random_logpost(T, 3, rng);
        const double fast = ctc_loss(lp, T, 3, target, 2).loss;
        CHECK(std::abs(fast - ctc_brute_force(lp, T, 3, target, 2)) < 1e-9);
        ++checked;
      }
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("ctc gradient matches finite differences") {
  Rng rng(77);
  for (const auto& target : all_strings(2, 3)) {
    for (std::size_t T : {3ul, 5ul}) {
      if (T < ctc_min_frames(target)) continue;
      Tensor lp({T, 3}, random_logpost(T, 3, rng));
      const double err = grad_check({&lp}, [target](Tape& t, const std::vector<Var>& p) {
        return ops::ctc(t, p[0], target, 2);
      });
      CHECK(err < 1e-4);
    }
  }
}

TEST_CASE("a pure-blank frame leaves the path sum unchanged") {
  Rng rng(5);
  const std::vector<int> target{0, 1, 1};
  for (std::size_t T = 4; T <= 6; ++T) {
    auto lp = random_logpost(T, 3, rng);
    const double base = ctc_loss(lp, T, 3, target, 2).loss;
    lp.insert(lp.end(), {-std::numeric_limits<double>::infinity(),
                         -std::numeric_limits<double>::infinity(), 0.0});
    CHECK(std::abs(ctc_loss(lp, T + 1, 3, target, 2).loss - base) < 1e-12);
  }
}

TEST_CASE("posteriors are normalised log-softmax") {
  const auto zero = PosteriorSequence::from_logits(Tensor({4, 29}));
  for (double v : zero.tensor().values()) CHECK(std::abs(v - std::log(1.0 / 29.0)) < 1e-15);
  Tensor logits = random_tensor({3, 29}, 9, 5.0);
  const auto p = PosteriorSequence::from_logits(logits);
  for (std::size_t k = 0; k < 29; ++k) logits[29 + k] += 17.5;
  const auto shifted = PosteriorSequence::from_logits(logits);
  CHECK(max_abs_diff(p.tensor(), shifted.tensor()) < 1e-13);
  for (std::size_t t = 0; t < 3; ++t) {
    double s = 0.0;
    for (double v : p.frame(t)) s += std::exp(v);
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
  CHECK(p.max_normalization_error() < 1e-12);
}

TEST_CASE("dilated stack geometry") {
  DilatedStackSpec spec;
  CHECK(spec.layer_receptive_field() == 311);
  spec.dilations = {1, 2, 4, 8};
  CHECK_THROWS_AS(spec.validate(), ParameterError);
}

TEST_CASE("dilated stack with zero weights passes features through") {
  DilatedStackSpec spec;
  spec.width = 4;
  ParamStore store;
  init_dilated_stack(store, spec, 29, 1);
  for (auto& e : store.entries()) std::fill(e.value.values().begin(), e.value.values().end(), 0.0);
  const Tensor fh = random_tensor({12, 4}, 3);
  Tape tape;
  BoundParams bp(tape, store);
  Var logits = dilated_stack(bp, tape.constant(fh), spec, false, 0);
  for (double v : tape.value(logits).values()) CHECK(v == 0.0);
  const auto post = PosteriorSequence::from_logits(tape.value(logits));
  CHECK(std::abs(post.frame(5)[7] - std::log(1.0 / 29.0)) < 1e-15);

  // Identity projection exposes the stack output itself.
  Tensor& w = store.at("decoder.proj.weight");
  Tensor wid({4, 29});
  for (std::size_t c = 0; c < 4; ++c) wid[c * 29 + c] = 1.0;
  w = wid;
  Tape tape2;
  BoundParams bp2(tape2, store);
  const Tensor& out = tape2.value(dilated_stack(bp2, tape2.constant(fh), spec, false, 0));
  for (std::size_t t = 0; t < 12; ++t) {
    for (std::size_t c = 0; c < 4; ++c) CHECK(out[t * 29 + c] == fh[t * 4 + c]);
  }
}

TEST_CASE("dilated stack equals the composed conv oracle") {
  DilatedStackSpec spec;
  spec.width = 3;
  spec.layers = 2;
  ParamStore store;
  init_dilated_stack(store, spec, 5, 17);
  for (auto& e : store.entries()) {
    if (e.name.find(".bias") != std::string::npos) {
      Rng rng(fnv1a(e.name));
      for (double& v : e.value.values()) v = rng.uniform(-0.5, 0.5);
    }
  }
  const Tensor fh = random_tensor({40, 3}, 4);
  Tape tape;
  BoundParams bp(tape, store);
  const Tensor& got = tape.value(dilated_stack(bp, tape.constant(fh), spec, false, 0));

  Tensor x = fh;
  for (std::size_t l = 0; l < 2; ++l) {
    for (std::size_t s = 0; s < 5; ++s) {
      const std::string base = "decoder.l" + std::to_string(l) + ".s" + std::to_string(s);
      const Tensor conv = conv1d_oracle(x, store.at(base + ".kernel"), spec.dilations[s]);
      const Tensor& b = store.at(base + ".bias");
      for (std::size_t t = 0; t < 40; ++t)
        for (std::size_t c = 0; c < 3; ++c) x[t * 3 + c] += std::tanh(conv[t * 3 + c] + b[c]);
    }
  }
  const Tensor& w = store.at("decoder.proj.weight");
  const Tensor& pb = store.at("decoder.proj.bias");
  double worst = 0.0;
  for (std::size_t t = 0; t < 40; ++t)
    for (std::size_t k = 0; k < 5; ++k) {
      double acc = pb[k];
      for (std::size_t c = 0; c < 3; ++c) acc += x[t * 3 + c] * w[c * 5 + k];
      worst = std::max(worst, std::abs(acc - got[t * 5 + k]));
    }
  CHECK(worst < 1e-10);
}

TEST_CASE("dilated stack rejects a residual width mismatch") {
  DilatedStackSpec spec;
  spec.width = 4;
  ParamStore store;
  init_dilated_stack(store, spec, 29, 1);
  Tape tape;
  BoundParams bp(tape, store);
  CHECK_THROWS_AS(dilated_stack(bp, tape.constant(Tensor({6, 5})), spec, false, 0), DimensionError);
}

TEST_CASE("dilated stack gradient check through ctc") {
  DilatedStackSpec spec;
  spec.width = 2;
  spec.layers = 1;
  ParamStore store;
  init_dilated_stack(store, spec, 3, 8);
  Tensor fh = random_tensor({7, 2}, 6);
  std::vector<Tensor*> leaves{&fh};
  for (auto& e : store.entries()) leaves.push_back(&e.value);
  const double err = grad_check(leaves, [&](Tape& t, const std::vector<Var>& p) {
    // Rebind the store entries to the handles grad_check created.
    Var x = p[0];
    std::size_t i = 1;
    for (std::size_t s = 0; s < 5; ++s) {
      Var k = p[i++], b = p[i++];
      x = ops::add(t, x, ops::tanh(t, ops::add_bias(t, ops::conv1d_dilated(t, x, k, spec.dilations[s]), b)));
    }
    Var logits = ops::linear(t, x, p[i], p[i + 1]);
    return ops::ctc(t, ops::log_softmax(t, logits), {0, 1, 0}, 2);
  });
  CHECK(err < 1e-4);
}
