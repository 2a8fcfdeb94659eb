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

#include "neurotext/errors.hpp"
#include "neurotext/ops.hpp"
#include "neurotext/regularizers.hpp"
#include "test_support.hpp"

using namespace neurotext;
using namespace neurotext::testing;

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return ab / std::sqrt(aa * bb);
}

double scalar_of(Tape& t, Var v) { return t.value(v).item(); }

}  // namespace

TEST_CASE("skip-gram window enumeration") {
  const auto pairs = skipgram_pairs({"s1", "s2", "s3"}, 1);
  const std::vector<std::pair<std::string, std::string>> want{
      {"s1", "s2"}, {"s2", "s1"}, {"s2", "s3"}, {"s3", "s2"}};
  CHECK(pairs == want);
  CHECK(skipgram_pairs({"a", "b", "a", "c"}, 5).size() == 6);
}

TEST_CASE("session embeddings are unit norm and follow recording order") {
  const std::vector<std::string> chain{"d1", "d2", "d3", "d4", "d5", "d6"};
  SkipGramOptions o;
  o.window = 1;
  const auto table = train_session_embeddings(chain, o);
  CHECK(table.entries().size() == 6);
  for (const auto& [id, v] : table.entries()) {
    CHECK(v.size() == 8);
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    CHECK(std::abs(n2 - 1.0) < 1e-12);
  }
  double near = 0.0, far = 0.0;
  int nn = 0, nf = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t j = i + 1; j < 6; ++j) {
      const double c = cosine(table.at(chain[i]), table.at(chain[j]));
      if (j - i == 1) {
        near += c;
        ++nn;
      } else if (j - i >= 3) {
        far += c;
        ++nf;
      }
    }
  }
  MESSAGE("adjacent cosine " << near / nn << ", distant " << far / nf);
  CHECK(near / nn > far / nf);

  const auto again = train_session_embeddings(chain, o);
  CHECK(again.at("d3") == table.at("d3"));
  CHECK_THROWS_AS(table.at("d7"), DataError);
}

TEST_CASE("single session gives a zero embedding") {
  const auto table = train_session_embeddings({"only", "only"}, SkipGramOptions{});
  CHECK(table.entries().size() == 1);
  for (double v : table.at("only")) CHECK(v == 0.0);
}

TEST_CASE("session loss examples") {
  Tape t;
  CHECK(scalar_of(t, session_loss(t, t.constant(Tensor({5, 3})), {0.0, 0.0, 0.0})) == 0.0);
  const std::vector<double> q{0.6, 0.0, -0.8};
  Tensor same({4, 3});
  for (std::size_t i = 0; i < 12; ++i) same[i] = q[i % 3];
  CHECK(scalar_of(t, session_loss(t, t.constant(same), q)) == 0.0);

  const Tensor p = random_tensor({3, 3}, 8);
  double want = 0.0;
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) want += (p[r * 3 + c] - q[c]) * (p[r * 3 + c] - q[c]);
  want /= 3.0;
  CHECK(std::abs(scalar_of(t, session_loss(t, t.constant(p), q)) - want) < 1e-14);
  CHECK_THROWS_AS(session_loss(t, t.constant(p), {1.0}), DimensionError);
}

TEST_CASE("feature regularization examples") {
  Tape t;
  const Tensor a = random_tensor({4, 2}, 1), ta = random_tensor({4, 2}, 2);
  const Tensor b = random_tensor({4, 3}, 3), tb = random_tensor({4, 3}, 4);
  Var pa = t.constant(a), pb = t.constant(b);
  CHECK(scalar_of(t, feature_reg_loss(t, {{RegTarget::kMfcc, pa, ta, 0.0}, {RegTarget::kAkt, pb, tb, 0.0}})) == 0.0);
  CHECK(scalar_of(t, feature_reg_loss(t, {{RegTarget::kMfcc, pa, a, 1.0}})) == 0.0);

  double la = 0.0, lb = 0.0;
  for (std::size_t i = 0; i < 8; ++i) la += (a[i] - ta[i]) * (a[i] - ta[i]) / 8.0;
  for (std::size_t i = 0; i < 12; ++i) lb += (b[i] - tb[i]) * (b[i] - tb[i]) / 12.0;
  const double got = scalar_of(t, feature_reg_loss(t, {{RegTarget::kMfcc, pa, ta, 1.0}, {RegTarget::kAkt, pb, tb, 2.0}}));
  CHECK(std::abs(got - (la + 2.0 * lb)) < 1e-14);

  CHECK_THROWS_AS(feature_reg_loss(t, {{RegTarget::kAkt, pa, Tensor({5, 2}), 1.0}}), DimensionError);
}

TEST_CASE("total loss and decay") {
  RegSpec spec;
  spec.horizon_steps = 100;
  Tape t;
  Var ctc = t.constant(Tensor::scalar(2.0));
  Var reg = t.constant(Tensor::scalar(4.0));
  CHECK(scalar_of(t, total_loss(t, ctc, {{reg, 0.5}}, spec, 0)) == 4.0);
  CHECK(scalar_of(t, total_loss(t, ctc, {{reg, 0.5}}, spec, 100)) == 2.0);
  CHECK(scalar_of(t, total_loss(t, ctc, {{reg, 0.5}}, spec, 250)) == 2.0);
  CHECK(scalar_of(t, total_loss(t, ctc, {{reg, 0.5}}, spec, 50)) - 2.0 == 1.0);
  double prev = 2.0;
  for (std::size_t s = 0; s < 130; ++s) {
    CHECK(spec.decay(s) <= prev);
    prev = spec.decay(s);
  }
  spec.alpha_akt = -1.0;
  CHECK_THROWS_AS(spec.validate(), ParameterError);
}

TEST_CASE("regularizer gradients through heads into the latent") {
  ParamStore store;
  init_regression_head(store, "reg.session", 5, 4, 1);
  init_regression_head(store, "reg.mfcc", 5, 3, 2);
  store.add("latent", random_tensor({6, 5}, 3));
  const std::vector<double> q{0.5, -0.5, 0.5, 0.5};
  const Tensor target = random_tensor({6, 3}, 4);
  const double err = store_grad_check(store, [&](BoundParams& bp) {
    Tape& t = bp.tape();
    Var z = ops::tanh(t, bp("latent"));
    Var s = session_loss(t, regression_head(bp, z, "reg.session"), q);
    Var f = feature_reg_loss(t, {{RegTarget::kMfcc, regression_head(bp, z, "reg.mfcc"), target, 0.7}});
    RegSpec spec;
    spec.horizon_steps = 10;
    return total_loss(t, ops::sum_squares(t, z), {{s, 1.0}, {f, 1.0}}, spec, 3);
  });
  CHECK(err < 1e-4);
}

TEST_CASE("joint projection") {
  // Rank-2 data in 4 dims: two components capture all variance.
  Tensor x({50, 4});
  Rng rng(3);
  for (std::size_t t = 0; t < 50; ++t) {
    const double u = rng.normal(), v = rng.normal();
    const double row[4] = {u + 1.0, u - v, 2.0 * v, -u + 3.0};
    for (std::size_t j = 0; j < 4; ++j) x[t * 4 + j] = row[j];
  }
  const JointProjection p = JointProjection::fit({&x}, 2);
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t b = 0; b < 2; ++b) {
      double dot = 0.0;
      for (std::size_t j = 0; j < 4; ++j) dot += p.basis[j * 2 + a] * p.basis[j * 2 + b];
      CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-12);
    }
  }
  const Tensor z = p.apply(x);
  double kept = 0.0, total = 0.0;
  for (std::size_t t = 0; t < 50; ++t) {
    for (std::size_t j = 0; j < 4; ++j) total += std::pow(x[t * 4 + j] - p.mean[j], 2);
    for (std::size_t k = 0; k < 2; ++k) kept += z[t * 2 + k] * z[t * 2 + k];
  }
  CHECK(std::abs(kept - total) < 1e-9 * total);

  Tape t;
  Tensor left({50, 1}), right({50, 3});
  for (std::size_t i = 0; i < 50; ++i) {
    left[i] = x[i * 4];
    for (std::size_t j = 0; j < 3; ++j) right[i * 3 + j] = x[i * 4 + 1 + j];
  }
  CHECK(scalar_of(t, joint_feature_loss(t, t.constant(z), {&left, &right}, p)) < 1e-24);
  CHECK_THROWS_AS(JointProjection::fit({&x}, 5), ParameterError);
}

TEST_CASE("resampling to the latent rate") {
  Tensor ramp({40, 2});
  for (std::size_t t = 0; t < 40; ++t) {
    ramp[t * 2] = static_cast<double>(t);
    ramp[t * 2 + 1] = 7.0;
  }
  const Tensor r = resample_to_frames(ramp, 8, 5);
  CHECK(r.shape() == Shape{5, 2});
  for (std::size_t j = 0; j < 5; ++j) {
    CHECK(r[j * 2] == doctest::Approx(8.0 * j + 3.5).epsilon(1e-15));
    CHECK(r[j * 2 + 1] == 7.0);
  }
  // Frame centers past the end clamp to the last sample.
  const Tensor tail = resample_to_frames(ramp.reshaped({40, 2}), 8, 6);
  CHECK(tail[5 * 2] == 39.0);
}

TEST_CASE("session variance ratio") {
  std::vector<Tensor> z;
  std::vector<std::string> s;
  // Session offsets +-1, utterance offsets +-0.1 around them.
  for (int sess = 0; sess < 2; ++sess) {
    for (int u = 0; u < 2; ++u) {
      const double v = (sess ? 1.0 : -1.0) + (u ? 0.1 : -0.1);
      z.push_back(Tensor({3, 1}, {v, v, v}));
      s.push_back(sess ? "b" : "a");
    }
  }
  // between = 2 * (1^2 + 1^2) / 1 = 4, within = 4 * 0.01 / 2 = 0.02.
  CHECK(session_variance_ratio(z, s) == doctest::Approx(200.0).epsilon(1e-12));
  CHECK_THROWS_AS(session_variance_ratio({z[0]}, {"a"}), DataError);
}
