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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include "neurotext/arpa.hpp"
#include "neurotext/errors.hpp"
#include "neurotext/blob.hpp"
#include "neurotext/synthdata.hpp"
#include "neurotext/vocab.hpp"
#include "test_support.hpp"

using namespace neurotext;
using namespace neurotext::testing;

namespace {

ForwardModelSpec quiet_spec() {
  ForwardModelSpec s;
  s.noise = 0.0;
  s.mfcc_noise = 0.0;
  return s;
}

std::vector<double> utterance_mean(const Utterance& u) {
  const std::size_t C = u.neural.size() / u.frames();
  std::vector<double> m(C, 0.0);
  for (std::size_t i = 0; i < u.neural.size(); ++i) m[i % C] += u.neural[i] / static_cast<double>(u.frames());
  return m;
}

/// Leave-one-out nearest-centroid accuracy on utterance means.
double session_accuracy(const std::vector<Utterance>& us) {
  std::vector<std::vector<double>> means;
  for (const auto& u : us) means.push_back(utterance_mean(u));
  const std::size_t C = means[0].size();
  int correct = 0;
  for (std::size_t i = 0; i < us.size(); ++i) {
    std::map<std::string, std::pair<std::vector<double>, int>> cents;
    for (std::size_t j = 0; j < us.size(); ++j) {
      if (j == i) continue;
      auto& [c, n] = cents[us[j].session_id];
      c.resize(C, 0.0);
      for (std::size_t k = 0; k < C; ++k) c[k] += means[j][k];
      ++n;
    }
    std::string best;
    double best_d = 1e300;
    for (auto& [id, cn] : cents) {
      double d = 0.0;
      for (std::size_t k = 0; k < C; ++k) d += std::pow(means[i][k] - cn.first[k] / cn.second, 2);
      if (d < best_d) {
        best_d = d;
        best = id;
      }
    }
    correct += best == us[i].session_id;
  }
  return static_cast<double>(correct) / static_cast<double>(us.size());
}

}  // namespace

TEST_CASE("corpus generation") {
  const auto a = gen_corpus(30, 200, 3, 6, 5);
  CHECK(a == gen_corpus(30, 200, 3, 6, 5));
  CHECK(a != gen_corpus(30, 200, 3, 6, 6));
  std::set<std::string> words;
  for (const auto& s : a) {
    for (char c : s) CHECK(CharVocab::contains(c));
    std::size_t n = 0;
    for (const auto& w : split_words(s)) {
      words.insert(w);
      ++n;
    }
    CHECK(n >= 3);
    CHECK(n <= 6);
  }
  CHECK(words.size() <= 30);
  CHECK_THROWS_AS(gen_corpus(1, 5, 3, 6, 1), ParameterError);
}

TEST_CASE("utterance determinism and duration bounds") {
  const ForwardModel model = ForwardModel::build(quiet_spec());
  const auto session = SessionProfile::make("s1", 64, SessionSpec{}, 3);
  const std::string text = "dog ate";
  const Utterance a = synth_utterance(text, session, model, 11);
  const Utterance b = synth_utterance(text, session, model, 11);
  CHECK(max_abs_diff(a.neural, b.neural) == 0.0);
  CHECK(max_abs_diff(a.akt, b.akt) == 0.0);
  CHECK(max_abs_diff(a.mfcc, b.mfcc) == 0.0);
  const std::size_t k = text.size();
  CHECK(a.offset - a.onset >= 10 * k);
  CHECK(a.offset - a.onset <= 30 * k);
  CHECK(a.frames() == a.offset - a.onset + 200);
  CHECK(a.akt.shape() == Shape{a.frames(), 33});
  CHECK(a.mfcc.shape() == Shape{a.frames(), 26});
  CHECK(a.neural.shape() == Shape{a.frames(), 8, 8, 2});

  ForwardModelSpec bare = quiet_spec();
  bare.pad_s = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Utterance u = synth_utterance("abc de", SessionProfile::identity("x", 64), ForwardModel::build(bare), seed);
    CHECK(u.frames() >= 60);
    CHECK(u.frames() <= 180);
  }
  CHECK_THROWS_AS(synth_utterance("Dog", session, model, 1), DataError);
}

TEST_CASE("sessions differ exactly by their transform") {
  const ForwardModel model = ForwardModel::build(quiet_spec());
  const Utterance clean = synth_utterance("move", SessionProfile::identity("c", 64), model, 4);
  const auto sess = SessionProfile::make("s2", 64, SessionSpec{}, 9);
  const Utterance u = synth_utterance("move", sess, model, 4);
  CHECK(std::count(sess.dead.begin(), sess.dead.end(), true) == 3);
  const double w = 2.0 * std::numbers::pi * sess.drift_hz / 200.0;
  double worst = 0.0;
  for (std::size_t t = 0; t < u.frames(); ++t) {
    for (std::size_t e = 0; e < 64; ++e) {
      for (std::size_t c = 0; c < 2; ++c) {
        const std::size_t i = (t * 64 + e) * 2 + c;
        double want = 0.0;
        if (!sess.dead[e]) {
          want = sess.gain[e * 2 + c] * clean.neural[i] + sess.offset[e * 2 + c] +
                 sess.drift_amp * std::sin(w * static_cast<double>(t) + sess.drift_phase[e] + clean.drift_phase);
        }
        worst = std::max(worst, std::abs(u.neural[i] - want));
      }
    }
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("jitter") {
  const ForwardModel model = ForwardModel::build(ForwardModelSpec{});
  const Utterance u = synth_utterance("a quick test", SessionProfile::identity("s", 64), model, 2);
  const JitterResult none = jitter(u, 0.0, 1);
  CHECK(max_abs_diff(none.utterance.neural, u.neural) == 0.0);
  CHECK(none.utterance.onset == u.onset);

  std::vector<double> shifts;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const JitterResult r = jitter(u, 0.25, s);
    CHECK(r.utterance.text == u.text);
    CHECK(!r.clamped);
    CHECK(r.utterance.offset - r.utterance.onset == u.offset - u.onset);
    CHECK(r.utterance.neural.dim(0) == r.utterance.akt.dim(0));
    shifts.push_back(r.start_shift_s);
  }
  std::sort(shifts.begin(), shifts.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    const double cdf = (shifts[i] + 0.25) / 0.5;
    ks = std::max({ks, std::abs(cdf - static_cast<double>(i) / 1000.0),
                   std::abs(cdf - static_cast<double>(i + 1) / 1000.0)});
  }
  // 5% critical value for n = 1000.
  CHECK(ks < 1.36 / std::sqrt(1000.0));

  // A window wider than the padding is pulled back to keep all speech.
  const JitterResult wide = jitter(u, 0.6, 3);
  CHECK(wide.clamped);
  CHECK(wide.utterance.onset <= wide.utterance.offset);
  CHECK(wide.utterance.offset <= wide.utterance.frames());
}

TEST_CASE("per-session z-scoring") {
  const ForwardModel model = ForwardModel::build(quiet_spec());
  SessionSpec ss;
  ss.drift_amp = 0.0;
  ss.dead_fraction = 0.0;
  SessionProfile s1 = SessionProfile::make("s1", 64, ss, 1);
  SessionProfile s2 = s1;
  s2.id = "s2";
  for (auto& g : s2.gain) g *= 1.7;
  for (auto& o : s2.offset) o -= 0.4;
  std::vector<Utterance> us;
  for (int i = 0; i < 3; ++i) {
    us.push_back(synth_utterance("one two", s1, model, i));
    us.push_back(synth_utterance("one two", s2, model, i));
  }
  const ZScoreReport rep = zscore_per_session(us);
  CHECK(rep.flagged.empty());
  for (const char* id : {"s1", "s2"}) {
    std::vector<double> mean(128, 0.0);
    std::size_t n = 0;
    for (const auto& u : us) {
      if (u.session_id != id) continue;
      for (std::size_t j = 0; j < u.neural.size(); ++j) mean[j % 128] += u.neural[j];
      n += u.frames();
    }
    for (double m : mean) CHECK(std::abs(m / n) < 1e-10);
  }
  for (int i = 0; i < 3; ++i) CHECK(max_abs_diff(us[2 * i].neural, us[2 * i + 1].neural) < 1e-10);

  std::vector<Utterance> again = us;
  zscore_per_session(again);
  for (std::size_t i = 0; i < us.size(); ++i) CHECK(max_abs_diff(again[i].neural, us[i].neural) < 1e-12);

  SessionProfile dead = SessionProfile::make("s3", 64, SessionSpec{}, 2);
  std::vector<Utterance> d{synth_utterance("hi", dead, model, 0)};
  CHECK(zscore_per_session(d).flagged.size() == 2 * 3);
}

TEST_CASE("noise-free neural frames linearly determine articulation") {
  const ForwardModel model = ForwardModel::build(quiet_spec());
  SessionSpec ss;
  ss.drift_amp = 0.0;
  const SessionProfile sess = SessionProfile::make("s1", 64, ss, 5);
  const auto texts = gen_corpus(30, 8, 3, 5, 2);
  std::vector<Eigen::VectorXd> xs, ys;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const Utterance u = synth_utterance(texts[i], sess, model, i);
    for (std::size_t t = 0; t < u.frames(); ++t) {
      // High-gamma channel of each electrode at its own lag.
      Eigen::VectorXd x(65);
      x[64] = 1.0;
      for (std::size_t e = 0; e < 64; ++e) {
        const long s = static_cast<long>(t) - static_cast<long>(model.latency[e]);
        x[static_cast<long>(e)] = s >= 0 ? u.neural[(static_cast<std::size_t>(s) * 64 + e) * 2] : sess.offset[e * 2];
      }
      Eigen::VectorXd y(33);
      for (std::size_t k = 0; k < 33; ++k) y[static_cast<long>(k)] = u.akt[t * 33 + k];
      xs.push_back(x);
      ys.push_back(y);
    }
  }
  const long n = static_cast<long>(xs.size());
  Eigen::MatrixXd X(n, 65), Y(n, 33);
  for (long i = 0; i < n; ++i) {
    X.row(i) = xs[static_cast<std::size_t>(i)].transpose();
    Y.row(i) = ys[static_cast<std::size_t>(i)].transpose();
  }
  const Eigen::MatrixXd XtX = X.transpose() * X + 1e-8 * Eigen::MatrixXd::Identity(65, 65);
  const Eigen::MatrixXd W = XtX.ldlt().solve(X.transpose() * Y);
  const Eigen::MatrixXd R = Y - X * W;
  const Eigen::RowVectorXd mu = Y.colwise().mean();
  const double ss_res = R.squaredNorm();
  const double ss_tot = (Y.rowwise() - mu).squaredNorm();
  const double r2 = 1.0 - ss_res / ss_tot;
  MESSAGE("ridge R^2 " << r2);
  CHECK(r2 > 0.99);
}

TEST_CASE("session separability before and after z-scoring") {
  ForwardModelSpec spec;
  const ForwardModel model = ForwardModel::build(spec);
  std::vector<SessionProfile> sessions;
  for (int s = 0; s < 3; ++s) sessions.push_back(SessionProfile::make("s" + std::to_string(s), 64, SessionSpec{}, 40 + s));
  const auto texts = gen_corpus(30, 36, 3, 5, 8);
  std::vector<Utterance> us;
  for (std::size_t i = 0; i < texts.size(); ++i) us.push_back(synth_utterance(texts[i], sessions[i % 3], model, i));
  const double before = session_accuracy(us);
  zscore_per_session(us);
  const double after = session_accuracy(us);
  MESSAGE("nearest-centroid session accuracy " << before << " -> " << after);
  CHECK(before > 0.9);
  CHECK(after < before);
}

TEST_CASE("dataset round trip and checksum") {
  DatasetSpec spec;
  spec.corpus.train_sentences = 6;
  spec.corpus.test_sentences = 3;
  const Dataset ds = generate_dataset(spec);
  CHECK(ds.indices("train").size() == 6);
  CHECK(ds.indices("test").size() == 3);
  CHECK(ds.session_order() == std::vector<std::string>{"s1", "s2", "s3"});
  const auto dir = std::filesystem::temp_directory_path() / "neurotext_ds_test";
  std::filesystem::remove_all(dir);
  save_dataset(ds, dir.string());
  const Dataset back = load_dataset(dir.string());
  REQUIRE(back.utterances.size() == ds.utterances.size());
  for (std::size_t i = 0; i < ds.utterances.size(); ++i) {
    const auto &a = ds.utterances[i], &b = back.utterances[i];
    CHECK(a.text == b.text);
    CHECK(a.session_id == b.session_id);
    CHECK(a.split == b.split);
    CHECK(a.onset == b.onset);
    CHECK(max_abs_diff(a.neural, b.neural) == 0.0);
    CHECK(max_abs_diff(a.akt, b.akt) == 0.0);
    CHECK(max_abs_diff(a.mfcc, b.mfcc) == 0.0);
  }
  CHECK(back.sessions[1].gain == ds.sessions[1].gain);
  const auto dir2 = std::filesystem::temp_directory_path() / "neurotext_ds_test2";
  std::filesystem::remove_all(dir2);
  save_dataset(generate_dataset(spec), dir2.string());
  for (const char* f : {"dataset.json", "manifest.jsonl", "neural.bin", "akt.bin", "mfcc.bin"}) {
    CHECK(file_checksum((dir / f).string()) == file_checksum((dir2 / f).string()));
  }
  {
    std::fstream f(dir / "akt.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(40);
    f.put('\x7f');
  }
  try {
    load_dataset(dir.string());
    FAIL("expected checksum error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("akt.bin checksum mismatch") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}
