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

#include <functional>
#include <map>

#include "neurotext/errors.hpp"
#include "neurotext/eval.hpp"
#include "neurotext/rng.hpp"
#include "test_support.hpp"

using namespace neurotext;
using namespace neurotext::testing;

namespace {

// Memoised recursion over suffixes, independent of the table fill in eval.cpp.
std::size_t oracle_distance(const std::vector<int>& a, const std::vector<int>& b) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    const auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    const std::size_t r = std::min({go(i + 1, j + 1) + (a[i] == b[j] ? 0 : 1), go(i + 1, j) + 1, go(i, j + 1) + 1});
    memo[key] = r;
    return r;
  };
  return go(0, 0);
}

std::vector<int> random_seq(Rng& rng) {
  std::vector<int> s(rng.below(9));
  for (int& v : s) v = static_cast<int>(rng.below(4));
  return s;
}

ModelSpec tiny_spec() {
  ModelSpec s;
  s.encoder.grid_w = s.encoder.grid_h = 8;
  s.encoder.inception = InceptionSpec::standard({4, 4, 4}, {{2, 2}, {2, 2}, {2, 2}});
  s.encoder.lstm_hidden = 4;
  s.decoder.width = 8;
  s.decoder.layers = 1;
  return s;
}

Dataset tiny_data() {
  DatasetSpec spec;
  spec.corpus.train_sentences = 6;
  spec.corpus.test_sentences = 4;
  return generate_dataset(spec);
}

}  // namespace

TEST_CASE("edit distance matches an independent recursion") {
  Rng rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto a = random_seq(rng), b = random_seq(rng);
    const EditCounts c = edit_distance(a, b);
    REQUIRE(c.distance == oracle_distance(a, b));
    CHECK(c.sub + c.del + c.ins == c.distance);
    CHECK(a.size() + c.ins - c.del == b.size());
  }
}

TEST_CASE("one substituted word out of six") {
  const ErrorRate r = wer({"there is chaos in the kitchen"}, {"there is chaos in the catch"});
  CHECK(r.edits.sub == 1);
  CHECK(r.edits.del == 0);
  CHECK(r.edits.ins == 0);
  CHECK(r.ref_tokens == 6);
  CHECK(r.rate == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("ties resolve to substitutions") {
  const EditCounts c = edit_distance(std::vector<char>{'a', 'b'}, std::vector<char>{'b', 'a'});
  CHECK(c.distance == 2);
  CHECK(c.sub == 2);
  const EditCounts d = edit_distance(std::vector<std::string>{"x"}, std::vector<std::string>{"y"});
  CHECK(d.sub == 1);
  CHECK(d.del == 0);
}

TEST_CASE("corpus rates sum edits before dividing") {
  const ErrorRate r = wer({"a b c d", "e"}, {"a b c d", ""});
  CHECK(r.edits.del == 1);
  CHECK(r.rate == doctest::Approx(1.0 / 5.0));
  CHECK(cer({"ab"}, {"ab"}).rate == 0.0);
  CHECK(cer({"abcd"}, {"ab"}).rate == doctest::Approx(0.5));
  CHECK(wer({""}, {""}).rate == 0.0);
  CHECK_THROWS_AS(wer({"a"}, {}), DimensionError);
}

TEST_CASE("cutoff curve anchors at the baseline and at full removal") {
  const Dataset ds = tiny_data();
  const Model m = Model::init(tiny_spec(), 3);
  DecodeConfig cfg;
  cfg.beam_width = 4;
  const auto test = ds.indices("test");
  const double base = transcript_wer(decode_utterances(m, ds, test, cfg, 0.25)).rate;
  const CutoffCurve on = cutoff_curve(m, ds, test, CutoffSide::kOnset, {0.0, 100.0}, cfg, 0.25);
  REQUIRE(on.points.size() == 2);
  CHECK(on.points[0].wer == base);
  CHECK(on.points[0].skipped == 0);
  CHECK(on.points[1].skipped == test.size());
  CHECK(on.points[1].wer == 1.0);
  const CutoffCurve off = cutoff_curve(m, ds, test, CutoffSide::kOffset, {0.0}, cfg, 0.25);
  CHECK(off.points[0].wer == base);
  CHECK_THROWS_AS(cutoff_curve(m, ds, test, CutoffSide::kOnset, {-1.0}, cfg, 0.25), ParameterError);
}

TEST_CASE("incremental rows end at the full decode") {
  const Dataset ds = tiny_data();
  const Model m = Model::init(tiny_spec(), 5);
  DecodeConfig cfg;
  cfg.beam_width = 4;
  const std::size_t i = ds.indices("test").front();
  const IncrementalTrial t = incremental_trial(m, ds.utterances[i], cfg, 0.2, 0.25);
  const Utterance u = nominal_window(ds.utterances[i], 0.25);
  const double seconds = static_cast<double>(u.frames()) / u.sample_rate;
  CHECK(t.rows.size() == static_cast<std::size_t>(std::ceil(seconds / 0.2 - 1e-9)));
  CHECK(t.rows.back().text == decode_utterances(m, ds, {i}, cfg, 0.25).front().hypothesis);
  for (std::size_t k = 1; k < t.rows.size(); ++k) CHECK(t.rows[k].time_s > t.rows[k - 1].time_s);
}

TEST_CASE("report writers") {
  const std::vector<Series> s{{"onset", {0.0, 0.5}, {0.1, 0.4}}, {"offset", {0.0, 0.5}, {0.1, 0.3}}};
  const std::string csv = series_csv(s, "cutoff_s");
  CHECK(csv.find("onset,0.5,0.4") != std::string::npos);
  const std::string svg = svg_line_chart("WER vs cutoff", "cutoff (s)", "WER", s);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("offset") != std::string::npos);
}
