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
#include <map>

#include "neurotext/arpa.hpp"
#include "neurotext/beam_search.hpp"
#include "neurotext/errors.hpp"
#include "test_support.hpp"

using namespace neurotext;
using namespace neurotext::testing;

namespace {

const char* kFixture = R"(\data\
ngram 1=5
ngram 2=2

\1-grams:
-99.000000	<s>	-0.50
-0.50	a	-0.20
-0.60	b	-0.10
-0.70	c
-1.25	</s>

\2-grams:
-0.40	<s> a
-0.30	a b

\end\
)";

PosteriorSequence from_probs(std::size_t frames, std::size_t symbols, const std::vector<double>& p) {
  std::vector<double> lp(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) lp[i] = std::log(p[i]);
  return PosteriorSequence(Tensor({frames, symbols}, lp));
}

/// Frames peaked on the given characters of the full alphabet; '_' is the blank.
std::vector<double> peaked_frames(const std::string& chars, double peak = 0.999) {
  const std::string alphabet = DecodeConfig{}.alphabet;
  std::vector<double> out;
  for (char c : chars) {
    std::vector<double> f(29, (1.0 - peak) / 28.0);
    f[c == '_' ? 28 : alphabet.find(c)] = peak;
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

std::vector<std::string> words_of(std::initializer_list<const char*> ws) {
  return {ws.begin(), ws.end()};
}

/// Summed path probability per label string over all paths.
std::map<std::string, double> exhaustive_strings(const std::vector<double>& lp, std::size_t T,
                                                 const std::string& alphabet) {
  const std::size_t V = alphabet.size() + 1;
  std::map<std::string, double> out;
  for_each_path(T, V, [&](const std::vector<int>& path) {
    std::string s;
    for (int k : ctc_collapse(path, static_cast<int>(alphabet.size()))) s += alphabet[k];
    double l = 0.0;
    for (std::size_t t = 0; t < T; ++t) l += lp[t * V + path[t]];
    out[s] += std::exp(l);
  });
  return out;
}

}  // namespace

TEST_CASE("arpa parse fidelity and backoff scoring") {
  const ArpaModel m = parse_arpa_text(kFixture);
  CHECK(m.order() == 2);
  CHECK(m.count(1) == 5);
  CHECK(m.count(2) == 2);
  const auto ab = words_of({"a", "b"});
  CHECK(m.find(ab)->log10_prob == std::strtod("-0.30", nullptr));
  CHECK(*m.find(words_of({"a"}))->log10_backoff == std::strtod("-0.20", nullptr));
  CHECK(!m.find(words_of({"c"}))->log10_backoff);

  const auto ctx_a = words_of({"a"});
  CHECK(std::abs(m.score_word(ctx_a, "b") - (-0.30)) < 1e-12);
  CHECK(std::abs(m.score_word(ctx_a, "c") - (-0.90)) < 1e-12);
  CHECK(std::abs(m.score_word({}, "c") - (-0.70)) < 1e-12);
  // b has no bigrams as a history; its backoff still applies.
  const auto ctx_b = words_of({"b"});
  CHECK(std::abs(m.score_word(ctx_b, "a") - (-0.60)) < 1e-12);
  // Context longer than order-1 is truncated.
  const auto ctx_long = words_of({"c", "c", "a"});
  CHECK(m.score_word(ctx_long, "b") == m.score_word(ctx_a, "b"));
  CHECK(m.score_word(ctx_a, "zebra") == kUnknownFloor);
}

TEST_CASE("arpa unigram-only model") {
  const ArpaModel m = parse_arpa_text(
      "\\data\\\nngram 1=3\n\n\\1-grams:\n-0.5 x\n-0.6 y\n-0.7 z\n\\end\\\n");
  CHECK(m.order() == 1);
  CHECK(m.count(1) == 3);
  CHECK(m.score_word(words_of({"x"}), "y") == -0.6);
}

TEST_CASE("arpa parse errors carry line numbers") {
  std::string truncated = kFixture;
  truncated.resize(truncated.find("\\end\\"));
  try {
    parse_arpa_text(truncated);
    FAIL("expected error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("\\end\\") != std::string::npos);
  }
  std::string mismatch = kFixture;
  mismatch.replace(mismatch.find("ngram 2=2"), 9, "ngram 2=3");
  try {
    parse_arpa_text(mismatch);
    FAIL("expected error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("count mismatch") != std::string::npos);
    CHECK(e.line() > 0);
  }
  std::string bad = kFixture;
  bad.replace(bad.find("-0.30"), 5, "-0.3x");
  try {
    parse_arpa_text(bad);
    FAIL("expected error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 14);
  }
  std::string orphan = kFixture;
  orphan.replace(orphan.find("-0.30\ta b"), 9, "-0.30\tc b");
  CHECK_THROWS_AS(parse_arpa_text(orphan), ParseError);
}

TEST_CASE("kneser-ney on a repeated two-word sentence") {
  for (int n : {1, 10, 100}) {
    const std::vector<std::string> corpus(static_cast<std::size_t>(n), "a b");
    const ArpaModel m = train_ngram(corpus, 2, 0.75);
    // Continuation counts a:1 b:1 </s>:1; outcome space {a, b, </s>, <unk>}.
    const double p_b = 0.25 / 3.0 + 0.75 * 1.0 / 4.0;
    const double want = (n - 0.75) / n + 0.75 / n * p_b;
    CHECK(std::abs(std::pow(10.0, m.score_word(words_of({"a"}), "b")) - want) < 1e-12);
  }
  const ArpaModel m = train_ngram(std::vector<std::string>(10, "a b"), 2, 0.75);
  CHECK(std::abs(std::pow(10.0, m.score_word(words_of({"a"}), "b")) - 0.9453125) < 1e-12);
  CHECK_THROWS_AS(train_ngram({}, 4), DataError);
  CHECK_THROWS_AS(train_ngram({"a"}, 5), ParameterError);
}

namespace {

std::vector<std::string> random_corpus(std::uint64_t seed, std::size_t sentences) {
  Rng rng(seed);
  const std::vector<std::string> words{"the", "cat", "sat", "on", "mat", "a", "dog", "ran", "to", "it"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < sentences; ++i) {
    std::string s;
    const std::size_t len = 1 + rng.below(7);
    std::size_t w = rng.below(words.size());
    for (std::size_t j = 0; j < len; ++j) {
      if (j) s += ' ';
      s += words[w];
      w = (w * 3 + 1 + rng.below(3)) % words.size();
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace

TEST_CASE("trained conditionals sum to one") {
  for (std::size_t order : {1ul, 2ul, 3ul, 4ul}) {
    const ArpaModel m = train_ngram(random_corpus(order, 60), order);
    const auto vocab = m.vocabulary();
    std::vector<std::string> ctx_words = vocab;
    ctx_words.push_back("<s>");
    ctx_words.push_back("never-seen");
    Rng rng(99 + order);
    for (int q = 0; q < 50; ++q) {
      std::vector<std::string> ctx;
      const std::size_t len = rng.below(order);
      for (std::size_t i = 0; i < len; ++i) ctx.push_back(ctx_words[rng.below(ctx_words.size())]);
      double sum = 0.0;
      for (const auto& w : vocab) sum += std::pow(10.0, m.score_word(ctx, w));
      CHECK(std::abs(sum - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("arpa serialize round trip") {
  const ArpaModel trained = train_ngram(random_corpus(3, 80), 4);
  const std::string text = serialize_arpa_text(trained);
  const ArpaModel once = parse_arpa_text(text);
  const std::string text2 = serialize_arpa_text(once);
  CHECK(text == text2);
  const ArpaModel twice = parse_arpa_text(text2);
  const auto vocab = trained.vocabulary();
  Rng rng(11);
  for (int q = 0; q < 100; ++q) {
    std::vector<std::string> ctx;
    for (std::size_t i = rng.below(4); i > 0; --i) ctx.push_back(vocab[rng.below(vocab.size())]);
    const std::string w = vocab[rng.below(vocab.size())];
    CHECK(once.score_word(ctx, w) == twice.score_word(ctx, w));
    // Six printed decimals, at most four rounded terms per query.
    CHECK(std::abs(once.score_word(ctx, w) - trained.score_word(ctx, w)) < 2e-6);
  }
}

TEST_CASE("beam width one equals greedy collapse") {
  const auto post = from_probs(4, 29, peaked_frames("aa_b", 0.9));
  DecodeConfig cfg;
  cfg.beam_width = 1;
  CHECK(greedy_decode(post) == "ab");
  CHECK(beam_decode(post, cfg).front().text == "ab");
  cfg.beam_width = 0;
  CHECK_THROWS_AS(beam_decode(post, cfg), ParameterError);
}

TEST_CASE("no-LM beam search equals exhaustive maximization") {
  Rng rng(31);
  DecodeConfig cfg;
  cfg.alphabet = "ab";
  cfg.beam_width = 200;
  int cases = 0;
  for (std::size_t T = 1; T <= 6; ++T) {
    for (int rep = 0; rep < 40; ++rep) {
      const auto lp = random_logpost(T, 3, rng, 1.0 + rep % 4);
      const auto all = exhaustive_strings(lp, T, "ab");
      auto best = all.begin();
      for (auto it = all.begin(); it != all.end(); ++it) {
        if (it->second > best->second) best = it;
      }
      const auto hyps = beam_decode(PosteriorSequence(Tensor({T, 3}, lp)), cfg);
      CHECK(hyps.front().text == best->first);
      CHECK(std::abs(hyps.front().score - std::log(best->second)) < 1e-9);
      CHECK(hyps.size() == all.size());
      ++cases;
    }
  }
  CHECK(cases == 240);
}

TEST_CASE("lm fusion breaks a near acoustic tie") {
  std::vector<std::string> corpus(20, "i think there is");
  corpus.push_back("their house");
  corpus.push_back("i think so");
  auto lm = std::make_shared<const ArpaModel>(train_ngram(corpus, 4));

  const std::string alphabet = DecodeConfig{}.alphabet;
  auto frames = peaked_frames("i_ thhink_ the");
  auto mix = [&](char x, double px, char y) {
    std::vector<double> f(29, 1e-6);
    f[alphabet.find(x)] = px;
    f[alphabet.find(y)] = 1.0 - px - 27e-6;
    frames.insert(frames.end(), f.begin(), f.end());
  };
  mix('i', 0.55, 'r');
  mix('r', 0.55, 'e');
  const auto tail = peaked_frames("_");
  frames.insert(frames.end(), tail.begin(), tail.end());
  const auto post = from_probs(frames.size() / 29, 29, frames);

  DecodeConfig plain;
  plain.beam_width = 16;
  CHECK(beam_decode(post, plain).front().text == "i think their");
  DecodeConfig fused = plain;
  fused.lm = lm;
  const auto hyps = beam_decode(post, fused);
  CHECK(hyps.front().text == "i think there");
  DecodeConfig off = fused;
  off.lm_weight = 0.0;
  const auto a = beam_decode(post, off), b = beam_decode(post, plain);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].text == b[i].text);
    CHECK(a[i].score == b[i].score);
  }
}

TEST_CASE("streaming equals batch at every split") {
  Rng rng(8);
  std::vector<std::string> corpus{"a cat", "the cat sat", "a bat", "that cat ate"};
  DecodeConfig cfg;
  cfg.beam_width = 6;
  cfg.lm = std::make_shared<const ArpaModel>(train_ngram(corpus, 3));
  cfg.word_bonus = 0.3;
  for (int rep = 0; rep < 4; ++rep) {
    const std::size_t T = 14;
    const PosteriorSequence post(Tensor({T, 29}, random_logpost(T, 29, rng, 4.0)));
    const auto batch = beam_decode(post, cfg);
    for (std::size_t cut = 0; cut <= T; ++cut) {
      StreamDecoder dec(cfg);
      dec.feed(post.slice(0, cut));
      const std::string mid = dec.best_text();
      dec.feed(post.slice(cut, T));
      const auto streamed = dec.flush();
      REQUIRE(streamed.size() == batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        CHECK(streamed[i].text == batch[i].text);
        CHECK(streamed[i].score == batch[i].score);
      }
      CHECK(mid.size() <= T);
    }
    StreamDecoder whole(cfg);
    whole.feed(post);
    CHECK(whole.flush().front().score == batch.front().score);
  }
  StreamDecoder dec(cfg);
  dec.flush();
  CHECK_THROWS_AS(dec.feed(PosteriorSequence(Tensor({1, 29}))), UsageError);
}

TEST_CASE("beam width and best score") {
  // Exact once the beam holds every prefix, so the widest beam dominates.
  Rng rng(123);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t T = 1 + rng.below(6);
    const PosteriorSequence post(Tensor({T, 3}, random_logpost(T, 3, rng, 2.0)));
    DecodeConfig cfg;
    cfg.alphabet = "ab";
    cfg.beam_width = 128;
    const double top = beam_decode(post, cfg).front().score;
    for (std::size_t w : {1ul, 2ul, 4ul, 8ul, 16ul, 32ul}) {
      cfg.beam_width = w;
      CHECK(beam_decode(post, cfg).front().score <= top);
    }
  }

  // Under pruning, a wider beam can lose the prefix a narrower one kept.
  Rng search(123);
  int violations = 0, trials = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t T = 6 + search.below(10);
    const PosteriorSequence post(Tensor({T, 4}, random_logpost(T, 4, search, 2.0)));
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t w : {1ul, 2ul, 4ul, 8ul, 16ul, 64ul}) {
      DecodeConfig cfg;
      cfg.alphabet = "ab ";
      cfg.beam_width = w;
      const double s = beam_decode(post, cfg).front().score;
      if (s < prev) ++violations;
      prev = std::max(prev, s);
      ++trials;
    }
  }
  MESSAGE("width increases lowering the best score: " << violations << " of " << trials);
  CHECK(violations < trials / 20);
}
