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

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "neurotext/arpa.hpp"
#include "neurotext/text_decoder.hpp"

namespace neurotext {

struct DecodeConfig {
  std::size_t beam_width = 100;
  double lm_weight = 1.5;
  double word_bonus = 0.0;
  /// Shared read-only; null decodes without a language model.
  std::shared_ptr<const ArpaModel> lm;
  /// Characters for posterior columns 0..n-1; column n is the blank.
  std::string alphabet = "abcdefghijklmnopqrstuvwxyz '";
  /// Score the end-of-sentence token when flushing.
  bool score_sentence_end = true;

  void validate() const;
};

struct Hypothesis {
  std::string text;
  /// Natural-log acoustic probability plus the weighted LM terms.
  double score = 0.0;
  double acoustic = 0.0;
  double lm = 0.0;
};

struct BeamState {
  std::string prefix;
  double p_blank = 0.0;
  double p_nonblank = 0.0;
  /// Accumulated lm_weight * ln P(words) + word_bonus * words, natural log.
  double lm_score = 0.0;
  std::vector<std::string> lm_context;
  /// Characters since the last space.
  std::string partial_word;

  double acoustic() const;
  double total() const { return acoustic() + lm_score; }
};

/// Prefix beam search that accepts posterior frames incrementally.
class StreamDecoder {
 public:
  explicit StreamDecoder(DecodeConfig config);

  void feed(const PosteriorSequence& chunk);
  /// Best prefix so far, ranked without finalizing the open word.
  std::string best_text() const;
  const std::vector<BeamState>& beams() const { return beams_; }
  std::size_t frames_seen() const { return frames_; }
  /// Scores the open word and end of sentence, returns ranked hypotheses. Further feeds throw.
  std::vector<Hypothesis> flush();

 private:
  void step(std::span<const double> logp);
  void complete_word(BeamState& b) const;

  DecodeConfig cfg_;
  int blank_;
  std::vector<BeamState> beams_;
  std::size_t frames_ = 0;
  bool flushed_ = false;
};

std::vector<Hypothesis> beam_decode(const PosteriorSequence& post, const DecodeConfig& config);

/// Argmax per frame, merge repeats, drop blanks.
std::string greedy_decode(const PosteriorSequence& post,
                          const std::string& alphabet = DecodeConfig{}.alphabet);

}  // namespace neurotext
