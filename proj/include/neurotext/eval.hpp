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

#include <cstdint>
#include <string>
#include <vector>

#include "neurotext/beam_search.hpp"
#include "neurotext/model.hpp"
#include "neurotext/synthdata.hpp"

namespace neurotext {

struct EditCounts {
  std::size_t distance = 0;
  std::size_t sub = 0;
  std::size_t del = 0;
  std::size_t ins = 0;
};

/// Levenshtein distance from ref to hyp. Among optimal alignments the
/// backtrace prefers substitution, then deletion, then insertion.
template <class T>
EditCounts edit_distance(const std::vector<T>& ref, const std::vector<T>& hyp);

struct ErrorRate {
  double rate = 0.0;
  EditCounts edits;
  std::size_t ref_tokens = 0;
};

/// Corpus level: summed edits over summed reference words.
ErrorRate wer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps);
ErrorRate cer(const std::vector<std::string>& refs, const std::vector<std::string>& hyps);

struct Transcript {
  std::size_t index = 0;
  std::string session;
  std::string reference;
  std::string hypothesis;
  double score = 0.0;
};

/// Decodes the nominal window of each utterance.
std::vector<Transcript> decode_utterances(const Model& model, const Dataset& data,
                                          const std::vector<std::size_t>& indices,
                                          const DecodeConfig& config, double max_jitter_s);

ErrorRate transcript_wer(const std::vector<Transcript>& ts);
ErrorRate transcript_cer(const std::vector<Transcript>& ts);

enum class CutoffSide { kOnset, kOffset };

struct CutoffPoint {
  double cutoff_s = 0.0;
  double wer = 0.0;
  std::size_t decoded = 0;
  /// Trials too short after the cut; scored as empty hypotheses.
  std::size_t skipped = 0;
};

struct CutoffCurve {
  CutoffSide side = CutoffSide::kOnset;
  std::vector<CutoffPoint> points;
  /// Adjacent steps where WER fell.
  std::size_t decreases = 0;
  bool non_decreasing() const { return decreases == 0; }
};

CutoffCurve cutoff_curve(const Model& model, const Dataset& data, const std::vector<std::size_t>& indices,
                         CutoffSide side, const std::vector<double>& steps_s,
                         const DecodeConfig& config, double max_jitter_s);

struct IncrementalRow {
  double time_s = 0.0;
  std::string text;
};

struct IncrementalTrial {
  std::size_t index = 0;
  std::string reference;
  std::vector<IncrementalRow> rows;
};

/// Streams posteriors of the whole nominal window in step_s chunks; the last
/// row is the flushed result.
IncrementalTrial incremental_trial(const Model& model, const Utterance& u, const DecodeConfig& config,
                                   double step_s, double max_jitter_s);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line chart with axes, ticks and a legend.
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<Series>& series);
std::string series_csv(const std::vector<Series>& series, const std::string& x_name);

}  // namespace neurotext
