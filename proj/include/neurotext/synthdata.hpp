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
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "neurotext/encoder.hpp"
#include "neurotext/tensor.hpp"

namespace neurotext {

/// Sparse successor grammar over generated pseudo-words.
struct Grammar {
  std::vector<std::string> words;
  std::vector<std::vector<std::size_t>> successors;
  std::vector<std::size_t> starts;
};

Grammar make_grammar(std::size_t vocab_size, std::size_t successors, std::uint64_t seed);
std::vector<std::string> sample_sentences(const Grammar& g, std::size_t n, std::size_t min_words,
                                          std::size_t max_words, std::uint64_t seed);
/// Grammar and sentences from one seed.
std::vector<std::string> gen_corpus(std::size_t vocab_size, std::size_t n_sentences,
                                    std::size_t min_words, std::size_t max_words,
                                    std::uint64_t seed, std::size_t successors = 3);

struct ForwardModelSpec {
  std::size_t grid_w = 8;
  std::size_t grid_h = 8;
  double sample_rate = 200.0;
  std::size_t akt_dim = 33;
  std::size_t mfcc_dim = 26;
  double min_char_s = 0.05;
  double max_char_s = 0.15;
  /// Neural activity leads articulation by 0..max_latency_s per electrode.
  double max_latency_s = 0.1;
  /// Standard deviation of additive neural noise.
  double noise = 0.3;
  double mfcc_noise = 0.05;
  /// Centered moving-average window of the articulatory trajectory, samples.
  std::size_t smoothing_samples = 9;
  /// Moving-average window of the low-frequency channel, samples.
  std::size_t lowpass_samples = 15;
  /// Rest padding before and after speech.
  double pad_s = 0.5;
  std::uint64_t seed = 7;

  void validate() const;
  std::size_t electrodes() const { return grid_w * grid_h; }
};

/// Fixed per-dataset forward model drawn from ForwardModelSpec::seed.
struct ForwardModel {
  ForwardModelSpec spec;
  /// 28 symbols x akt_dim.
  std::map<char, std::vector<double>> prototypes;
  /// electrodes x akt_dim mixing for the high-gamma and low-frequency bands.
  Tensor mix_hg;
  Tensor mix_lf;
  /// mfcc_dim x akt_dim.
  Tensor mfcc_map;
  std::vector<std::size_t> latency;

  static ForwardModel build(const ForwardModelSpec& spec);
};

struct SessionSpec {
  double gain_lo = 0.7;
  double gain_hi = 1.3;
  double offset = 0.2;
  double drift_amp = 0.2;
  double drift_hz_lo = 0.1;
  double drift_hz_hi = 0.3;
  double dead_fraction = 0.05;
};

struct SessionProfile {
  std::string id;
  /// Per channel, electrodes x 2 bands, row-major.
  std::vector<double> gain;
  std::vector<double> offset;
  double drift_amp = 0.0;
  double drift_hz = 0.0;
  std::vector<double> drift_phase;
  std::vector<bool> dead;
  std::uint64_t noise_seed = 0;

  static SessionProfile make(const std::string& id, std::size_t electrodes, const SessionSpec& spec,
                             std::uint64_t seed);
  static SessionProfile identity(const std::string& id, std::size_t electrodes);
};

struct Utterance {
  std::string text;
  std::string session_id;
  std::string split = "train";
  Tensor akt;
  Tensor mfcc;
  Tensor neural;
  std::size_t onset = 0;
  std::size_t offset = 0;
  double sample_rate = 200.0;
  /// Phase of the session drift at sample 0.
  double drift_phase = 0.0;

  std::size_t frames() const { return neural.empty() ? 0 : neural.dim(0); }
  NeuralSample sample() const;
};

Utterance synth_utterance(const std::string& text, const SessionProfile& session,
                          const ForwardModel& model, std::uint64_t seed);

struct JitterResult {
  Utterance utterance;
  double start_shift_s = 0.0;
  double end_shift_s = 0.0;
  bool clamped = false;
};

/// Crops a window whose edges sit max_jitter_s inside the signal ends and
/// are shifted independently by U(-max_jitter_s, max_jitter_s).
JitterResult jitter(const Utterance& u, double max_jitter_s, std::uint64_t seed);

struct ZScoreReport {
  /// (session, channel) pairs with zero variance, centered only.
  std::vector<std::pair<std::string, std::size_t>> flagged;
};

/// Per session and channel, over every frame of every utterance of the session.
ZScoreReport zscore_per_session(std::vector<Utterance>& utterances);

struct CorpusSpec {
  std::size_t vocab_size = 30;
  std::size_t train_sentences = 240;
  std::size_t test_sentences = 40;
  std::size_t min_words = 3;
  std::size_t max_words = 5;
  std::size_t successors = 3;
  /// Extra training copies of each test sentence's text.
  std::size_t test_repeats = 0;
};

struct DatasetSpec {
  CorpusSpec corpus;
  ForwardModelSpec model;
  SessionSpec session;
  std::size_t sessions = 3;
  std::uint64_t seed = 1;
};

struct Dataset {
  DatasetSpec spec;
  std::vector<SessionProfile> sessions;
  std::vector<Utterance> utterances;

  std::vector<std::size_t> indices(const std::string& split) const;
  std::vector<std::string> texts(const std::string& split) const;
  /// Session ids in recording order.
  std::vector<std::string> session_order() const;
};

nlohmann::json dataset_spec_to_json(const DatasetSpec& spec);
/// FNV-1a of the canonical spec JSON; recorded in dataset.json.
std::string dataset_fingerprint(const DatasetSpec& spec);

/// Corpus, sessions, utterances, per-session z-scoring, float32 rounding.
Dataset generate_dataset(const DatasetSpec& spec);

/// dataset.json, manifest.jsonl, neural.bin, akt.bin, mfcc.bin under dir.
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace neurotext
