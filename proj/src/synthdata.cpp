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

#include "neurotext/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>

#include "json.hpp"
#include "neurotext/blob.hpp"
#include "neurotext/errors.hpp"
#include "neurotext/hash.hpp"
#include "neurotext/optim.hpp"
#include "neurotext/rng.hpp"
#include "neurotext/vocab.hpp"

namespace neurotext {

using json = nlohmann::json;

namespace {

constexpr const char* kConsonants = "bdfgklmnprstvz";
constexpr const char* kVowels = "aeiou";

std::string pseudo_word(Rng& rng) {
  std::string w;
  const std::size_t syllables = 1 + rng.below(2);
  for (std::size_t s = 0; s < syllables; ++s) {
    w += kConsonants[rng.below(14)];
    w += kVowels[rng.below(5)];
    if (rng.uniform() < 0.4) w += kConsonants[rng.below(14)];
  }
  return w;
}

/// Centered moving average along time with zeros outside [0, T).
Tensor moving_average(const Tensor& x, std::size_t window) {
  const std::size_t T = x.dim(0), d = x.dim(1);
  if (window <= 1) return x;
  const long half = static_cast<long>(window / 2);
  Tensor out({T, d});
  for (std::size_t t = 0; t < T; ++t) {
    for (long j = -half; j <= half; ++j) {
      const long s = static_cast<long>(t) + j;
      if (s < 0 || s >= static_cast<long>(T)) continue;
      for (std::size_t k = 0; k < d; ++k) out[t * d + k] += x[static_cast<std::size_t>(s) * d + k];
    }
  }
  const double inv = 1.0 / static_cast<double>(2 * half + 1);
  for (double& v : out.values()) v *= inv;
  return out;
}

Tensor crop_time(const Tensor& x, std::size_t begin, std::size_t end) {
  Shape s = x.shape();
  const std::size_t row = x.size() / s[0];
  s[0] = end - begin;
  std::vector<double> v(x.values().begin() + static_cast<long>(begin * row),
                        x.values().begin() + static_cast<long>(end * row));
  return Tensor(s, std::move(v));
}

std::size_t samples_of(double seconds, double rate) {
  return static_cast<std::size_t>(std::llround(seconds * rate));
}

}  // namespace

Grammar make_grammar(std::size_t vocab_size, std::size_t successors, std::uint64_t seed) {
  if (vocab_size < 2) throw ParameterError("vocab_size must be >= 2");
  if (successors < 1) throw ParameterError("successors must be >= 1");
  Rng rng(mix_seed({seed, 0x9a11ULL}));
  Grammar g;
  std::set<std::string> seen;
  while (g.words.size() < vocab_size) {
    std::string w = pseudo_word(rng);
    if (seen.insert(w).second) g.words.push_back(std::move(w));
  }
  const std::size_t k = std::min(successors, vocab_size);
  g.successors.resize(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    std::vector<std::size_t> pool(vocab_size);
    for (std::size_t j = 0; j < vocab_size; ++j) pool[j] = j;
    for (std::size_t j = 0; j < k; ++j) {
      std::swap(pool[j], pool[j + rng.below(vocab_size - j)]);
      g.successors[i].push_back(pool[j]);
    }
  }
  const std::size_t n_starts = std::max<std::size_t>(2, vocab_size / 3);
  std::vector<std::size_t> pool(vocab_size);
  for (std::size_t j = 0; j < vocab_size; ++j) pool[j] = j;
  for (std::size_t j = 0; j < std::min(n_starts, vocab_size); ++j) {
    std::swap(pool[j], pool[j + rng.below(vocab_size - j)]);
    g.starts.push_back(pool[j]);
  }
  return g;
}

std::vector<std::string> sample_sentences(const Grammar& g, std::size_t n, std::size_t min_words,
                                          std::size_t max_words, std::uint64_t seed) {
  if (min_words < 1 || max_words < min_words) throw ParameterError("bad sentence length range");
  Rng rng(mix_seed({seed, 0x5e47ULL}));
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = min_words + rng.below(max_words - min_words + 1);
    std::size_t w = g.starts[rng.below(g.starts.size())];
    std::string s = g.words[w];
    for (std::size_t j = 1; j < len; ++j) {
      w = g.successors[w][rng.below(g.successors[w].size())];
      s += ' ';
      s += g.words[w];
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::string> gen_corpus(std::size_t vocab_size, std::size_t n_sentences,
                                    std::size_t min_words, std::size_t max_words,
                                    std::uint64_t seed, std::size_t successors) {
  return sample_sentences(make_grammar(vocab_size, successors, seed), n_sentences, min_words,
                          max_words, seed);
}

void ForwardModelSpec::validate() const {
  if (grid_w == 0 || grid_h == 0) throw ParameterError("grid must be non-empty");
  if (!(sample_rate > 0.0)) throw ParameterError("sample_rate must be positive");
  if (!(min_char_s > 0.0 && max_char_s >= min_char_s)) throw ParameterError("bad character duration range");
  if (!(max_latency_s >= 0.0)) throw ParameterError("latencies must be non-negative");
  if (!(noise >= 0.0 && mfcc_noise >= 0.0)) throw ParameterError("noise must be non-negative");
  if (!(pad_s >= 0.0)) throw ParameterError("pad_s must be non-negative");
  if (akt_dim == 0 || mfcc_dim == 0) throw ParameterError("feature dims must be positive");
}

ForwardModel ForwardModel::build(const ForwardModelSpec& spec) {
  spec.validate();
  ForwardModel m;
  m.spec = spec;
  Rng rng(mix_seed({spec.seed, 0xf0ULL}));
  const std::size_t D = spec.akt_dim, E = spec.electrodes();
  for (int id = 0; id < static_cast<int>(CharVocab::size()); ++id) {
    if (id == CharVocab::kBlank) continue;
    std::vector<double> p(D);
    for (double& v : p) v = rng.normal();
    m.prototypes[CharVocab::symbol(id)] = std::move(p);
  }
  auto spatial_mix = [&]() {
    Tensor raw({E, D});
    for (double& v : raw.values()) v = rng.normal() / std::sqrt(static_cast<double>(D));
    // Neighbouring electrodes share half their weights.
    Tensor out({E, D});
    for (std::size_t w = 0; w < spec.grid_w; ++w) {
      for (std::size_t h = 0; h < spec.grid_h; ++h) {
        const std::size_t e = w * spec.grid_h + h;
        std::vector<std::size_t> nb;
        if (w > 0) nb.push_back(e - spec.grid_h);
        if (w + 1 < spec.grid_w) nb.push_back(e + spec.grid_h);
        if (h > 0) nb.push_back(e - 1);
        if (h + 1 < spec.grid_h) nb.push_back(e + 1);
        for (std::size_t k = 0; k < D; ++k) {
          double acc = 0.5 * raw[e * D + k];
          for (std::size_t n : nb) acc += 0.5 * raw[n * D + k] / static_cast<double>(nb.size());
          out[e * D + k] = acc;
        }
      }
    }
    return out;
  };
  m.mix_hg = spatial_mix();
  m.mix_lf = spatial_mix();
  m.mfcc_map = Tensor({spec.mfcc_dim, D});
  for (double& v : m.mfcc_map.values()) v = rng.normal() / std::sqrt(static_cast<double>(D));
  const std::size_t max_lat = samples_of(spec.max_latency_s, spec.sample_rate);
  m.latency.resize(E);
  for (auto& l : m.latency) l = rng.below(max_lat + 1);
  return m;
}

SessionProfile SessionProfile::make(const std::string& id, std::size_t electrodes,
                                    const SessionSpec& spec, std::uint64_t seed) {
  if (!(spec.gain_lo > 0.0 && spec.gain_hi >= spec.gain_lo)) throw ParameterError("gains must be positive");
  if (!(spec.dead_fraction >= 0.0 && spec.dead_fraction < 1.0)) throw ParameterError("dead_fraction must be in [0, 1)");
  Rng rng(mix_seed({seed, fnv1a(id)}));
  SessionProfile p;
  p.id = id;
  p.gain.resize(electrodes * 2);
  p.offset.resize(electrodes * 2);
  for (auto& g : p.gain) g = rng.uniform(spec.gain_lo, spec.gain_hi);
  for (auto& o : p.offset) o = rng.uniform(-spec.offset, spec.offset);
  p.drift_amp = spec.drift_amp;
  p.drift_hz = rng.uniform(spec.drift_hz_lo, spec.drift_hz_hi);
  p.drift_phase.resize(electrodes);
  for (auto& ph : p.drift_phase) ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
  p.dead.assign(electrodes, false);
  const auto n_dead = static_cast<std::size_t>(std::floor(spec.dead_fraction * static_cast<double>(electrodes)));
  for (std::size_t k = 0; k < n_dead;) {
    const std::size_t e = rng.below(electrodes);
    if (!p.dead[e]) {
      p.dead[e] = true;
      ++k;
    }
  }
  for (std::size_t e = 0; e < electrodes; ++e) {
    if (p.dead[e]) p.gain[e * 2] = p.gain[e * 2 + 1] = 0.0;
  }
  p.noise_seed = rng.next();
  return p;
}

SessionProfile SessionProfile::identity(const std::string& id, std::size_t electrodes) {
  SessionProfile p;
  p.id = id;
  p.gain.assign(electrodes * 2, 1.0);
  p.offset.assign(electrodes * 2, 0.0);
  p.drift_phase.assign(electrodes, 0.0);
  p.dead.assign(electrodes, false);
  return p;
}

NeuralSample Utterance::sample() const {
  NeuralSample s;
  s.signal = neural;
  s.session_id = session_id;
  s.text = text;
  s.onset = onset;
  s.offset = offset;
  s.sample_rate = sample_rate;
  return s;
}

Utterance synth_utterance(const std::string& text, const SessionProfile& session,
                          const ForwardModel& model, std::uint64_t seed) {
  const ForwardModelSpec& spec = model.spec;
  const std::size_t E = spec.electrodes(), D = spec.akt_dim;
  if (session.gain.size() != 2 * E) throw DimensionError("session profile does not match the grid");
  for (char c : text) {
    if (!CharVocab::contains(c)) throw DataError(std::string("character '") + c + "' is not in the vocabulary");
  }
  Rng rng(mix_seed({seed, 0xd0ULL}));
  const std::size_t lo = samples_of(spec.min_char_s, spec.sample_rate);
  const std::size_t hi = samples_of(spec.max_char_s, spec.sample_rate);
  const std::size_t pad = samples_of(spec.pad_s, spec.sample_rate);
  std::vector<std::size_t> dur(text.size());
  std::size_t speech = 0;
  for (auto& d : dur) {
    d = lo + rng.below(hi - lo + 1);
    speech += d;
  }
  const std::size_t T = speech + 2 * pad;

  Tensor raw({T, D});
  std::size_t t = pad;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto& p = model.prototypes.at(text[i]);
    for (std::size_t k = 0; k < dur[i]; ++k, ++t) std::copy(p.begin(), p.end(), raw.values().begin() + static_cast<long>(t * D));
  }
  Utterance u;
  u.text = text;
  u.session_id = session.id;
  u.sample_rate = spec.sample_rate;
  u.onset = pad;
  u.offset = pad + speech;
  u.akt = moving_average(raw, spec.smoothing_samples);
  u.drift_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  // mfcc = tanh(M akt) + noise.
  const std::size_t F = spec.mfcc_dim;
  u.mfcc = Tensor({T, F});
  Rng noise(mix_seed({session.noise_seed, seed}));
  for (std::size_t s = 0; s < T; ++s) {
    for (std::size_t f = 0; f < F; ++f) {
      double acc = 0.0;
      for (std::size_t k = 0; k < D; ++k) acc += model.mfcc_map[f * D + k] * u.akt[s * D + k];
      u.mfcc[s * F + f] = std::tanh(acc) + (spec.mfcc_noise > 0.0 ? spec.mfcc_noise * noise.normal() : 0.0);
    }
  }

  // Band mixtures before latency and session transforms.
  Tensor hg({T, E}), lf_raw({T, E});
  for (std::size_t s = 0; s < T; ++s) {
    for (std::size_t e = 0; e < E; ++e) {
      double a = 0.0, b = 0.0;
      for (std::size_t k = 0; k < D; ++k) {
        a += model.mix_hg[e * D + k] * u.akt[s * D + k];
        b += model.mix_lf[e * D + k] * u.akt[s * D + k];
      }
      hg[s * E + e] = a;
      lf_raw[s * E + e] = b;
    }
  }
  const Tensor lf = moving_average(lf_raw, spec.lowpass_samples);

  u.neural = Tensor({T, spec.grid_w, spec.grid_h, 2});
  const double w = 2.0 * std::numbers::pi * session.drift_hz / spec.sample_rate;
  for (std::size_t s = 0; s < T; ++s) {
    for (std::size_t e = 0; e < E; ++e) {
      if (session.dead[e]) continue;
      const std::size_t src = s + model.latency[e];
      const double m0 = src < T ? hg[src * E + e] : 0.0;
      const double m1 = src < T ? lf[src * E + e] : 0.0;
      const double drift = session.drift_amp * std::sin(w * static_cast<double>(s) + session.drift_phase[e] + u.drift_phase);
      const double n0 = spec.noise > 0.0 ? spec.noise * noise.normal() : 0.0;
      const double n1 = spec.noise > 0.0 ? spec.noise * noise.normal() : 0.0;
      u.neural[(s * E + e) * 2] = session.gain[e * 2] * m0 + session.offset[e * 2] + drift + n0;
      u.neural[(s * E + e) * 2 + 1] = session.gain[e * 2 + 1] * m1 + session.offset[e * 2 + 1] + drift + n1;
    }
  }
  return u;
}

JitterResult jitter(const Utterance& u, double max_jitter_s, std::uint64_t seed) {
  if (!(max_jitter_s >= 0.0)) throw ParameterError("max_jitter must be >= 0");
  JitterResult r;
  const std::size_t T = u.frames();
  if (max_jitter_s == 0.0) {
    r.utterance = u;
    return r;
  }
  Rng rng(mix_seed({seed, 0x717ULL}));
  r.start_shift_s = rng.uniform(-max_jitter_s, max_jitter_s);
  r.end_shift_s = rng.uniform(-max_jitter_s, max_jitter_s);
  const double sr = u.sample_rate;
  auto round_to = [](double x) { return static_cast<long>(std::llround(x)); };
  long start = round_to((max_jitter_s + r.start_shift_s) * sr);
  long end = static_cast<long>(T) - round_to((max_jitter_s - r.end_shift_s) * sr);
  if (start < 0) {
    start = 0;
    r.clamped = true;
  }
  if (end > static_cast<long>(T)) {
    end = static_cast<long>(T);
    r.clamped = true;
  }
  if (start > static_cast<long>(u.onset)) {
    start = static_cast<long>(u.onset);
    r.clamped = true;
  }
  if (end < static_cast<long>(u.offset)) {
    end = static_cast<long>(u.offset);
    r.clamped = true;
  }
  const auto b = static_cast<std::size_t>(start), e = static_cast<std::size_t>(end);
  r.utterance = u;
  r.utterance.neural = crop_time(u.neural, b, e);
  r.utterance.akt = crop_time(u.akt, b, e);
  r.utterance.mfcc = crop_time(u.mfcc, b, e);
  r.utterance.onset = u.onset - b;
  r.utterance.offset = u.offset - b;
  return r;
}

ZScoreReport zscore_per_session(std::vector<Utterance>& utterances) {
  ZScoreReport report;
  std::map<std::string, std::vector<std::size_t>> by_session;
  for (std::size_t i = 0; i < utterances.size(); ++i) by_session[utterances[i].session_id].push_back(i);
  for (const auto& [id, idx] : by_session) {
    const std::size_t C = utterances[idx[0]].neural.size() / utterances[idx[0]].frames();
    std::vector<double> sum(C, 0.0), sq(C, 0.0);
    std::size_t n = 0;
    for (std::size_t i : idx) {
      const Tensor& x = utterances[i].neural;
      if (x.size() / x.dim(0) != C) throw DimensionError("utterances of session " + id + " differ in channels");
      for (std::size_t j = 0; j < x.size(); ++j) sum[j % C] += x[j];
      n += x.dim(0);
    }
    if (n < 2) throw DataError("session " + id + " has fewer than 2 frames");
    std::vector<double> mean(C), sd(C);
    for (std::size_t c = 0; c < C; ++c) mean[c] = sum[c] / static_cast<double>(n);
    for (std::size_t i : idx) {
      const Tensor& x = utterances[i].neural;
      for (std::size_t j = 0; j < x.size(); ++j) sq[j % C] += (x[j] - mean[j % C]) * (x[j] - mean[j % C]);
    }
    for (std::size_t c = 0; c < C; ++c) {
      sd[c] = std::sqrt(sq[c] / static_cast<double>(n));
      if (sd[c] == 0.0) report.flagged.emplace_back(id, c);
    }
    for (std::size_t i : idx) {
      Tensor& x = utterances[i].neural;
      for (std::size_t j = 0; j < x.size(); ++j) {
        const std::size_t c = j % C;
        x[j] = sd[c] > 0.0 ? (x[j] - mean[c]) / sd[c] : x[j] - mean[c];
      }
    }
  }
  return report;
}

std::vector<std::size_t> Dataset::indices(const std::string& split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    if (utterances[i].split == split) out.push_back(i);
  }
  return out;
}

std::vector<std::string> Dataset::texts(const std::string& split) const {
  std::vector<std::string> out;
  for (std::size_t i : indices(split)) out.push_back(utterances[i].text);
  return out;
}

std::vector<std::string> Dataset::session_order() const {
  std::vector<std::string> out;
  for (const auto& s : sessions) out.push_back(s.id);
  return out;
}

Dataset generate_dataset(const DatasetSpec& spec) {
  if (spec.sessions < 1) throw ParameterError("need at least one session");
  const auto& c = spec.corpus;
  const Grammar g = make_grammar(c.vocab_size, c.successors, spec.seed);
  auto train = sample_sentences(g, c.train_sentences, c.min_words, c.max_words, mix_seed({spec.seed, 1}));
  const auto test = sample_sentences(g, c.test_sentences, c.min_words, c.max_words, mix_seed({spec.seed, 2}));
  for (std::size_t r = 0; r < c.test_repeats; ++r) train.insert(train.end(), test.begin(), test.end());
  const ForwardModel model = ForwardModel::build(spec.model);

  Dataset ds;
  ds.spec = spec;
  for (std::size_t s = 0; s < spec.sessions; ++s) {
    ds.sessions.push_back(SessionProfile::make("s" + std::to_string(s + 1), spec.model.electrodes(),
                                               spec.session, mix_seed({spec.seed, 3, s})));
  }
  // Sessions are chronological blocks of each split.
  auto add = [&](const std::vector<std::string>& texts, const std::string& split) {
    for (std::size_t i = 0; i < texts.size(); ++i) {
      const std::size_t s = i * spec.sessions / texts.size();
      Utterance u = synth_utterance(texts[i], ds.sessions[s], model,
                                    mix_seed({spec.seed, fnv1a(split), i}));
      u.split = split;
      ds.utterances.push_back(std::move(u));
    }
  };
  add(train, "train");
  add(test, "test");
  const ZScoreReport rep = zscore_per_session(ds.utterances);
  (void)rep;
  for (auto& u : ds.utterances) {
    round_to_float32(u.neural);
    round_to_float32(u.akt);
    round_to_float32(u.mfcc);
  }
  return ds;
}

json dataset_spec_to_json(const DatasetSpec& s) {
  const auto& m = s.model;
  return json{
      {"seed", s.seed},
      {"sessions", s.sessions},
      {"corpus",
       {{"vocab_size", s.corpus.vocab_size},
        {"train_sentences", s.corpus.train_sentences},
        {"test_sentences", s.corpus.test_sentences},
        {"min_words", s.corpus.min_words},
        {"max_words", s.corpus.max_words},
        {"successors", s.corpus.successors},
        {"test_repeats", s.corpus.test_repeats}}},
      {"model",
       {{"grid_w", m.grid_w},
        {"grid_h", m.grid_h},
        {"sample_rate", m.sample_rate},
        {"akt_dim", m.akt_dim},
        {"mfcc_dim", m.mfcc_dim},
        {"min_char_s", m.min_char_s},
        {"max_char_s", m.max_char_s},
        {"max_latency_s", m.max_latency_s},
        {"noise", m.noise},
        {"mfcc_noise", m.mfcc_noise},
        {"smoothing_samples", m.smoothing_samples},
        {"lowpass_samples", m.lowpass_samples},
        {"pad_s", m.pad_s},
        {"seed", m.seed}}},
      {"session",
       {{"gain_lo", s.session.gain_lo},
        {"gain_hi", s.session.gain_hi},
        {"offset", s.session.offset},
        {"drift_amp", s.session.drift_amp},
        {"drift_hz_lo", s.session.drift_hz_lo},
        {"drift_hz_hi", s.session.drift_hz_hi},
        {"dead_fraction", s.session.dead_fraction}}},
  };
}

std::string dataset_fingerprint(const DatasetSpec& spec) { return hex64(fnv1a(dataset_spec_to_json(spec).dump())); }

namespace {

DatasetSpec spec_from_json(const json& j) {
  DatasetSpec s;
  s.seed = j.at("seed").get<std::uint64_t>();
  s.sessions = j.at("sessions").get<std::size_t>();
  const auto& c = j.at("corpus");
  s.corpus.vocab_size = c.at("vocab_size");
  s.corpus.train_sentences = c.at("train_sentences");
  s.corpus.test_sentences = c.at("test_sentences");
  s.corpus.min_words = c.at("min_words");
  s.corpus.max_words = c.at("max_words");
  s.corpus.successors = c.at("successors");
  s.corpus.test_repeats = c.value("test_repeats", std::size_t{0});
  const auto& m = j.at("model");
  s.model.grid_w = m.at("grid_w");
  s.model.grid_h = m.at("grid_h");
  s.model.sample_rate = m.at("sample_rate");
  s.model.akt_dim = m.at("akt_dim");
  s.model.mfcc_dim = m.at("mfcc_dim");
  s.model.min_char_s = m.at("min_char_s");
  s.model.max_char_s = m.at("max_char_s");
  s.model.max_latency_s = m.at("max_latency_s");
  s.model.noise = m.at("noise");
  s.model.mfcc_noise = m.at("mfcc_noise");
  s.model.smoothing_samples = m.at("smoothing_samples");
  s.model.lowpass_samples = m.at("lowpass_samples");
  s.model.pad_s = m.at("pad_s");
  s.model.seed = m.at("seed");
  const auto& ss = j.at("session");
  s.session.gain_lo = ss.at("gain_lo");
  s.session.gain_hi = ss.at("gain_hi");
  s.session.offset = ss.at("offset");
  s.session.drift_amp = ss.at("drift_amp");
  s.session.drift_hz_lo = ss.at("drift_hz_lo");
  s.session.drift_hz_hi = ss.at("drift_hz_hi");
  s.session.dead_fraction = ss.at("dead_fraction");
  return s;
}

json session_to_json(const SessionProfile& p) {
  std::vector<int> dead;
  for (bool d : p.dead) dead.push_back(d ? 1 : 0);
  return json{{"id", p.id},           {"gain", p.gain},
              {"offset", p.offset},   {"drift_amp", p.drift_amp},
              {"drift_hz", p.drift_hz}, {"drift_phase", p.drift_phase},
              {"dead", dead},         {"noise_seed", p.noise_seed}};
}

SessionProfile session_from_json(const json& j) {
  SessionProfile p;
  p.id = j.at("id");
  p.gain = j.at("gain").get<std::vector<double>>();
  p.offset = j.at("offset").get<std::vector<double>>();
  p.drift_amp = j.at("drift_amp");
  p.drift_hz = j.at("drift_hz");
  p.drift_phase = j.at("drift_phase").get<std::vector<double>>();
  for (int d : j.at("dead").get<std::vector<int>>()) p.dead.push_back(d != 0);
  p.noise_seed = j.at("noise_seed");
  return p;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path root(dir);
  std::ofstream neural(root / "neural.bin", std::ios::binary), akt(root / "akt.bin", std::ios::binary),
      mfcc(root / "mfcc.bin", std::ios::binary), manifest(root / "manifest.jsonl");
  if (!neural || !akt || !mfcc || !manifest) throw DataError("cannot write dataset under " + dir);
  std::uint64_t on = 0, oa = 0, om = 0;
  for (std::size_t i = 0; i < ds.utterances.size(); ++i) {
    const Utterance& u = ds.utterances[i];
    const json rec{{"index", i},         {"text", u.text},     {"session", u.session_id},
                   {"split", u.split},   {"frames", u.frames()}, {"onset", u.onset},
                   {"offset", u.offset}, {"drift_phase", u.drift_phase},
                   {"neural", on},       {"akt", oa},          {"mfcc", om}};
    manifest << rec.dump() << '\n';
    on += write_blob(neural, u.neural);
    oa += write_blob(akt, u.akt);
    om += write_blob(mfcc, u.mfcc);
  }
  neural.close();
  akt.close();
  mfcc.close();
  manifest.close();
  json meta{{"format", "neurotext-dataset"}, {"version", 1}, {"spec", dataset_spec_to_json(ds.spec)},
            {"fingerprint", dataset_fingerprint(ds.spec)}};
  for (const auto& s : ds.sessions) meta["sessions"].push_back(session_to_json(s));
  for (const char* f : {"manifest.jsonl", "neural.bin", "akt.bin", "mfcc.bin"}) {
    meta["checksums"][f] = hex64(file_checksum((root / f).string()));
  }
  std::ofstream out(root / "dataset.json");
  out << meta.dump(2) << '\n';
  if (!out) throw DataError("cannot write dataset.json");
}

Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::ifstream meta_in(root / "dataset.json");
  if (!meta_in) throw DataError("cannot open " + (root / "dataset.json").string());
  json meta;
  try {
    meta = json::parse(meta_in);
  } catch (const json::exception& e) {
    throw DataError(std::string("dataset.json: ") + e.what());
  }
  Dataset ds;
  try {
    if (meta.at("format") != "neurotext-dataset" || meta.at("version") != 1) {
      throw DataError("unsupported dataset format");
    }
    for (const char* f : {"manifest.jsonl", "neural.bin", "akt.bin", "mfcc.bin"}) {
      const std::string want = meta.at("checksums").at(f);
      const std::string got = hex64(file_checksum((root / f).string()));
      if (want != got) throw DataError(std::string(f) + " checksum mismatch: expected " + want + ", got " + got);
    }
    ds.spec = spec_from_json(meta.at("spec"));
    if (meta.at("fingerprint").get<std::string>() != dataset_fingerprint(ds.spec)) {
      throw DataError("dataset.json fingerprint does not match its spec");
    }
    for (const auto& s : meta.at("sessions")) ds.sessions.push_back(session_from_json(s));

    std::ifstream manifest(root / "manifest.jsonl");
    std::ifstream neural(root / "neural.bin", std::ios::binary), akt(root / "akt.bin", std::ios::binary),
        mfcc(root / "mfcc.bin", std::ios::binary);
    std::string line;
    while (std::getline(manifest, line)) {
      if (line.empty()) continue;
      const json rec = json::parse(line);
      Utterance u;
      u.text = rec.at("text");
      u.session_id = rec.at("session");
      u.split = rec.at("split");
      u.onset = rec.at("onset");
      u.offset = rec.at("offset");
      u.drift_phase = rec.at("drift_phase");
      u.sample_rate = ds.spec.model.sample_rate;
      neural.seekg(static_cast<std::streamoff>(rec.at("neural").get<std::uint64_t>()));
      akt.seekg(static_cast<std::streamoff>(rec.at("akt").get<std::uint64_t>()));
      mfcc.seekg(static_cast<std::streamoff>(rec.at("mfcc").get<std::uint64_t>()));
      u.neural = read_blob(neural);
      u.akt = read_blob(akt);
      u.mfcc = read_blob(mfcc);
      if (u.neural.dim(0) != rec.at("frames").get<std::size_t>() || u.akt.dim(0) != u.frames() ||
          u.mfcc.dim(0) != u.frames()) {
        throw DataError("utterance " + rec.at("index").dump() + " arrays disagree in length");
      }
      ds.utterances.push_back(std::move(u));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("dataset metadata: ") + e.what());
  }
  return ds;
}

}  // namespace neurotext
