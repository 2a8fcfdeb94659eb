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

#include "neurotext/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "neurotext/errors.hpp"
#include "neurotext/hash.hpp"

namespace neurotext {

using json = nlohmann::json;

namespace {

// Reads keys from one object and rejects the ones nobody asked for.
class Reader {
 public:
  Reader(const json* j, std::string path) : j_(j), path_(std::move(path)) {
    if (j_ && !j_->is_object()) throw UsageError("config: '" + where() + "' must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    used_.insert(key);
    if (!j_ || !j_->contains(key)) return;
    try {
      out = j_->at(key).get<T>();
    } catch (const json::exception& e) {
      throw UsageError("config: bad value for '" + path_ + key + "': " + e.what());
    }
  }

  void get_count(const char* key, std::size_t& out) {
    used_.insert(key);
    if (!j_ || !j_->contains(key)) return;
    const json& v = j_->at(key);
    if (!v.is_number_unsigned()) throw UsageError("config: '" + path_ + key + "' must be a non-negative integer");
    out = v.get<std::size_t>();
  }

  bool has(const char* key) const { return j_ && j_->contains(key); }

  Reader sub(const char* key) {
    used_.insert(key);
    return Reader(j_ && j_->contains(key) ? &j_->at(key) : nullptr, path_ + key + ".");
  }

  void finish() const {
    if (!j_) return;
    for (const auto& item : j_->items()) {
      if (!used_.count(item.key())) throw UsageError("config: unknown key '" + path_ + item.key() + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_.substr(0, path_.size() - 1); }

  const json* j_;
  std::string path_;
  std::set<std::string> used_;
};

const char* pool_name(SpatialPool p) { return p == SpatialPool::kFlatten ? "flatten" : "mean"; }

SpatialPool parse_pool(const std::string& s) {
  if (s == "flatten") return SpatialPool::kFlatten;
  if (s == "mean") return SpatialPool::kMean;
  throw UsageError("config: pool must be flatten or mean, got '" + s + "'");
}

const char* mode_name(RegMode m) { return m == RegMode::kIndependent ? "independent" : "joint"; }

RegMode parse_mode(const std::string& s) {
  if (s == "independent") return RegMode::kIndependent;
  if (s == "joint") return RegMode::kJoint;
  throw UsageError("config: reg mode must be independent or joint, got '" + s + "'");
}

std::vector<std::size_t> widths_of(const InceptionSpec& s) {
  std::vector<std::size_t> w;
  for (const auto& l : s.layers) w.push_back(l.out_channels());
  return w;
}

std::vector<std::array<std::size_t, 2>> strides_of(const InceptionSpec& s) {
  std::vector<std::array<std::size_t, 2>> out;
  for (const auto& l : s.layers) out.push_back({l.stride.w, l.stride.h});
  return out;
}

void read_data(Reader r, DatasetSpec& d) {
  r.get("seed", d.seed);
  r.get_count("sessions", d.sessions);
  {
    Reader c = r.sub("corpus");
    c.get_count("vocab_size", d.corpus.vocab_size);
    c.get_count("train_sentences", d.corpus.train_sentences);
    c.get_count("test_sentences", d.corpus.test_sentences);
    c.get_count("min_words", d.corpus.min_words);
    c.get_count("max_words", d.corpus.max_words);
    c.get_count("successors", d.corpus.successors);
    c.get_count("test_repeats", d.corpus.test_repeats);
    c.finish();
  }
  {
    Reader m = r.sub("model");
    auto& f = d.model;
    m.get_count("grid_w", f.grid_w);
    m.get_count("grid_h", f.grid_h);
    m.get("sample_rate", f.sample_rate);
    m.get_count("akt_dim", f.akt_dim);
    m.get_count("mfcc_dim", f.mfcc_dim);
    m.get("min_char_s", f.min_char_s);
    m.get("max_char_s", f.max_char_s);
    m.get("max_latency_s", f.max_latency_s);
    m.get("noise", f.noise);
    m.get("mfcc_noise", f.mfcc_noise);
    m.get_count("smoothing_samples", f.smoothing_samples);
    m.get_count("lowpass_samples", f.lowpass_samples);
    m.get("pad_s", f.pad_s);
    m.get("seed", f.seed);
    m.finish();
  }
  {
    Reader s = r.sub("session");
    auto& p = d.session;
    s.get("gain_lo", p.gain_lo);
    s.get("gain_hi", p.gain_hi);
    s.get("offset", p.offset);
    s.get("drift_amp", p.drift_amp);
    s.get("drift_hz_lo", p.drift_hz_lo);
    s.get("drift_hz_hi", p.drift_hz_hi);
    s.get("dead_fraction", p.dead_fraction);
    s.finish();
  }
  r.finish();
}

void read_model(Reader r, RunConfig& c) {
  ModelSpec& m = c.model;
  {
    Reader e = r.sub("encoder");
    std::vector<std::size_t> widths = widths_of(m.encoder.inception);
    std::vector<std::array<std::size_t, 2>> strides = strides_of(m.encoder.inception);
    e.get("widths", widths);
    e.get("spatial_strides", strides);
    if (widths.size() != strides.size()) {
      throw UsageError("config: model.encoder.widths and spatial_strides differ in length");
    }
    for (std::size_t w : widths) {
      if (w == 0 || w % 4 != 0) throw UsageError("config: encoder widths must be positive multiples of 4");
    }
    m.encoder.inception = InceptionSpec::standard(widths, strides);
    std::string pool = pool_name(m.encoder.pool);
    e.get("pool", pool);
    m.encoder.pool = parse_pool(pool);
    e.get_count("lstm_hidden", m.encoder.lstm_hidden);
    e.get_count("lstm_layers", m.encoder.lstm_layers);
    e.get("lstm_dropout", m.encoder.lstm_dropout);
    e.finish();
  }
  {
    Reader d = r.sub("decoder");
    d.get_count("layers", m.decoder.layers);
    d.get("dilations", m.decoder.dilations);
    d.get_count("filter_size", m.decoder.filter_size);
    d.get("output_dropout", m.decoder.output_dropout);
    d.finish();
  }
  {
    Reader g = r.sub("reg");
    std::string mode = mode_name(m.reg.mode);
    g.get("mode", mode);
    m.reg.mode = parse_mode(mode);
    if (g.has("targets")) {
      std::vector<std::string> names;
      g.get("targets", names);
      m.reg.targets.clear();
      for (const auto& n : names) {
        try {
          m.reg.targets.push_back(parse_reg_target(n));
        } catch (const Error& e) {
          throw UsageError(std::string("config: model.reg.targets: ") + e.what());
        }
      }
    } else {
      g.get("targets", m.reg.targets);
    }
    g.get("alpha_ctc", m.reg.alpha_ctc);
    g.get("alpha_mfcc", m.reg.alpha_mfcc);
    g.get("alpha_akt", m.reg.alpha_akt);
    g.get("alpha_session", m.reg.alpha_session);
    g.get("alpha_joint", m.reg.alpha_joint);
    g.get("horizon_fraction", c.reg_horizon_fraction);
    g.get_count("joint_dim", m.reg.joint_dim);
    g.finish();
  }
  r.get_count("session_dim", m.session_dim);
  r.get_count("session_window", m.session_window);
  r.finish();
}

}  // namespace

const char* lm_source_name(LmSource s) {
  switch (s) {
    case LmSource::kNone: return "none";
    case LmSource::kTask: return "task";
    case LmSource::kFile: return "file";
  }
  return "?";
}

LmSource parse_lm_source(const std::string& name) {
  if (name == "none") return LmSource::kNone;
  if (name == "task") return LmSource::kTask;
  if (name == "file") return LmSource::kFile;
  throw UsageError("lm source must be none, task or file, got '" + name + "'");
}

void RunConfig::finalize() {
  model.encoder.grid_w = data.model.grid_w;
  model.encoder.grid_h = data.model.grid_h;
  model.encoder.in_channels = 2;
  model.decoder.width = model.encoder.latent_dim();
  model.akt_dim = data.model.akt_dim;
  model.mfcc_dim = data.model.mfcc_dim;
  train.seed = seed;
  if (!(reg_horizon_fraction > 0.0)) throw UsageError("config: model.reg.horizon_fraction must be > 0");
  model.reg.horizon_steps =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(reg_horizon_fraction * static_cast<double>(train.steps))));
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw UsageError("config: train.train_fraction must be in (0, 1]");
  if (checkpoint_every == 0) throw UsageError("config: train.checkpoint_every must be > 0");
  if (lm.order < 1 || lm.order > 4) throw UsageError("config: lm.order must be 1..4");
  if (!(lm.discount > 0.0 && lm.discount < 1.0)) throw UsageError("config: lm.discount must be in (0, 1)");
  if (decode.lm == LmSource::kFile && decode.lm_path.empty()) {
    throw UsageError("config: decode.lm is 'file' but decode.lm_path is empty");
  }
  if (decode.nbest == 0) throw UsageError("config: decode.nbest must be >= 1");
  if (!(eval.stream_step_s > 0.0)) throw UsageError("config: eval.stream_step_s must be > 0");
  for (double f : eval.train_fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw UsageError("config: eval.train_fractions must be in (0, 1]");
  }
  for (const auto& r : eval.reg_conditions) {
    if (r != "none" && r != "mfcc" && r != "akt" && r != "mfcc+akt") {
      throw UsageError("config: eval.reg_conditions entries must be none, mfcc, akt or mfcc+akt, got '" + r + "'");
    }
  }
  for (double s : eval.cutoff_steps_s) {
    if (!(s >= 0.0)) throw UsageError("config: eval.cutoff_steps_s must be >= 0");
  }
  try {
    model.validate();
    train.validate();
    decode_config(*this, nullptr).validate();
  } catch (const UsageError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

RunConfig benchmark_config() {
  RunConfig c;
  c.model.encoder.inception = InceptionSpec::standard({8, 16, 32}, {{2, 2}, {2, 2}, {2, 2}});
  c.model.encoder.lstm_hidden = 32;
  c.train.steps = 600;
  c.decode.beam_width = 32;
  c.finalize();
  return c;
}

json config_to_json(const RunConfig& c) {
  const ModelSpec& m = c.model;
  std::vector<std::string> targets;
  for (RegTarget t : m.reg.targets) targets.emplace_back(reg_target_name(t));
  return json{
      {"seed", c.seed},
      {"data", dataset_spec_to_json(c.data)},
      {"model",
       {{"encoder",
         {{"widths", widths_of(m.encoder.inception)},
          {"spatial_strides", strides_of(m.encoder.inception)},
          {"pool", pool_name(m.encoder.pool)},
          {"lstm_hidden", m.encoder.lstm_hidden},
          {"lstm_layers", m.encoder.lstm_layers},
          {"lstm_dropout", m.encoder.lstm_dropout}}},
        {"decoder",
         {{"layers", m.decoder.layers},
          {"dilations", m.decoder.dilations},
          {"filter_size", m.decoder.filter_size},
          {"output_dropout", m.decoder.output_dropout}}},
        {"reg",
         {{"mode", mode_name(m.reg.mode)},
          {"targets", targets},
          {"alpha_ctc", m.reg.alpha_ctc},
          {"alpha_mfcc", m.reg.alpha_mfcc},
          {"alpha_akt", m.reg.alpha_akt},
          {"alpha_session", m.reg.alpha_session},
          {"alpha_joint", m.reg.alpha_joint},
          {"horizon_fraction", c.reg_horizon_fraction},
          {"joint_dim", m.reg.joint_dim}}},
        {"session_dim", m.session_dim},
        {"session_window", m.session_window}}},
      {"train",
       {{"steps", c.train.steps},
        {"batch_size", c.train.batch_size},
        {"lr_min", c.train.lr_min},
        {"lr_max", c.train.lr_max},
        {"lr_period_epochs", c.train.lr_period_epochs},
        {"max_jitter_s", c.train.max_jitter_s},
        {"clip_norm", c.train.clip_norm},
        {"train_fraction", c.train_fraction},
        {"checkpoint_every", c.checkpoint_every}}},
      {"lm", {{"order", c.lm.order}, {"discount", c.lm.discount}}},
      {"decode",
       {{"beam_width", c.decode.beam_width},
        {"lm_weight", c.decode.lm_weight},
        {"word_bonus", c.decode.word_bonus},
        {"lm", lm_source_name(c.decode.lm)},
        {"lm_path", c.decode.lm_path},
        {"score_sentence_end", c.decode.score_sentence_end},
        {"nbest", c.decode.nbest}}},
      {"eval",
       {{"cutoff_steps_s", c.eval.cutoff_steps_s},
        {"stream_step_s", c.eval.stream_step_s},
        {"stream_trials", c.eval.stream_trials},
        {"reg_conditions", c.eval.reg_conditions},
        {"calibration", c.eval.calibration},
        {"train_fractions", c.eval.train_fractions},
        {"seeds", c.eval.seeds}}},
  };
}

RunConfig config_from_json(const json& j, RunConfig base) {
  RunConfig c = std::move(base);
  Reader r(&j, "");
  r.get("seed", c.seed);
  read_data(r.sub("data"), c.data);
  read_model(r.sub("model"), c);
  {
    Reader t = r.sub("train");
    t.get_count("steps", c.train.steps);
    t.get_count("batch_size", c.train.batch_size);
    t.get("lr_min", c.train.lr_min);
    t.get("lr_max", c.train.lr_max);
    t.get("lr_period_epochs", c.train.lr_period_epochs);
    t.get("max_jitter_s", c.train.max_jitter_s);
    t.get("clip_norm", c.train.clip_norm);
    t.get("train_fraction", c.train_fraction);
    t.get_count("checkpoint_every", c.checkpoint_every);
    t.finish();
  }
  {
    Reader l = r.sub("lm");
    l.get_count("order", c.lm.order);
    l.get("discount", c.lm.discount);
    l.finish();
  }
  {
    Reader d = r.sub("decode");
    d.get_count("beam_width", c.decode.beam_width);
    d.get("lm_weight", c.decode.lm_weight);
    d.get("word_bonus", c.decode.word_bonus);
    std::string lm = lm_source_name(c.decode.lm);
    d.get("lm", lm);
    c.decode.lm = parse_lm_source(lm);
    d.get("lm_path", c.decode.lm_path);
    d.get("score_sentence_end", c.decode.score_sentence_end);
    d.get_count("nbest", c.decode.nbest);
    d.finish();
  }
  {
    Reader e = r.sub("eval");
    e.get("cutoff_steps_s", c.eval.cutoff_steps_s);
    e.get("stream_step_s", c.eval.stream_step_s);
    e.get_count("stream_trials", c.eval.stream_trials);
    e.get("reg_conditions", c.eval.reg_conditions);
    e.get("calibration", c.eval.calibration);
    e.get("train_fractions", c.eval.train_fractions);
    e.get("seeds", c.eval.seeds);
    e.finish();
  }
  r.finish();
  c.finalize();
  return c;
}

RunConfig parse_config_text(const std::string& text, RunConfig base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  return config_from_json(j, std::move(base));
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

void save_config(const RunConfig& c, const std::string& path) {
  std::ofstream out(path);
  out << config_to_json(c).dump(2) << '\n';
  if (!out) throw DataError("cannot write config " + path);
}

std::string config_fingerprint(const RunConfig& c) { return hex64(fnv1a(config_to_json(c).dump())); }

DecodeConfig decode_config(const RunConfig& c, std::shared_ptr<const ArpaModel> lm) {
  DecodeConfig d;
  d.beam_width = c.decode.beam_width;
  d.lm_weight = c.decode.lm_weight;
  d.word_bonus = c.decode.word_bonus;
  d.score_sentence_end = c.decode.score_sentence_end;
  d.lm = std::move(lm);
  return d;
}

}  // namespace neurotext
