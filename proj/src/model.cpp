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

#include "neurotext/model.hpp"

#include <cmath>

#include "neurotext/ctc.hpp"
#include "neurotext/errors.hpp"
#include "neurotext/ops.hpp"
#include "neurotext/rng.hpp"
#include "neurotext/vocab.hpp"

namespace neurotext {

void ModelSpec::validate() const {
  encoder.validate();
  decoder.validate();
  reg.validate();
  if (decoder.width != encoder.latent_dim()) {
    throw ParameterError("decoder width " + std::to_string(decoder.width) + " must equal the latent width " +
                         std::to_string(encoder.latent_dim()));
  }
  if (session_dim == 0) throw ParameterError("session_dim must be >= 1");
}

Model Model::init(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Model m;
  m.spec = spec;
  init_encoder(m.params, spec.encoder, seed);
  init_dilated_stack(m.params, spec.decoder, CharVocab::size(), seed);
  const std::size_t D = spec.encoder.latent_dim();
  const RegSpec& r = spec.reg;
  if (r.mode == RegMode::kIndependent) {
    if (r.uses(RegTarget::kMfcc)) init_regression_head(m.params, "reg.mfcc", D, spec.mfcc_dim, seed);
    if (r.uses(RegTarget::kAkt)) init_regression_head(m.params, "reg.akt", D, spec.akt_dim, seed);
  } else if (r.uses(RegTarget::kMfcc) || r.uses(RegTarget::kAkt)) {
    init_regression_head(m.params, "reg.joint", D, r.joint_dim, seed);
  }
  if (r.uses(RegTarget::kSession)) init_regression_head(m.params, "reg.session", D, spec.session_dim, seed);
  return m;
}

namespace {

std::vector<const Tensor*> joint_parts(const RegSpec& r, const Tensor& mfcc, const Tensor& akt) {
  std::vector<const Tensor*> parts;
  if (r.uses(RegTarget::kMfcc)) parts.push_back(&mfcc);
  if (r.uses(RegTarget::kAkt)) parts.push_back(&akt);
  return parts;
}

}  // namespace

void Model::fit_tables(const Dataset& ds, std::uint64_t seed) {
  const RegSpec& r = spec.reg;
  if (r.uses(RegTarget::kSession)) {
    SkipGramOptions o;
    o.dim = spec.session_dim;
    o.window = spec.session_window;
    o.seed = seed;
    sessions = train_session_embeddings(ds.session_order(), o);
  }
  if (r.mode == RegMode::kJoint && (r.uses(RegTarget::kMfcc) || r.uses(RegTarget::kAkt))) {
    std::vector<Tensor> cats;
    for (std::size_t i : ds.indices("train")) {
      const Utterance& u = ds.utterances[i];
      const auto parts = joint_parts(r, u.mfcc, u.akt);
      std::size_t width = 0;
      for (const Tensor* p : parts) width += p->dim(1);
      Tensor cat({u.frames(), width});
      for (std::size_t t = 0; t < u.frames(); ++t) {
        std::size_t off = 0;
        for (const Tensor* p : parts) {
          for (std::size_t j = 0; j < p->dim(1); ++j) cat[t * width + off + j] = (*p)[t * p->dim(1) + j];
          off += p->dim(1);
        }
      }
      cats.push_back(std::move(cat));
    }
    std::vector<const Tensor*> ptrs;
    for (const auto& c : cats) ptrs.push_back(&c);
    joint = JointProjection::fit(ptrs, r.joint_dim);
  }
}

ForwardResult forward(BoundParams& params, const ModelSpec& spec, const Tensor& signal, bool training,
                      std::uint64_t dropout_seed) {
  Tape& tape = params.tape();
  const EncoderOutput enc = encode(params, tape.constant(signal), spec.encoder, training,
                                   mix_seed({dropout_seed, 1}));
  ForwardResult r;
  r.latent = enc.latent;
  r.logits = dilated_stack(params, enc.dropped, spec.decoder, training, mix_seed({dropout_seed, 2}));
  r.logpost = ops::log_softmax(tape, r.logits);
  return r;
}

LossParts utterance_loss(BoundParams& params, const Model& model, const Utterance& u,
                         std::size_t step, bool training, std::uint64_t dropout_seed) {
  Tape& tape = params.tape();
  const ModelSpec& spec = model.spec;
  const ForwardResult f = forward(params, spec, u.neural, training, dropout_seed);
  LossParts parts;
  parts.ctc = ops::ctc(tape, f.logpost, CharVocab::encode(u.text), CharVocab::kBlank);

  const RegSpec& r = spec.reg;
  std::vector<RegTerm> terms;
  const std::size_t frames = tape.shape(f.latent)[0];
  const std::size_t stride = spec.encoder.inception.temporal_stride();
  const bool feat = r.uses(RegTarget::kMfcc) || r.uses(RegTarget::kAkt);
  if (feat && r.decay(step) > 0.0) {
    const Tensor mfcc = resample_to_frames(u.mfcc, stride, frames);
    const Tensor akt = resample_to_frames(u.akt, stride, frames);
    if (r.mode == RegMode::kIndependent) {
      if (r.uses(RegTarget::kMfcc)) {
        parts.mfcc = feature_reg_loss(tape, {{RegTarget::kMfcc, regression_head(params, f.latent, "reg.mfcc"), mfcc, 1.0}});
        terms.push_back({parts.mfcc, r.alpha_mfcc});
      }
      if (r.uses(RegTarget::kAkt)) {
        parts.akt = feature_reg_loss(tape, {{RegTarget::kAkt, regression_head(params, f.latent, "reg.akt"), akt, 1.0}});
        terms.push_back({parts.akt, r.alpha_akt});
      }
    } else {
      parts.joint = joint_feature_loss(tape, regression_head(params, f.latent, "reg.joint"),
                                       joint_parts(r, mfcc, akt), model.joint);
      terms.push_back({parts.joint, r.alpha_joint});
    }
  }
  if (r.uses(RegTarget::kSession) && r.decay(step) > 0.0) {
    parts.session = session_loss(tape, regression_head(params, f.latent, "reg.session"),
                                 model.sessions.at(u.session_id));
    terms.push_back({parts.session, r.alpha_session});
  }
  parts.total = total_loss(tape, parts.ctc, terms, r, step);
  return parts;
}

PosteriorSequence posteriors(const Model& model, const Tensor& signal) {
  Tape tape;
  BoundParams params(tape, model.params);
  const ForwardResult f = forward(params, model.spec, signal, false, 0);
  return PosteriorSequence(tape.value(f.logpost));
}

Tensor latent_of(const Model& model, const Tensor& signal) {
  Tape tape;
  BoundParams params(tape, model.params);
  return tape.value(forward(params, model.spec, signal, false, 0).latent);
}

Utterance nominal_window(const Utterance& u, double max_jitter_s) {
  const auto m = static_cast<std::size_t>(std::llround(max_jitter_s * u.sample_rate));
  std::size_t b = std::min(m, u.onset);
  std::size_t e = std::max(u.frames() - std::min(m, u.frames()), u.offset);
  Utterance out = u;
  auto crop = [&](const Tensor& x) {
    Shape s = x.shape();
    const std::size_t row = x.size() / s[0];
    s[0] = e - b;
    return Tensor(s, std::vector<double>(x.values().begin() + static_cast<long>(b * row),
                                         x.values().begin() + static_cast<long>(e * row)));
  };
  out.neural = crop(u.neural);
  out.akt = crop(u.akt);
  out.mfcc = crop(u.mfcc);
  out.onset = u.onset - b;
  out.offset = u.offset - b;
  return out;
}

}  // namespace neurotext
