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

#include "neurotext/beam_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "neurotext/errors.hpp"

namespace neurotext {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

bool ranks_before(const BeamState& a, const BeamState& b) {
  const double sa = a.total(), sb = b.total();
  if (sa != sb) return sa > sb;
  return a.prefix < b.prefix;
}

}  // namespace

void DecodeConfig::validate() const {
  if (beam_width < 1) throw ParameterError("beam_width must be >= 1");
  if (!(lm_weight >= 0.0)) throw ParameterError("lm_weight must be >= 0");
  if (!std::isfinite(word_bonus)) throw ParameterError("word_bonus must be finite");
  if (alphabet.empty()) throw ParameterError("alphabet must be non-empty");
}

double BeamState::acoustic() const { return log_add(p_blank, p_nonblank); }

StreamDecoder::StreamDecoder(DecodeConfig config) : cfg_(std::move(config)) {
  cfg_.validate();
  blank_ = static_cast<int>(cfg_.alphabet.size());
  BeamState root;
  root.p_blank = 0.0;
  root.p_nonblank = kNegInf;
  if (cfg_.lm && cfg_.lm->order() > 1) root.lm_context.assign(1, std::string(kSentenceBegin));
  beams_.push_back(std::move(root));
}

void StreamDecoder::complete_word(BeamState& b) const {
  if (b.partial_word.empty()) return;
  if (cfg_.lm && cfg_.lm_weight > 0.0) {
    const double l10 = cfg_.lm->score_word(b.lm_context, b.partial_word);
    b.lm_score += cfg_.lm_weight * l10 * std::numbers::ln10;
  }
  b.lm_score += cfg_.word_bonus;
  if (cfg_.lm && cfg_.lm->order() > 1) {
    b.lm_context.push_back(std::move(b.partial_word));
    if (b.lm_context.size() > cfg_.lm->order() - 1) b.lm_context.erase(b.lm_context.begin());
  }
  b.partial_word.clear();
}

void StreamDecoder::step(std::span<const double> logp) {
  std::vector<BeamState> next;
  std::unordered_map<std::string, std::size_t> where;
  // Capacity bounds the entry count, so references into next stay valid.
  next.reserve(beams_.size() * (cfg_.alphabet.size() + 1));
  where.reserve(next.capacity());

  auto same = [&](const BeamState& b) -> BeamState& {
    auto [it, fresh] = where.try_emplace(b.prefix, next.size());
    if (fresh) {
      BeamState n = b;
      n.p_blank = kNegInf;
      n.p_nonblank = kNegInf;
      next.push_back(std::move(n));
    }
    return next[it->second];
  };
  auto extend = [&](const BeamState& b, char c) -> BeamState& {
    std::string key = b.prefix + c;
    auto [it, fresh] = where.try_emplace(key, next.size());
    if (fresh) {
      BeamState n;
      n.prefix = std::move(key);
      n.p_blank = kNegInf;
      n.p_nonblank = kNegInf;
      n.lm_score = b.lm_score;
      n.lm_context = b.lm_context;
      n.partial_word = b.partial_word;
      if (c == ' ') {
        complete_word(n);
      } else {
        n.partial_word += c;
      }
      next.push_back(std::move(n));
    }
    return next[it->second];
  };

  const double lb = logp[static_cast<std::size_t>(blank_)];
  for (const BeamState& b : beams_) {
    const double total = b.acoustic();
    BeamState& stay = same(b);
    stay.p_blank = log_add(stay.p_blank, total + lb);
    const char last = b.prefix.empty() ? '\0' : b.prefix.back();
    for (std::size_t k = 0; k < cfg_.alphabet.size(); ++k) {
      const char c = cfg_.alphabet[k];
      const double lp = logp[k];
      if (lp == kNegInf) continue;
      if (c == last) {
        BeamState& s = same(b);
        s.p_nonblank = log_add(s.p_nonblank, b.p_nonblank + lp);
        BeamState& e = extend(b, c);
        e.p_nonblank = log_add(e.p_nonblank, b.p_blank + lp);
      } else {
        BeamState& e = extend(b, c);
        e.p_nonblank = log_add(e.p_nonblank, total + lp);
      }
    }
  }
  std::erase_if(next, [](const BeamState& b) { return b.acoustic() == kNegInf; });
  const std::size_t keep = std::min(cfg_.beam_width, next.size());
  std::partial_sort(next.begin(), next.begin() + static_cast<long>(keep), next.end(), ranks_before);
  next.resize(keep);
  beams_ = std::move(next);
}

void StreamDecoder::feed(const PosteriorSequence& chunk) {
  if (flushed_) throw UsageError("feed after flush");
  if (chunk.frames() == 0) return;
  if (chunk.symbols() != cfg_.alphabet.size() + 1) {
    throw DimensionError("posteriors have " + std::to_string(chunk.symbols()) +
                         " symbols, decoder expects " + std::to_string(cfg_.alphabet.size() + 1));
  }
  for (std::size_t t = 0; t < chunk.frames(); ++t) step(chunk.frame(t));
  frames_ += chunk.frames();
}

std::string StreamDecoder::best_text() const {
  return beams_.empty() ? std::string() : beams_.front().prefix;
}

std::vector<Hypothesis> StreamDecoder::flush() {
  if (flushed_) throw UsageError("flush called twice");
  flushed_ = true;
  std::vector<BeamState> done = beams_;
  for (BeamState& b : done) {
    complete_word(b);
    if (cfg_.lm && cfg_.score_sentence_end && cfg_.lm_weight > 0.0) {
      b.lm_score += cfg_.lm_weight * std::numbers::ln10 *
                    cfg_.lm->score_word(b.lm_context, kSentenceEnd);
    }
  }
  std::sort(done.begin(), done.end(), ranks_before);
  std::vector<Hypothesis> out;
  out.reserve(done.size());
  for (const BeamState& b : done) out.push_back({b.prefix, b.total(), b.acoustic(), b.lm_score});
  return out;
}

std::vector<Hypothesis> beam_decode(const PosteriorSequence& post, const DecodeConfig& config) {
  StreamDecoder dec(config);
  dec.feed(post);
  return dec.flush();
}

std::string greedy_decode(const PosteriorSequence& post, const std::string& alphabet) {
  if (post.frames() > 0 && post.symbols() != alphabet.size() + 1) {
    throw DimensionError("posteriors do not match the alphabet");
  }
  std::string out;
  std::size_t prev = alphabet.size();
  for (std::size_t t = 0; t < post.frames(); ++t) {
    const auto f = post.frame(t);
    const auto k = static_cast<std::size_t>(std::max_element(f.begin(), f.end()) - f.begin());
    if (k != prev && k != alphabet.size()) out += alphabet[k];
    prev = k;
  }
  return out;
}

}  // namespace neurotext
