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

#include "neurotext/arpa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "neurotext/errors.hpp"

namespace neurotext {

namespace {

std::string join(std::span<const std::string> words) {
  std::string key;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) key += ' ';
    key += words[i];
  }
  return key;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double parse_number(const std::string& tok, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (tok.empty() || end != tok.c_str() + tok.size()) {
    throw ParseError("malformed number '" + tok + "'", line);
  }
  return v;
}

}  // namespace

std::vector<std::string> split_words(std::string_view sentence) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : sentence) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

ArpaModel::ArpaModel(std::size_t order) {
  if (order < 1 || order > 4) throw ParameterError("n-gram order must be in [1, 4]");
  grams_.resize(order);
}

void ArpaModel::set(std::span<const std::string> words, NgramEntry entry) {
  if (words.empty() || words.size() > order()) {
    throw DimensionError("n-gram of length " + std::to_string(words.size()) +
                         " in an order-" + std::to_string(order()) + " model");
  }
  grams_[words.size() - 1][join(words)] = entry;
}

const NgramEntry* ArpaModel::find(std::span<const std::string> words) const {
  if (words.empty() || words.size() > order()) return nullptr;
  const auto& m = grams_[words.size() - 1];
  const auto it = m.find(join(words));
  return it == m.end() ? nullptr : &it->second;
}

bool ArpaModel::has_word(std::string_view w) const {
  return grams_[0].find(std::string(w)) != grams_[0].end();
}

std::vector<std::string> ArpaModel::vocabulary() const {
  std::vector<std::string> out;
  for (const auto& [w, e] : grams_[0]) {
    if (w != kSentenceBegin) out.push_back(w);
  }
  return out;
}

double ArpaModel::score_word(std::span<const std::string> context, std::string_view word) const {
  std::vector<std::string> gram;
  const std::size_t keep = std::min(context.size(), order() - 1);
  for (std::size_t i = context.size() - keep; i < context.size(); ++i) {
    gram.push_back(has_word(context[i]) ? context[i] : std::string(kUnknownWord));
  }
  gram.push_back(has_word(word) ? std::string(word) : std::string(kUnknownWord));
  if (!has_word(gram.back())) return kUnknownFloor;

  double backoff = 0.0;
  std::span<const std::string> g(gram);
  while (true) {
    if (const NgramEntry* e = find(g)) return backoff + e->log10_prob;
    // Unigram always exists at this point, so g.size() > 1 here.
    if (const NgramEntry* h = find(g.first(g.size() - 1)); h && h->log10_backoff) {
      backoff += *h->log10_backoff;
    }
    g = g.subspan(1);
  }
}

void ArpaModel::validate() const {
  for (std::size_t n = 2; n <= order(); ++n) {
    for (const auto& [key, e] : grams_[n - 1]) {
      const auto words = split_words(key);
      const NgramEntry* p = find(std::span<const std::string>(words).first(n - 1));
      if (p == nullptr || !p->log10_backoff) {
        throw DataError("n-gram '" + key + "' has no prefix with a backoff weight");
      }
    }
  }
  for (const auto& m : grams_) {
    for (const auto& [key, e] : m) {
      if (!(e.log10_prob <= 0.0)) throw DataError("n-gram '" + key + "' has log10 prob > 0");
    }
  }
}

ArpaModel parse_arpa(std::istream& in) {
  std::string raw;
  std::size_t line_no = 0;
  auto next_line = [&](std::string& out) {
    while (std::getline(in, raw)) {
      ++line_no;
      out = trim(raw);
      if (!out.empty()) return true;
    }
    return false;
  };

  std::string line;
  // Anything before \data\ is a free-form header.
  bool found = false;
  while (next_line(line)) {
    if (line == "\\data\\") {
      found = true;
      break;
    }
  }
  if (!found) throw ParseError("expected \\data\\", line_no);

  std::vector<std::size_t> counts;
  bool have_line = false;
  while ((have_line = next_line(line))) {
    if (line.rfind("ngram ", 0) != 0) break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("malformed count line", line_no);
    const std::size_t n = static_cast<std::size_t>(parse_number(trim(line.substr(6, eq - 6)), line_no));
    const double c = parse_number(trim(line.substr(eq + 1)), line_no);
    if (n != counts.size() + 1 || c < 0) throw ParseError("unexpected count line", line_no);
    counts.push_back(static_cast<std::size_t>(c));
  }
  if (counts.empty() || counts.size() > 4) throw ParseError("expected 1 to 4 ngram count lines", line_no);

  ArpaModel model(counts.size());
  for (std::size_t n = 1; n <= counts.size(); ++n) {
    const std::string header = "\\" + std::to_string(n) + "-grams:";
    if (!have_line) throw ParseError("expected " + header, line_no);
    if (line != header) throw ParseError("expected " + header + ", found '" + line + "'", line_no);
    std::size_t seen = 0;
    while ((have_line = next_line(line)) && line[0] != '\\') {
      std::vector<std::string> tok = split_words(line);
      if (tok.size() != n + 1 && tok.size() != n + 2) {
        throw ParseError("expected " + std::to_string(n) + "-gram entry", line_no);
      }
      NgramEntry e;
      e.log10_prob = parse_number(tok[0], line_no);
      if (tok.size() == n + 2) e.log10_backoff = parse_number(tok[n + 1], line_no);
      std::vector<std::string> words(tok.begin() + 1, tok.begin() + 1 + static_cast<long>(n));
      if (model.find(words)) throw ParseError("duplicate n-gram", line_no);
      model.set(words, e);
      ++seen;
    }
    if (seen != counts[n - 1]) {
      throw ParseError("count mismatch for order " + std::to_string(n) + ": header says " +
                           std::to_string(counts[n - 1]) + ", section has " + std::to_string(seen),
                       line_no);
    }
  }
  if (!have_line || line != "\\end\\") throw ParseError("expected \\end\\", line_no);
  try {
    model.validate();
  } catch (const DataError& e) {
    throw ParseError(e.what(), line_no);
  }
  return model;
}

ArpaModel parse_arpa_text(const std::string& text) {
  std::istringstream in(text);
  return parse_arpa(in);
}

void serialize_arpa(const ArpaModel& model, std::ostream& out) {
  char buf[64];
  out << "\\data\\\n";
  for (std::size_t n = 1; n <= model.order(); ++n) {
    out << "ngram " << n << '=' << model.count(n) << '\n';
  }
  for (std::size_t n = 1; n <= model.order(); ++n) {
    out << "\n\\" << n << "-grams:\n";
    for (const auto& [key, e] : model.grams(n)) {
      std::snprintf(buf, sizeof buf, "%.6f", e.log10_prob);
      out << buf << '\t' << key;
      if (e.log10_backoff) {
        std::snprintf(buf, sizeof buf, "%.6f", *e.log10_backoff);
        out << '\t' << buf;
      }
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

std::string serialize_arpa_text(const ArpaModel& model) {
  std::ostringstream out;
  serialize_arpa(model, out);
  return out.str();
}

ArpaModel load_arpa(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return parse_arpa(in);
}

void save_arpa(const ArpaModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  serialize_arpa(model, out);
}

ArpaModel train_ngram(const std::vector<std::string>& sentences, std::size_t order,
                      double discount) {
  if (sentences.empty()) throw DataError("empty corpus");
  if (order < 1 || order > 4) throw ParameterError("n-gram order must be in [1, 4]");
  if (!(discount > 0.0 && discount < 1.0)) throw ParameterError("discount must be in (0, 1)");
  using Gram = std::vector<std::string>;
  const std::string bos(kSentenceBegin), eos(kSentenceEnd), unk(kUnknownWord);

  // raw[n-1]: occurrence counts of n-grams.
  std::vector<std::map<Gram, double>> raw(order);
  for (const auto& s : sentences) {
    Gram toks{bos};
    for (auto& w : split_words(s)) toks.push_back(std::move(w));
    toks.push_back(eos);
    for (std::size_t n = 1; n <= order; ++n) {
      for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        Gram g(toks.begin() + static_cast<long>(i), toks.begin() + static_cast<long>(i + n));
        if (n == 1 && g[0] == bos) continue;
        raw[n - 1][g] += 1.0;
      }
    }
  }

  // Lower orders count distinct left extensions, except n-grams anchored at <s>.
  std::vector<std::map<Gram, double>> cnt(order);
  cnt[order - 1] = raw[order - 1];
  for (std::size_t n = order - 1; n >= 1; --n) {
    for (const auto& [g, c] : raw[n]) {
      Gram tail(g.begin() + 1, g.end());
      if (tail[0] != bos) cnt[n - 1][tail] += 1.0;
    }
    for (const auto& [g, c] : raw[n - 1]) {
      if (g[0] == bos) cnt[n - 1][g] = c;
    }
  }

  struct HistStat {
    double total = 0.0;
    double types = 0.0;
  };
  std::vector<std::map<Gram, HistStat>> hist(order);
  for (std::size_t n = 1; n <= order; ++n) {
    for (const auto& [g, c] : cnt[n - 1]) {
      auto& h = hist[n - 1][Gram(g.begin(), g.end() - 1)];
      h.total += c;
      h.types += 1.0;
    }
  }

  // Outcome space of the unigram level: observed words, </s>, <unk>.
  std::map<Gram, double> uni = cnt[0];
  uni.try_emplace(Gram{eos}, 0.0);
  uni.try_emplace(Gram{unk}, 0.0);
  const double uniform = 1.0 / static_cast<double>(uni.size());

  std::function<double(const Gram&)> prob = [&](const Gram& g) -> double {
    const std::size_t n = g.size();
    const Gram h(g.begin(), g.end() - 1);
    const auto hit = hist[n - 1].find(h);
    Gram lower(g.begin() + 1, g.end());
    if (hit == hist[n - 1].end()) return n == 1 ? uniform : prob(lower);
    const auto cit = cnt[n - 1].find(g);
    const double c = cit == cnt[n - 1].end() ? 0.0 : cit->second;
    const double gamma = discount * hit->second.types / hit->second.total;
    const double below = n == 1 ? uniform : prob(lower);
    return std::max(c - discount, 0.0) / hit->second.total + gamma * below;
  };

  ArpaModel model(order);
  for (const auto& [g, c] : uni) model.set(g, {std::log10(prob(g)), std::nullopt});
  model.set(Gram{bos}, {-99.0, std::nullopt});
  for (std::size_t n = 2; n <= order; ++n) {
    for (const auto& [g, c] : cnt[n - 1]) model.set(g, {std::log10(prob(g)), std::nullopt});
  }
  // A history seen at order n+1 carries its interpolation weight as backoff.
  for (std::size_t n = 2; n <= order; ++n) {
    for (const auto& [h, st] : hist[n - 1]) {
      const NgramEntry* e = model.find(h);
      if (e == nullptr) throw NumericError("history '" + join(h) + "' missing from model");
      NgramEntry updated = *e;
      updated.log10_backoff = std::log10(discount * st.types / st.total);
      model.set(h, updated);
    }
  }
  model.validate();
  return model;
}

}  // namespace neurotext
