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

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace neurotext {

inline constexpr std::string_view kSentenceBegin = "<s>";
inline constexpr std::string_view kSentenceEnd = "</s>";
inline constexpr std::string_view kUnknownWord = "<unk>";
/// Score of a word when the model has no <unk> entry.
inline constexpr double kUnknownFloor = -100.0;

struct NgramEntry {
  double log10_prob = 0.0;
  std::optional<double> log10_backoff;
};

/// Backoff n-gram model. Keys are the words of an n-gram joined by single spaces.
class ArpaModel {
 public:
  explicit ArpaModel(std::size_t order = 1);

  std::size_t order() const { return grams_.size(); }
  /// Inserts or replaces; words.size() picks the order.
  void set(std::span<const std::string> words, NgramEntry entry);
  const NgramEntry* find(std::span<const std::string> words) const;
  const std::map<std::string, NgramEntry>& grams(std::size_t n) const { return grams_.at(n - 1); }
  std::size_t count(std::size_t n) const { return grams_.at(n - 1).size(); }

  bool has_word(std::string_view w) const;
  /// Unigram words, excluding <s>: the outcome space of score_word.
  std::vector<std::string> vocabulary() const;

  /// Katz backoff log10 P(word | context). Only the last order-1 context words are used.
  double score_word(std::span<const std::string> context, std::string_view word) const;

  /// Checks that every n-gram's prefix is present with a backoff weight.
  void validate() const;

 private:
  std::vector<std::map<std::string, NgramEntry>> grams_;
};

ArpaModel parse_arpa(std::istream& in);
ArpaModel parse_arpa_text(const std::string& text);
void serialize_arpa(const ArpaModel& model, std::ostream& out);
std::string serialize_arpa_text(const ArpaModel& model);
ArpaModel load_arpa(const std::string& path);
void save_arpa(const ArpaModel& model, const std::string& path);

/// Interpolated Kneser-Ney with a single fixed discount.
ArpaModel train_ngram(const std::vector<std::string>& sentences, std::size_t order = 4,
                      double discount = 0.75);

std::vector<std::string> split_words(std::string_view sentence);

}  // namespace neurotext
