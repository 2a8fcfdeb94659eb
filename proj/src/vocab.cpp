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

#include "neurotext/vocab.hpp"

#include "neurotext/errors.hpp"

namespace neurotext {

bool CharVocab::contains(char c) { return (c >= 'a' && c <= 'z') || c == ' ' || c == '\''; }

int CharVocab::index(char c) {
  if (c >= 'a' && c <= 'z') return c - 'a';
  if (c == ' ') return kSpace;
  if (c == '\'') return kApostrophe;
  throw DataError(std::string("character '") + c + "' is not in the vocabulary");
}

char CharVocab::symbol(int id) {
  if (id >= 0 && id < 26) return static_cast<char>('a' + id);
  if (id == kSpace) return ' ';
  if (id == kApostrophe) return '\'';
  if (id == kBlank) return '_';
  throw DataError("symbol id " + std::to_string(id) + " out of range");
}

std::vector<int> CharVocab::encode(std::string_view text) {
  std::vector<int> ids;
  ids.reserve(text.size());
  for (char c : text) ids.push_back(index(c));
  return ids;
}

std::string CharVocab::decode(std::span<const int> ids) {
  std::string s;
  s.reserve(ids.size());
  for (int id : ids) s.push_back(symbol(id));
  return s;
}

}  // namespace neurotext
