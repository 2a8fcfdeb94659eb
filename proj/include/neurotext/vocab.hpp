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

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace neurotext {

/// Character inventory: a-z, space, apostrophe, then the CTC blank.
class CharVocab {
 public:
  static constexpr std::size_t kSize = 29;
  static constexpr int kBlank = 28;
  static constexpr int kSpace = 26;
  static constexpr int kApostrophe = 27;

  static constexpr std::size_t size() { return kSize; }
  static constexpr int blank() { return kBlank; }

  /// True for the 28 non-blank symbols.
  static bool contains(char c);
  /// Index of a non-blank symbol; throws DataError otherwise.
  static int index(char c);
  /// Symbol for an index; the blank renders as '_'.
  static char symbol(int id);

  static std::vector<int> encode(std::string_view text);
  static std::string decode(std::span<const int> ids);
};

}  // namespace neurotext
