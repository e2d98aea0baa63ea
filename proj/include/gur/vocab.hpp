// Copyright 2026 The GUR Authors
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
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gur {

// Character-level vocabulary. Layout: [PAD]=0, [UNK]=1, [CLS]=2, </s>=3,
// then the corpus characters in code-point order, then num_sentinels
// sentinel tokens at the top of the id space. Sentinel i has id
// sentinel_base() - i, so sentinels descend from the highest id.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kEos = 3;

  static Vocab build(const std::vector<std::string>& texts,
                     int num_sentinels = 32);
  // Reconstructs a vocabulary from its character list (checkpoint load).
  static Vocab from_chars(const std::vector<char32_t>& chars,
                          int num_sentinels);

  int size() const { return static_cast<int>(chars_.size()) + 4 + sentinels_; }
  int num_sentinels() const { return sentinels_; }
  int sentinel_base() const { return size() - 1; }
  int sentinel_id(int i) const;
  bool is_sentinel(int id) const;

  const std::vector<char32_t>& chars() const { return chars_; }

  // One id per character; unknown characters become [UNK]. No specials are
  // added here; callers prepend [CLS] or append </s> as their contract says.
  std::vector<int> tokenize(std::string_view text) const;

  // tokenize plus recognition of literal sentinel markers "<X0>".."<Xk>".
  std::vector<int> tokenize_with_sentinels(std::string_view text) const;

  // Inverse map; special ids render as [PAD], [UNK], [CLS], </s>, <Xi>.
  std::string detokenize(const std::vector<int>& ids) const;

 private:
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, int> to_id_;
  int sentinels_ = 0;
};

}  // namespace gur
