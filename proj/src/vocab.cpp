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

#include "gur/vocab.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "gur/utf8.hpp"

namespace gur {

Vocab Vocab::build(const std::vector<std::string>& texts, int num_sentinels) {
  std::set<char32_t> seen;
  for (const std::string& t : texts) {
    for (char32_t cp : utf8_decode(t)) seen.insert(cp);
  }
  return from_chars(std::vector<char32_t>(seen.begin(), seen.end()),
                    num_sentinels);
}

Vocab Vocab::from_chars(const std::vector<char32_t>& chars,
                        int num_sentinels) {
  if (num_sentinels < 1) {
    throw std::invalid_argument("Vocab: need at least one sentinel");
  }
  Vocab v;
  v.chars_ = chars;
  std::sort(v.chars_.begin(), v.chars_.end());
  v.chars_.erase(std::unique(v.chars_.begin(), v.chars_.end()),
                 v.chars_.end());
  v.sentinels_ = num_sentinels;
  for (std::size_t i = 0; i < v.chars_.size(); ++i) {
    v.to_id_[v.chars_[i]] = static_cast<int>(i) + 4;
  }
  return v;
}

int Vocab::sentinel_id(int i) const {
  if (i < 0 || i >= sentinels_) {
    throw std::invalid_argument("Vocab: sentinel index out of range");
  }
  return sentinel_base() - i;
}

bool Vocab::is_sentinel(int id) const {
  return id > sentinel_base() - sentinels_ && id <= sentinel_base();
}

std::vector<int> Vocab::tokenize(std::string_view text) const {
  std::vector<int> ids;
  for (char32_t cp : utf8_decode(text)) {
    auto it = to_id_.find(cp);
    ids.push_back(it == to_id_.end() ? kUnk : it->second);
  }
  return ids;
}

std::vector<int> Vocab::tokenize_with_sentinels(std::string_view text) const {
  std::vector<int> ids;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '<' && i + 3 < text.size() && text[i + 1] == 'X') {
      std::size_t j = i + 2;
      int num = 0;
      bool digits = false;
      while (j < text.size() && text[j] >= '0' && text[j] <= '9') {
        num = num * 10 + (text[j] - '0');
        digits = true;
        ++j;
      }
      if (digits && j < text.size() && text[j] == '>' && num < sentinels_) {
        ids.push_back(sentinel_id(num));
        i = j + 1;
        continue;
      }
    }
    // Fall back to one character starting at i.
    std::size_t start = i;
    ++i;
    while (i < text.size() &&
           (static_cast<unsigned char>(text[i]) & 0xC0) == 0x80) {
      ++i;
    }
    std::vector<int> one = tokenize(text.substr(start, i - start));
    ids.insert(ids.end(), one.begin(), one.end());
  }
  return ids;
}

std::string Vocab::detokenize(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id == kPad) {
      out += "[PAD]";
    } else if (id == kUnk) {
      out += "[UNK]";
    } else if (id == kCls) {
      out += "[CLS]";
    } else if (id == kEos) {
      out += "</s>";
    } else if (is_sentinel(id)) {
      out += "<X" + std::to_string(sentinel_base() - id) + ">";
    } else if (id >= 4 && id < 4 + static_cast<int>(chars_.size())) {
      utf8_append(out, chars_[id - 4]);
    } else {
      out += "[UNK]";
    }
  }
  return out;
}

}  // namespace gur
