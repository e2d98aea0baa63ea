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

#include "gur/text.hpp"

#include "gur/utf8.hpp"

namespace gur {

namespace {

bool is_space_cp(char32_t cp) {
  return is_ascii_space(cp) || cp == 0x3000;
}

void flush_sentence(std::vector<char32_t>& cur, std::vector<std::string>& out) {
  std::size_t lo = 0;
  std::size_t hi = cur.size();
  while (lo < hi && is_space_cp(cur[lo])) ++lo;
  while (hi > lo && is_space_cp(cur[hi - 1])) --hi;
  if (hi > lo) {
    std::string s;
    for (std::size_t i = lo; i < hi; ++i) utf8_append(s, cur[i]);
    out.push_back(std::move(s));
  }
  cur.clear();
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view doc_text) {
  std::vector<char32_t> cps = utf8_decode(doc_text);
  std::vector<std::string> out;
  std::vector<char32_t> cur;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    cur.push_back(cps[i]);
    char32_t cp = cps[i];
    if (is_cjk_terminator(cp)) {
      flush_sentence(cur, out);
    } else if (is_ascii_terminator(cp)) {
      bool at_end = i + 1 == cps.size();
      if (at_end || is_space_cp(cps[i + 1])) flush_sentence(cur, out);
    }
  }
  flush_sentence(cur, out);
  return out;
}

std::string normalize(std::string_view sentence) {
  std::vector<char32_t> cps = utf8_decode(sentence);
  std::string out;
  bool pending_space = false;
  for (char32_t cp : cps) {
    if (is_punct(cp)) continue;
    if (is_space_cp(cp)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    if (cp >= 'A' && cp <= 'Z') cp += 'a' - 'A';
    utf8_append(out, cp);
  }
  return out;
}

}  // namespace gur
