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

#include "gur/lcs.hpp"

#include <stdexcept>

#include "gur/utf8.hpp"

namespace gur {

SuffixAutomaton::SuffixAutomaton(const std::vector<char32_t>& s) {
  states_.emplace_back();
  states_.reserve(2 * s.size() + 1);
  for (char32_t c : s) extend(c);
}

SuffixAutomaton::SuffixAutomaton(std::string_view s)
    : SuffixAutomaton(utf8_decode(s)) {}

void SuffixAutomaton::extend(char32_t c) {
  int cur = static_cast<int>(states_.size());
  states_.emplace_back();
  states_[cur].len = states_[last_].len + 1;
  int p = last_;
  while (p != -1 && !states_[p].next.count(c)) {
    states_[p].next[c] = cur;
    p = states_[p].link;
  }
  if (p == -1) {
    states_[cur].link = 0;
  } else {
    int q = states_[p].next[c];
    if (states_[p].len + 1 == states_[q].len) {
      states_[cur].link = q;
    } else {
      int clone = static_cast<int>(states_.size());
      State copy = states_[q];
      copy.len = states_[p].len + 1;
      states_.push_back(std::move(copy));
      while (p != -1 && states_[p].next[c] == q) {
        states_[p].next[c] = clone;
        p = states_[p].link;
      }
      states_[q].link = clone;
      states_[cur].link = clone;
    }
  }
  last_ = cur;
}

bool SuffixAutomaton::accepts(const std::vector<char32_t>& t) const {
  int v = 0;
  for (char32_t c : t) {
    auto it = states_[v].next.find(c);
    if (it == states_[v].next.end()) return false;
    v = it->second;
  }
  return true;
}

bool SuffixAutomaton::accepts(std::string_view t) const {
  return accepts(utf8_decode(t));
}

std::size_t SuffixAutomaton::transition_count() const {
  std::size_t n = 0;
  for (const State& st : states_) n += st.next.size();
  return n;
}

std::vector<int> SuffixAutomaton::match_lengths(
    const std::vector<char32_t>& t) const {
  std::vector<int> out(t.size(), 0);
  int v = 0;
  int l = 0;
  for (std::size_t j = 0; j < t.size(); ++j) {
    char32_t c = t[j];
    while (v != 0 && !states_[v].next.count(c)) {
      v = states_[v].link;
      l = states_[v].len;
    }
    auto it = states_[v].next.find(c);
    if (it != states_[v].next.end()) {
      v = it->second;
      ++l;
    } else {
      v = 0;
      l = 0;
    }
    out[j] = l;
  }
  return out;
}

int lcs_weight(const std::vector<char32_t>& cps) {
  int w = 0;
  for (char32_t c : cps) {
    if (is_cjk(c)) {
      w += 5;
    } else if (is_latin_alnum(c)) {
      w += 1;
    }
  }
  return w;
}

int lcs_weight(std::string_view s) { return lcs_weight(utf8_decode(s)); }

namespace {

bool zero_weight(char32_t c) { return !is_cjk(c) && !is_latin_alnum(c); }

// Shared finalization: cut the window [end-len, end) out of b, trim
// zero-weight characters off both edges, and fill in length and weight.
LcsResult make_result(const std::vector<char32_t>& b, int end, int len) {
  std::size_t lo = static_cast<std::size_t>(end - len);
  std::size_t hi = static_cast<std::size_t>(end);
  while (lo < hi && zero_weight(b[lo])) ++lo;
  while (hi > lo && zero_weight(b[hi - 1])) --hi;
  LcsResult r;
  std::vector<char32_t> cps(b.begin() + lo, b.begin() + hi);
  r.substring = utf8_encode(cps);
  r.char_length = static_cast<int>(cps.size());
  r.weight = lcs_weight(cps);
  return r;
}

}  // namespace

LcsResult longest_common_substring(std::string_view a, std::string_view b) {
  std::vector<char32_t> bcp = utf8_decode(b);
  SuffixAutomaton sam(a);
  std::vector<int> lens = sam.match_lengths(bcp);
  int best = 0;
  int best_end = 0;
  for (std::size_t j = 0; j < lens.size(); ++j) {
    if (lens[j] > best) {
      best = lens[j];
      best_end = static_cast<int>(j) + 1;
    }
  }
  return make_result(bcp, best_end, best);
}

LcsResult brute_force_lcs(std::string_view a, std::string_view b) {
  std::vector<char32_t> acp = utf8_decode(a);
  std::vector<char32_t> bcp = utf8_decode(b);
  if (acp.size() * bcp.size() > 1000000) {
    throw std::invalid_argument("brute_force_lcs: input product exceeds 10^6");
  }
  std::size_t n = acp.size();
  std::size_t m = bcp.size();
  std::vector<int> prev(m + 1, 0);
  std::vector<int> cur(m + 1, 0);
  int best = 0;
  int best_end = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      cur[j] = (acp[i - 1] == bcp[j - 1]) ? prev[j - 1] + 1 : 0;
    }
    for (std::size_t j = 1; j <= m; ++j) {
      if (cur[j] > best ||
          (cur[j] == best && best > 0 && static_cast<int>(j) < best_end)) {
        best = cur[j];
        best_end = static_cast<int>(j);
      }
    }
    std::swap(prev, cur);
  }
  return make_result(bcp, best_end, best);
}

}  // namespace gur
