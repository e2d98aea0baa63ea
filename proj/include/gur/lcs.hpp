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
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gur {

// Minimal DFA over the substrings of one string. Built online in amortized
// linear time; state count <= 2n-1 (n >= 2), transitions <= 3n-4 (n >= 3).
class SuffixAutomaton {
 public:
  explicit SuffixAutomaton(const std::vector<char32_t>& s);
  explicit SuffixAutomaton(std::string_view s);

  bool accepts(const std::vector<char32_t>& t) const;
  bool accepts(std::string_view t) const;

  std::size_t state_count() const { return states_.size(); }
  std::size_t transition_count() const;

  // Length of the longest suffix of t[0..j] that is a substring of the
  // indexed string, for every j. The core of the LCS walk.
  std::vector<int> match_lengths(const std::vector<char32_t>& t) const;

 private:
  struct State {
    std::map<char32_t, int> next;
    int link = -1;
    int len = 0;
  };

  void extend(char32_t c);

  std::vector<State> states_;
  int last_ = 0;
};

struct LcsResult {
  std::string substring;
  int char_length = 0;
  int weight = 0;
};

// Character weight: CJK ideograph 5, ASCII letter or digit 1, all else 0.
// Calibrated so that 2 Hanzi and 10 Latin characters both clear the short
// threshold, 3 Hanzi and 15 Latin the long one.
int lcs_weight(std::string_view s);
int lcs_weight(const std::vector<char32_t>& cps);

// Longest common substring of a and b by character count, computed by
// walking b through the automaton of a. Ties break to the earliest end in
// b. The result is reported with zero-weight edge characters trimmed, so
// ("tom is chasing jerry", "jerry is chasing tom") yields "is chasing",
// not " is chasing ". weight is unaffected by the trim.
LcsResult longest_common_substring(std::string_view a, std::string_view b);

// Quadratic DP reference with the identical selection and trim rules.
// Guarded: |a|*|b| must stay within 10^6 characters squared.
LcsResult brute_force_lcs(std::string_view a, std::string_view b);

}  // namespace gur
