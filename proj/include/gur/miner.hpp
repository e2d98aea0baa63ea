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

#include <optional>
#include <string>
#include <vector>

#include "gur/records.hpp"

namespace gur {

enum class MineMode { kAllPairs, kTitleContent };

struct MinerConfig {
  MineMode mode = MineMode::kAllPairs;
  bool lcs_filter = true;
  bool unutilized_only = true;
  BucketSpec bucket_spec;
};

// Candidate enumeration with greedy first-come matching. In all_pairs mode
// candidates are scanned in (i, j) order, i < j; with unutilized_only each
// sentence takes part in at most one tested candidate, whether or not that
// candidate passes the filter. In title_content mode the title pairs with
// every content sentence and nothing is consumed.
std::vector<SentencePair> mine_pairs(const Document& doc,
                                     const MinerConfig& cfg);

struct PromptExample {
  std::string prompt;
  std::string target;
};

// Prompt task: "document2title: <content...>" -> title. Content is the
// sentence sequence joined by spaces, truncated to max_content_chars code
// points. Untitled documents are skipped.
std::optional<PromptExample> make_document2title_example(
    const Document& doc, std::size_t max_content_chars = 112);

// One JSON object per line, fixed key order {"prompt", "target"}.
std::string serialize_prompt_example(const PromptExample& ex);
PromptExample parse_prompt_line(std::string_view line);

}  // namespace gur
