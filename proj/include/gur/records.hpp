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
#include <string_view>
#include <vector>

#include "gur/common.hpp"

namespace gur {

struct Document {
  std::string id;
  std::optional<std::string> title;
  std::vector<std::string> sentences;
};

struct SentencePair {
  std::string s1;
  std::string s2;
  std::string lcs;
  int weight = 0;
  std::string doc_id;
};

struct BucketSpec {
  int char_length_boundary = 64;
  int short_seq_len = 32;
  int long_seq_len = 128;
  int short_lcs_threshold = 10;
  int long_lcs_threshold = 15;
};

enum class Bucket { kShort, kLong };

const char* bucket_name(Bucket b);

// Length rule only: short iff max(len1, len2) < boundary. Lengths are in
// code points of the raw sentences.
Bucket bucket_for_lengths(std::size_t len1, std::size_t len2,
                          const BucketSpec& spec);

int bucket_threshold(Bucket b, const BucketSpec& spec);

// Length rule plus the bucket's LCS threshold; nullopt means discarded.
std::optional<Bucket> bucket_pair(const SentencePair& pair,
                                  const BucketSpec& spec);

// Parses one corpus line: {"id": ..., "title": ..., "text": ...}. The text
// is split into sentences here; title may be absent, null or empty.
Document parse_document_line(std::string_view line);

// One JSON object per line, keys in fixed alphabetical order so identical
// pairs serialize to identical bytes. Sentences are stored with the
// lexicographically smaller one first, which makes (a,b)/(b,a) duplicates
// collapse under byte-level dedup.
std::string serialize_pair(const SentencePair& pair);
SentencePair parse_pair_line(std::string_view line);

// Contiguous window of max_len tokens with a uniformly random start;
// shorter inputs pass through unchanged.
std::vector<int> random_crop(const std::vector<int>& tokens, int max_len,
                             Rng& rng);

}  // namespace gur
