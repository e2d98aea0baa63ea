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

#include "gur/records.hpp"

#include <stdexcept>

#include <json.hpp>

#include "gur/text.hpp"
#include "gur/utf8.hpp"

namespace gur {

using json = nlohmann::json;

const char* bucket_name(Bucket b) {
  return b == Bucket::kShort ? "short" : "long";
}

Bucket bucket_for_lengths(std::size_t len1, std::size_t len2,
                          const BucketSpec& spec) {
  std::size_t m = len1 > len2 ? len1 : len2;
  return m < static_cast<std::size_t>(spec.char_length_boundary)
             ? Bucket::kShort
             : Bucket::kLong;
}

int bucket_threshold(Bucket b, const BucketSpec& spec) {
  return b == Bucket::kShort ? spec.short_lcs_threshold
                             : spec.long_lcs_threshold;
}

std::optional<Bucket> bucket_pair(const SentencePair& pair,
                                  const BucketSpec& spec) {
  Bucket b =
      bucket_for_lengths(utf8_length(pair.s1), utf8_length(pair.s2), spec);
  if (pair.weight < bucket_threshold(b, spec)) return std::nullopt;
  return b;
}

Document parse_document_line(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw UsageError("malformed corpus line: not a JSON object");
  }
  if (!j.contains("id") || !j["id"].is_string()) {
    throw UsageError("malformed corpus line: missing string field \"id\"");
  }
  if (!j.contains("text") || !j["text"].is_string()) {
    throw UsageError("malformed corpus line: missing string field \"text\"");
  }
  Document doc;
  doc.id = j["id"].get<std::string>();
  if (j.contains("title") && j["title"].is_string()) {
    std::string t = j["title"].get<std::string>();
    if (!t.empty()) doc.title = std::move(t);
  }
  doc.sentences = split_sentences(j["text"].get<std::string>());
  return doc;
}

std::string serialize_pair(const SentencePair& pair) {
  const std::string& a = pair.s1 <= pair.s2 ? pair.s1 : pair.s2;
  const std::string& b = pair.s1 <= pair.s2 ? pair.s2 : pair.s1;
  json j;
  j["doc_id"] = pair.doc_id;
  j["lcs"] = pair.lcs;
  j["s1"] = a;
  j["s2"] = b;
  j["weight"] = pair.weight;
  return j.dump();
}

SentencePair parse_pair_line(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw UsageError("malformed pair line: not a JSON object");
  }
  for (const char* key : {"s1", "s2", "lcs", "doc_id"}) {
    if (!j.contains(key) || !j[key].is_string()) {
      throw UsageError(std::string("malformed pair line: missing field \"") +
                       key + "\"");
    }
  }
  if (!j.contains("weight") || !j["weight"].is_number_integer()) {
    throw UsageError("malformed pair line: missing integer field \"weight\"");
  }
  SentencePair p;
  p.s1 = j["s1"].get<std::string>();
  p.s2 = j["s2"].get<std::string>();
  p.lcs = j["lcs"].get<std::string>();
  p.weight = j["weight"].get<int>();
  p.doc_id = j["doc_id"].get<std::string>();
  return p;
}

std::vector<int> random_crop(const std::vector<int>& tokens, int max_len,
                             Rng& rng) {
  if (max_len < 1) throw std::invalid_argument("random_crop: max_len < 1");
  if (tokens.size() <= static_cast<std::size_t>(max_len)) return tokens;
  std::uint64_t starts = tokens.size() - max_len + 1;
  std::size_t s = static_cast<std::size_t>(rng.uniform(starts));
  return std::vector<int>(tokens.begin() + s, tokens.begin() + s + max_len);
}

}  // namespace gur
