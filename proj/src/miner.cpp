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

#include "gur/miner.hpp"

#include <json.hpp>

#include "gur/lcs.hpp"
#include "gur/text.hpp"
#include "gur/utf8.hpp"

namespace gur {

namespace {

SentencePair make_pair(const std::string& s1, const std::string& s2,
                       const std::string& doc_id) {
  LcsResult lcs = longest_common_substring(normalize(s1), normalize(s2));
  SentencePair p;
  p.s1 = s1;
  p.s2 = s2;
  p.lcs = lcs.substring;
  p.weight = lcs.weight;
  p.doc_id = doc_id;
  return p;
}

bool accepted(const SentencePair& p, const MinerConfig& cfg) {
  if (!cfg.lcs_filter) return true;
  Bucket b = bucket_for_lengths(utf8_length(p.s1), utf8_length(p.s2),
                                cfg.bucket_spec);
  return p.weight >= bucket_threshold(b, cfg.bucket_spec);
}

}  // namespace

std::vector<SentencePair> mine_pairs(const Document& doc,
                                     const MinerConfig& cfg) {
  std::vector<SentencePair> out;
  if (cfg.mode == MineMode::kTitleContent) {
    if (!doc.title || doc.sentences.empty()) return out;
    for (const std::string& s : doc.sentences) {
      if (s == *doc.title) continue;
      SentencePair p = make_pair(*doc.title, s, doc.id);
      if (accepted(p, cfg)) out.push_back(std::move(p));
    }
    return out;
  }
  std::size_t n = doc.sentences.size();
  std::vector<bool> used(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (cfg.unutilized_only && (used[i] || used[j])) continue;
      if (doc.sentences[i] == doc.sentences[j]) continue;
      SentencePair p = make_pair(doc.sentences[i], doc.sentences[j], doc.id);
      if (cfg.unutilized_only) {
        used[i] = true;
        used[j] = true;
      }
      if (accepted(p, cfg)) out.push_back(std::move(p));
    }
  }
  return out;
}

std::optional<PromptExample> make_document2title_example(
    const Document& doc, std::size_t max_content_chars) {
  if (!doc.title || doc.sentences.empty()) return std::nullopt;
  std::string content;
  for (const std::string& s : doc.sentences) {
    if (!content.empty()) content.push_back(' ');
    content += s;
  }
  std::vector<char32_t> cps = utf8_decode(content);
  if (cps.size() > max_content_chars) {
    cps.resize(max_content_chars);
    content = utf8_encode(cps);
  }
  PromptExample ex;
  ex.prompt = "document2title: " + content;
  ex.target = *doc.title;
  return ex;
}

std::string serialize_prompt_example(const PromptExample& ex) {
  nlohmann::ordered_json j;
  j["prompt"] = ex.prompt;
  j["target"] = ex.target;
  return j.dump();
}

PromptExample parse_prompt_line(std::string_view line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("prompt") ||
      !j.contains("target") || !j["prompt"].is_string() ||
      !j["target"].is_string()) {
    throw UsageError("malformed prompt record: " +
                     std::string(line.substr(0, 80)));
  }
  PromptExample ex;
  ex.prompt = j["prompt"].get<std::string>();
  ex.target = j["target"].get<std::string>();
  return ex;
}

}  // namespace gur
