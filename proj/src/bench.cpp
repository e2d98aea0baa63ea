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

#include "gur/bench.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "gur/common.hpp"

namespace gur {

namespace {

const char* kAdjectives[10] = {"amber", "brisk", "coral", "dusty", "early",
                               "faded", "grand", "hazel", "ivory", "jaded"};
const char* kNouns[10] = {"harbor", "meadow", "signal", "window", "garden",
                          "bridge", "market", "canyon", "temple", "forest"};

// Six content templates per document; consecutive sentences share only
// "the <phrase>" plus filler letters once normalized, clearing the short
// threshold. Every filled sentence stays within 31 characters so a crop to
// the short bucket's 32-token window never cuts the topic phrase, and the
// phrase offset varies across templates so its position is not a shortcut.
const char* kContent[6] = {
    "The %P.",
    "See the %P now.",
    "We all admire the %P.",
    "Folks love the %P.",
    "Guides filmed the %P.",
    "Maps show the %P.",
};
const char* kEvalDoc = "The famous %P.";
const char* kQuery = "Where is the %P?";
const char* kSamples[2] = {
    "Kids visit the %P.",
    "Poems praise the %P.",
};
const char* kHeldout[2] = {
    "Nights reveal the %P.",
    "Towns honor the %P.",
};

std::string fill(const char* tmpl, const std::string& phrase) {
  std::string s(tmpl);
  std::size_t at = s.find("%P");
  s.replace(at, 2, phrase);
  return s;
}

std::string pad3(int n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", n);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + p.string());
  return out;
}

}  // namespace

std::string bench_phrase(int topic) {
  if (topic < 0 || topic >= 100) {
    throw std::invalid_argument("bench_phrase: topic out of range");
  }
  return std::string(kAdjectives[topic / 10]) + " " + kNouns[topic % 10];
}

void write_synthetic_benchmark(const std::string& dir,
                               const BenchSpec& spec) {
  if (spec.topics < 2 || spec.topics > 100) {
    throw UsageError("benchmark: topics must be in [2, 100]");
  }
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  fs::path base(dir);
  std::ofstream corpus = open_out(base / "corpus.jsonl");
  std::ofstream eval_corpus = open_out(base / "eval_corpus.jsonl");
  std::ofstream queries = open_out(base / "queries.jsonl");
  std::ofstream qrels = open_out(base / "qrels.tsv");
  std::ofstream labels = open_out(base / "labels.jsonl");
  std::ofstream samples = open_out(base / "samples.jsonl");
  std::ofstream heldout = open_out(base / "heldout.jsonl");

  for (int t = 0; t < spec.topics; ++t) {
    std::string phrase = bench_phrase(t);
    std::string doc_id = "d" + pad3(t);
    std::string query_id = "q" + pad3(t);

    std::string text;
    for (const char* tmpl : kContent) {
      if (!text.empty()) text.push_back(' ');
      text += fill(tmpl, phrase);
    }
    nlohmann::ordered_json doc;
    doc["id"] = doc_id;
    doc["title"] = phrase + " overview";
    doc["text"] = text;
    corpus << doc.dump() << "\n";

    nlohmann::ordered_json ed;
    ed["id"] = doc_id;
    ed["text"] = fill(kEvalDoc, phrase);
    eval_corpus << ed.dump() << "\n";

    std::size_t space = phrase.find(' ');
    nlohmann::ordered_json q;
    q["id"] = query_id;
    q["text"] = fill(kQuery, phrase);
    q["keywords"] = {phrase.substr(0, space), phrase.substr(space + 1)};
    queries << q.dump() << "\n";

    qrels << query_id << "\t" << doc_id << "\n";

    nlohmann::ordered_json lab;
    lab["id"] = t;
    lab["text"] = phrase;
    labels << lab.dump() << "\n";

    for (const char* tmpl : kSamples) {
      nlohmann::ordered_json s;
      s["label"] = t;
      s["text"] = fill(tmpl, phrase);
      samples << s.dump() << "\n";
    }
    for (int h = 0; h < 2; ++h) {
      nlohmann::ordered_json hd;
      hd["id"] = "h" + pad3(t) + (h == 0 ? "a" : "b");
      hd["text"] = fill(kHeldout[h], phrase);
      heldout << hd.dump() << "\n";
    }
  }
}

}  // namespace gur
