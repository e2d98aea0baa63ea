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

#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "gur/common.hpp"
#include "gur/model.hpp"

namespace gur {

struct RetrievalTask {
  std::vector<std::pair<std::string, std::string>> queries;  // (id, text)
  std::vector<std::pair<std::string, std::string>> corpus;   // (id, text)
  std::map<std::string, std::set<std::string>> qrels;

  // Every qrels doc id must exist in the corpus and every query id in the
  // query list; each qrels entry must name at least one relevant doc.
  void validate() const;
};

// queries.jsonl/corpus.jsonl: {"id": ..., "text": ...} per line.
// qrels.tsv: "query-id<TAB>doc-id" per line.
RetrievalTask load_retrieval_task(const std::string& queries_path,
                                  const std::string& corpus_path,
                                  const std::string& qrels_path);

// Whitespace-delimited Latin tokens plus one term per CJK character, over
// the normalized text; the sparse mirror of the char-level tokenizer.
std::vector<std::string> bm25_terms(const std::string& text);

class Bm25Index {
 public:
  explicit Bm25Index(
      const std::vector<std::pair<std::string, std::string>>& corpus,
      double k1 = 1.2, double b = 0.75);

  std::size_t size() const { return doc_lengths_.size(); }
  double average_doc_length() const { return avgdl_; }

  // Okapi score of one document against the query terms. Terms missing
  // from the document or the whole corpus contribute zero.
  double score(const std::vector<std::string>& query_terms,
               std::size_t doc_index) const;

  // All documents ranked by descending score, ties by ascending doc id.
  std::vector<std::pair<std::string, double>> search(
      const std::string& query_text, int k) const;

 private:
  std::unordered_map<std::string, std::vector<std::pair<std::size_t, int>>>
      postings_;
  std::vector<std::string> doc_ids_;
  std::vector<int> doc_lengths_;
  double avgdl_ = 0.0;
  double k1_, b_;
};

struct RankedList {
  std::string query_id;
  std::vector<std::string> doc_ids;  // best first
};

// Unit-norm embeddings of texts, one row per text, computed in chunks.
// Rows land at fixed positions, so the thread count never changes results.
std::vector<std::vector<float>> embed_texts(
    const GurModel<float>& model, const std::vector<std::string>& texts,
    int threads = 1, int chunk = 64);

// Exact top-k by cosine similarity (dot product of unit vectors), ties
// broken by ascending doc id.
std::vector<RankedList> dense_search(const GurModel<float>& model,
                                     const RetrievalTask& task, int k,
                                     int threads = 1);

std::vector<RankedList> bm25_search_all(const Bm25Index& index,
                                        const RetrievalTask& task, int k);

// Mean over qrels queries of |top-K hits| / |relevant|. Queries missing
// from `ranked` score zero and are flagged on stderr.
double recall_at_k(const std::vector<RankedList>& ranked,
                   const std::map<std::string, std::set<std::string>>& qrels,
                   int k);

// Mean over qrels queries of 1/rank of the first relevant doc in the
// top-K, zero when none appears.
double mrr_at_k(const std::vector<RankedList>& ranked,
                const std::map<std::string, std::set<std::string>>& qrels,
                int k);

struct LabelSet {
  std::vector<std::pair<int, std::string>> labels;  // (label id, label text)

  void validate() const;
};

// Nearest label by cosine similarity per sample; ties go to the smaller
// label id. Returns one label id per sample.
std::vector<int> zero_shot_classify(const GurModel<float>& model,
                                    const std::vector<std::string>& samples,
                                    const LabelSet& labels, int threads = 1);

struct AutoPrompt {
  std::string text;
  bool masked = false;  // false: query was all keywords, left unchanged
};

// Replaces one uniformly chosen maximal run of non-keyword terms with the
// first sentinel marker. Keywords are matched on normalized terms and are
// never masked.
AutoPrompt make_auto_prompt(const std::string& query,
                            const std::set<std::string>& keywords, Rng& rng);

// labels.jsonl: {"id": int, "text": ...}. samples.jsonl: {"label": int,
// "text": ...} with label referencing a label id.
LabelSet load_labels(const std::string& path);
std::vector<std::pair<int, std::string>> load_samples(
    const std::string& path);

struct PromptQuery {
  std::string id;
  std::string text;
  std::set<std::string> keywords;
};

// queries.jsonl rows may carry "keywords": [terms]; rows without the key
// get an empty set.
std::vector<PromptQuery> load_prompt_queries(const std::string& path);

}  // namespace gur
