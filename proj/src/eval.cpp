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

#include "gur/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "gur/text.hpp"
#include "gur/threadpool.hpp"
#include "gur/utf8.hpp"

namespace gur {

namespace {

std::pair<std::string, std::string> parse_id_text(std::string_view line,
                                                  const char* what) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("id") ||
      !j.contains("text") || !j["text"].is_string()) {
    throw UsageError(std::string("malformed ") + what + " record: " +
                     std::string(line.substr(0, 80)));
  }
  std::string id = j["id"].is_string()
                       ? j["id"].get<std::string>()
                       : nlohmann::json(j["id"]).dump();
  return {id, j["text"].get<std::string>()};
}

// Ranks (score, id) pairs: descending score, ascending id on ties.
void rank_desc(std::vector<std::pair<double, std::string>>& scored) {
  std::sort(scored.begin(), scored.end(),
            [](const auto& a, const auto& b) {
              if (a.first != b.first) return a.first > b.first;
              return a.second < b.second;
            });
}

}  // namespace

void RetrievalTask::validate() const {
  std::set<std::string> doc_ids, query_ids;
  for (const auto& [id, text] : corpus) doc_ids.insert(id);
  for (const auto& [id, text] : queries) query_ids.insert(id);
  if (doc_ids.size() != corpus.size()) {
    throw UsageError("retrieval task: duplicate corpus ids");
  }
  for (const auto& [qid, rel] : qrels) {
    if (!query_ids.count(qid)) {
      throw UsageError("retrieval task: qrels query " + qid +
                       " missing from queries");
    }
    if (rel.empty()) {
      throw UsageError("retrieval task: query " + qid +
                       " has no relevant docs");
    }
    for (const std::string& did : rel) {
      if (!doc_ids.count(did)) {
        throw UsageError("retrieval task: qrels doc " + did +
                         " missing from corpus");
      }
    }
  }
}

RetrievalTask load_retrieval_task(const std::string& queries_path,
                                  const std::string& corpus_path,
                                  const std::string& qrels_path) {
  RetrievalTask task;
  for (const std::string& line : read_lines(queries_path)) {
    task.queries.push_back(parse_id_text(line, "query"));
  }
  for (const std::string& line : read_lines(corpus_path)) {
    task.corpus.push_back(parse_id_text(line, "corpus"));
  }
  for (const std::string& line : read_lines(qrels_path)) {
    std::size_t tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw UsageError("malformed qrels line: " + line.substr(0, 80));
    }
    task.qrels[line.substr(0, tab)].insert(line.substr(tab + 1));
  }
  task.validate();
  return task;
}

std::vector<std::string> bm25_terms(const std::string& text) {
  std::vector<std::string> terms;
  std::string latin;
  for (char32_t cp : utf8_decode(normalize(text))) {
    if (is_cjk(cp)) {
      if (!latin.empty()) {
        terms.push_back(std::move(latin));
        latin.clear();
      }
      terms.push_back(utf8_encode({cp}));
    } else if (cp == U' ') {
      if (!latin.empty()) {
        terms.push_back(std::move(latin));
        latin.clear();
      }
    } else {
      utf8_append(latin, cp);
    }
  }
  if (!latin.empty()) terms.push_back(std::move(latin));
  return terms;
}

Bm25Index::Bm25Index(
    const std::vector<std::pair<std::string, std::string>>& corpus,
    double k1, double b)
    : k1_(k1), b_(b) {
  if (corpus.empty()) throw UsageError("bm25: empty corpus");
  doc_ids_.reserve(corpus.size());
  doc_lengths_.reserve(corpus.size());
  double total_len = 0.0;
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    doc_ids_.push_back(corpus[d].first);
    std::vector<std::string> terms = bm25_terms(corpus[d].second);
    doc_lengths_.push_back(static_cast<int>(terms.size()));
    total_len += static_cast<double>(terms.size());
    std::map<std::string, int> tf;
    for (const std::string& t : terms) ++tf[t];
    for (const auto& [term, count] : tf) {
      postings_[term].push_back({d, count});
    }
  }
  avgdl_ = total_len / static_cast<double>(corpus.size());
}

double Bm25Index::score(const std::vector<std::string>& query_terms,
                        std::size_t doc_index) const {
  if (doc_index >= doc_lengths_.size()) {
    throw std::invalid_argument("bm25: document index out of range");
  }
  double n = static_cast<double>(doc_lengths_.size());
  double len = static_cast<double>(doc_lengths_[doc_index]);
  double score = 0.0;
  for (const std::string& term : query_terms) {
    auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const auto& plist = it->second;
    auto pit = std::lower_bound(
        plist.begin(), plist.end(), doc_index,
        [](const std::pair<std::size_t, int>& e, std::size_t d) {
          return e.first < d;
        });
    if (pit == plist.end() || pit->first != doc_index) continue;
    double tf = static_cast<double>(pit->second);
    double nt = static_cast<double>(plist.size());
    double idf = std::log(1.0 + (n - nt + 0.5) / (nt + 0.5));
    score += idf * tf * (k1_ + 1.0) /
             (tf + k1_ * (1.0 - b_ + b_ * len / avgdl_));
  }
  return score;
}

std::vector<std::pair<std::string, double>> Bm25Index::search(
    const std::string& query_text, int k) const {
  std::vector<std::string> terms = bm25_terms(query_text);
  std::vector<std::pair<double, std::string>> scored;
  scored.reserve(doc_ids_.size());
  for (std::size_t d = 0; d < doc_ids_.size(); ++d) {
    scored.push_back({score(terms, d), doc_ids_[d]});
  }
  rank_desc(scored);
  std::vector<std::pair<std::string, double>> out;
  std::size_t stop = std::min<std::size_t>(scored.size(),
                                           k < 1 ? 0 : static_cast<std::size_t>(k));
  out.reserve(stop);
  for (std::size_t i = 0; i < stop; ++i) {
    out.push_back({scored[i].second, scored[i].first});
  }
  return out;
}

std::vector<std::vector<float>> embed_texts(
    const GurModel<float>& model, const std::vector<std::string>& texts,
    int threads, int chunk) {
  if (chunk < 1) throw std::invalid_argument("embed_texts: chunk < 1");
  std::vector<std::vector<float>> out(texts.size());
  std::size_t num_chunks = (texts.size() + chunk - 1) / chunk;
  parallel_for(num_chunks, threads, [&](std::size_t c) {
    std::size_t start = c * static_cast<std::size_t>(chunk);
    std::size_t stop =
        std::min(texts.size(), start + static_cast<std::size_t>(chunk));
    std::vector<std::string> slice(texts.begin() + start,
                                   texts.begin() + stop);
    TensorPtr<float> emb = model.represent_batch(slice);
    for (std::size_t i = start; i < stop; ++i) {
      const float* row = emb->val.data() +
                         (i - start) * static_cast<std::size_t>(emb->cols);
      out[i].assign(row, row + emb->cols);
    }
  });
  return out;
}

namespace {

double dot(const std::vector<float>& a, const std::vector<float>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return s;
}

}  // namespace

std::vector<RankedList> dense_search(const GurModel<float>& model,
                                     const RetrievalTask& task, int k,
                                     int threads) {
  if (k < 1) throw std::invalid_argument("dense_search: k < 1");
  std::vector<std::string> doc_texts, query_texts;
  doc_texts.reserve(task.corpus.size());
  query_texts.reserve(task.queries.size());
  for (const auto& [id, text] : task.corpus) doc_texts.push_back(text);
  for (const auto& [id, text] : task.queries) query_texts.push_back(text);
  std::vector<std::vector<float>> doc_emb =
      embed_texts(model, doc_texts, threads);
  std::vector<std::vector<float>> query_emb =
      embed_texts(model, query_texts, threads);

  std::vector<RankedList> out(task.queries.size());
  parallel_for(task.queries.size(), threads, [&](std::size_t q) {
    std::vector<std::pair<double, std::string>> scored;
    scored.reserve(task.corpus.size());
    for (std::size_t d = 0; d < task.corpus.size(); ++d) {
      scored.push_back({dot(query_emb[q], doc_emb[d]), task.corpus[d].first});
    }
    rank_desc(scored);
    RankedList rl;
    rl.query_id = task.queries[q].first;
    std::size_t stop =
        std::min<std::size_t>(scored.size(), static_cast<std::size_t>(k));
    rl.doc_ids.reserve(stop);
    for (std::size_t i = 0; i < stop; ++i) {
      rl.doc_ids.push_back(scored[i].second);
    }
    out[q] = std::move(rl);
  });
  return out;
}

std::vector<RankedList> bm25_search_all(const Bm25Index& index,
                                        const RetrievalTask& task, int k) {
  std::vector<RankedList> out;
  out.reserve(task.queries.size());
  for (const auto& [qid, text] : task.queries) {
    RankedList rl;
    rl.query_id = qid;
    for (const auto& [did, score] : index.search(text, k)) {
      rl.doc_ids.push_back(did);
    }
    out.push_back(std::move(rl));
  }
  return out;
}

namespace {

double rank_metric(
    const std::vector<RankedList>& ranked,
    const std::map<std::string, std::set<std::string>>& qrels, int k,
    bool reciprocal) {
  if (k < 1) throw std::invalid_argument("rank metric: k < 1");
  if (qrels.empty()) throw std::invalid_argument("rank metric: empty qrels");
  std::unordered_map<std::string, const RankedList*> by_id;
  for (const RankedList& rl : ranked) by_id[rl.query_id] = &rl;
  double total = 0.0;
  for (const auto& [qid, rel] : qrels) {
    auto it = by_id.find(qid);
    if (it == by_id.end()) {
      std::cerr << "eval: query " << qid << " missing from results, scored 0\n";
      continue;
    }
    const std::vector<std::string>& docs = it->second->doc_ids;
    std::size_t stop =
        std::min<std::size_t>(docs.size(), static_cast<std::size_t>(k));
    if (reciprocal) {
      for (std::size_t i = 0; i < stop; ++i) {
        if (rel.count(docs[i])) {
          total += 1.0 / static_cast<double>(i + 1);
          break;
        }
      }
    } else {
      int hits = 0;
      for (std::size_t i = 0; i < stop; ++i) {
        if (rel.count(docs[i])) ++hits;
      }
      total += static_cast<double>(hits) / static_cast<double>(rel.size());
    }
  }
  return total / static_cast<double>(qrels.size());
}

}  // namespace

double recall_at_k(const std::vector<RankedList>& ranked,
                   const std::map<std::string, std::set<std::string>>& qrels,
                   int k) {
  return rank_metric(ranked, qrels, k, false);
}

double mrr_at_k(const std::vector<RankedList>& ranked,
                const std::map<std::string, std::set<std::string>>& qrels,
                int k) {
  return rank_metric(ranked, qrels, k, true);
}

void LabelSet::validate() const {
  if (labels.empty()) {
    throw UsageError("label set: no labels");
  }
  std::set<std::string> texts;
  std::set<int> ids;
  for (const auto& [id, text] : labels) {
    if (!texts.insert(text).second) {
      throw UsageError("label set: duplicate label text: " + text);
    }
    if (!ids.insert(id).second) {
      throw UsageError("label set: duplicate label id");
    }
  }
}

std::vector<int> zero_shot_classify(const GurModel<float>& model,
                                    const std::vector<std::string>& samples,
                                    const LabelSet& labels, int threads) {
  labels.validate();
  std::vector<std::string> label_texts;
  label_texts.reserve(labels.labels.size());
  for (const auto& [id, text] : labels.labels) label_texts.push_back(text);
  std::vector<std::vector<float>> label_emb =
      embed_texts(model, label_texts, threads);
  std::vector<std::vector<float>> sample_emb =
      embed_texts(model, samples, threads);
  std::vector<int> out(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t s) {
    double best = -2.0;
    int best_id = labels.labels.front().first;
    for (std::size_t l = 0; l < label_emb.size(); ++l) {
      double sim = dot(sample_emb[s], label_emb[l]);
      int id = labels.labels[l].first;
      if (sim > best || (sim == best && id < best_id)) {
        best = sim;
        best_id = id;
      }
    }
    out[s] = best_id;
  });
  return out;
}

AutoPrompt make_auto_prompt(const std::string& query,
                            const std::set<std::string>& keywords,
                            Rng& rng) {
  // Terms with byte extents: Latin runs and single CJK characters, so the
  // rewrite can splice the original bytes outside the masked run.
  struct Term {
    std::size_t begin, end;
    bool keyword;
  };
  std::set<std::string> normalized_keywords;
  for (const std::string& k : keywords) {
    normalized_keywords.insert(normalize(k));
  }
  std::vector<Term> terms;
  std::size_t i = 0;
  const unsigned char* bytes =
      reinterpret_cast<const unsigned char*>(query.data());
  while (i < query.size()) {
    std::size_t start = i;
    char32_t cp = 0;
    // Decode one code point; invalid bytes advance by one as U+FFFD.
    std::vector<char32_t> one =
        utf8_decode(std::string_view(query).substr(i, 4));
    cp = one.empty() ? 0xFFFD : one[0];
    std::size_t cp_len = 1;
    if ((bytes[i] & 0x80u) == 0) {
      cp_len = 1;
    } else if ((bytes[i] & 0xE0u) == 0xC0u) {
      cp_len = 2;
    } else if ((bytes[i] & 0xF0u) == 0xE0u) {
      cp_len = 3;
    } else if ((bytes[i] & 0xF8u) == 0xF0u) {
      cp_len = 4;
    }
    cp_len = std::min(cp_len, query.size() - i);
    if (is_cjk(cp)) {
      i += cp_len;
      std::string term = query.substr(start, i - start);
      terms.push_back({start, i,
                       normalized_keywords.count(normalize(term)) > 0});
    } else if (cp < 0x80 && !is_ascii_space(cp) && !is_punct(cp)) {
      while (i < query.size() && (bytes[i] & 0x80u) == 0 &&
             !is_ascii_space(bytes[i]) && !is_punct(bytes[i])) {
        ++i;
      }
      std::string term = query.substr(start, i - start);
      terms.push_back({start, i,
                       normalized_keywords.count(normalize(term)) > 0});
    } else {
      i += cp_len;
    }
  }

  // Maximal runs of consecutive non-keyword terms.
  std::vector<std::pair<std::size_t, std::size_t>> runs;  // term index range
  std::size_t t = 0;
  while (t < terms.size()) {
    if (terms[t].keyword) {
      ++t;
      continue;
    }
    std::size_t start = t;
    while (t < terms.size() && !terms[t].keyword) ++t;
    runs.push_back({start, t});
  }
  if (runs.empty()) return {query, false};
  auto [lo, hi] = runs[rng.uniform(runs.size())];
  std::size_t byte_lo = terms[lo].begin;
  std::size_t byte_hi = terms[hi - 1].end;
  AutoPrompt out;
  out.text = query.substr(0, byte_lo) + "<X0>" + query.substr(byte_hi);
  out.masked = true;
  return out;
}

LabelSet load_labels(const std::string& path) {
  LabelSet set;
  for (const std::string& line : read_lines(path)) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") ||
        !j.contains("text") || !j["id"].is_number_integer() ||
        !j["text"].is_string()) {
      throw UsageError("malformed label record: " + line.substr(0, 80));
    }
    set.labels.push_back({j["id"].get<int>(), j["text"].get<std::string>()});
  }
  set.validate();
  return set;
}

std::vector<std::pair<int, std::string>> load_samples(
    const std::string& path) {
  std::vector<std::pair<int, std::string>> out;
  for (const std::string& line : read_lines(path)) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("label") ||
        !j.contains("text") || !j["label"].is_number_integer() ||
        !j["text"].is_string()) {
      throw UsageError("malformed sample record: " + line.substr(0, 80));
    }
    out.push_back({j["label"].get<int>(), j["text"].get<std::string>()});
  }
  if (out.empty()) throw UsageError("no samples in " + path);
  return out;
}

std::vector<PromptQuery> load_prompt_queries(const std::string& path) {
  std::vector<PromptQuery> out;
  for (const std::string& line : read_lines(path)) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") ||
        !j.contains("text") || !j["text"].is_string()) {
      throw UsageError("malformed query record: " + line.substr(0, 80));
    }
    PromptQuery q;
    q.id = j["id"].is_string() ? j["id"].get<std::string>()
                               : nlohmann::json(j["id"]).dump();
    q.text = j["text"].get<std::string>();
    if (j.contains("keywords")) {
      if (!j["keywords"].is_array()) {
        throw UsageError("malformed keywords in query " + q.id);
      }
      for (const auto& k : j["keywords"]) {
        if (!k.is_string()) {
          throw UsageError("malformed keywords in query " + q.id);
        }
        q.keywords.insert(k.get<std::string>());
      }
    }
    out.push_back(std::move(q));
  }
  return out;
}

}  // namespace gur
