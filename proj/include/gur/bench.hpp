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

#include <string>
#include <vector>

namespace gur {

// Templated topical benchmark. Every topic is an adjective-noun phrase
// whose letters alone clear the short-bucket LCS threshold, so the mined
// pairs of each document share that topic phrase. Query, evaluation,
// classification and held-out sentences use disjoint templates, making the
// retrieval and zero-shot tasks solvable only through the shared phrase.
struct BenchSpec {
  int topics = 100;  // at most 100 (10 adjectives x 10 nouns)
};

// The phrase for one topic index, e.g. "amber harbor".
std::string bench_phrase(int topic);

// Writes corpus.jsonl (training documents), eval_corpus.jsonl,
// queries.jsonl (+keywords), qrels.tsv, labels.jsonl, samples.jsonl and
// heldout.jsonl under dir. Fully deterministic.
void write_synthetic_benchmark(const std::string& dir, const BenchSpec& spec);

}  // namespace gur
