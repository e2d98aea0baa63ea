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
#include <string>

#include "gur/extsort.hpp"
#include "gur/miner.hpp"
#include "gur/trainer.hpp"

namespace gur {

struct MineOptions {
  MinerConfig miner;
  int num_shards = 1;
  std::size_t d2t_content_chars = 112;
};

struct MineStats {
  long documents = 0;
  long short_pairs = 0;
  long long_pairs = 0;
  long d2t_examples = 0;
};

// Streams the document corpus and writes pairs.<bucket>.<shard>.jsonl plus
// d2t.<shard>.jsonl under out_dir. Shard = hash(doc id) mod num_shards, so
// a document's pairs always land together. With the LCS filter off every
// candidate is kept and bucketed by sentence lengths alone.
MineStats run_mine(const std::string& corpus_path, const std::string& out_dir,
                   const MineOptions& opts);

struct DatasetStats {
  long short_records = 0;
  long long_records = 0;
  long d2t_records = 0;
};

// Dedups and shuffles the mined shards into train.short.jsonl,
// train.long.jsonl and d2t.jsonl under out_dir. All three files are always
// created, possibly empty.
DatasetStats run_build_dataset(const std::string& in_dir,
                               const std::string& out_dir, std::uint64_t seed,
                               const ExtSortOptions& sort_opts);

// One config object for the whole pipeline; every field has a default and
// unknown keys are rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  int threads = 1;
  bool deterministic = false;
  int num_shards = 1;
  std::size_t memory_budget = 256ull << 20;
  std::size_t d2t_content_chars = 112;
  MinerConfig miner;
  TrainConfig train;
};

RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);

}  // namespace gur
