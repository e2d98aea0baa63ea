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
#include <functional>
#include <string>
#include <vector>

namespace gur {

struct ExtSortOptions {
  std::uint64_t memory_budget = 256ull << 20;
  int merge_fan_in = 64;
  bool drop_duplicates = false;
};

// External merge sort of newline-delimited records. Records are ordered by
// (key(record), record bytes); equal records are adjacent in the merged
// stream, so duplicate dropping is a single comparison at write time.
// Returns the number of records written.
std::uint64_t external_sort(
    const std::vector<std::string>& input_paths, const std::string& out_path,
    const std::function<std::uint64_t(const std::string&)>& key,
    const ExtSortOptions& opts);

// Dedup then seeded shuffle. Pass one orders by (fnv1a64(r), r) and drops
// exact duplicates; pass two reorders the survivors by a seed-mixed hash.
// Output depends only on the input record multiset and the seed, never on
// shard boundaries or arrival order.
std::uint64_t dedup_and_shuffle(const std::vector<std::string>& shard_paths,
                                const std::string& out_path,
                                std::uint64_t seed,
                                std::uint64_t memory_budget);

}  // namespace gur
