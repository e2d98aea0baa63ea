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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "gur/common.hpp"
#include "gur/extsort.hpp"

#include "test_util.hpp"

using namespace gur;
using gur::testing::TempDir;
using gur::testing::read_file;
using gur::testing::write_file;

namespace {

std::vector<std::string> split_lines(const std::string& blob) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < blob.size()) {
    std::size_t nl = blob.find('\n', pos);
    if (nl == std::string::npos) nl = blob.size();
    if (nl > pos) out.push_back(blob.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

constexpr std::uint64_t kMiB = 1ull << 20;

}  // namespace

TEST_CASE("dedup_and_shuffle merges shards into a fixed permutation") {
  TempDir tmp("extsort-basic");
  write_file(tmp.sub("s0"), "a\nb\n");
  write_file(tmp.sub("s1"), "b\nc\n");
  write_file(tmp.sub("s2"), "c\n");
  std::vector<std::string> shards = {tmp.sub("s0"), tmp.sub("s1"),
                                     tmp.sub("s2")};

  std::uint64_t n = dedup_and_shuffle(shards, tmp.sub("out"), 7, kMiB);
  CHECK(n == 3);
  std::vector<std::string> lines = split_lines(read_file(tmp.sub("out")));
  std::vector<std::string> sorted = lines;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<std::string>{"a", "b", "c"});

  dedup_and_shuffle(shards, tmp.sub("out2"), 7, kMiB);
  CHECK(read_file(tmp.sub("out2")) == read_file(tmp.sub("out")));
}

TEST_CASE("output is independent of shard arrangement") {
  TempDir tmp("extsort-shards");
  std::vector<std::string> records;
  Rng rng(99);
  for (int i = 0; i < 500; ++i) {
    records.push_back("record-" + std::to_string(rng.next_u64() % 1000) + "-" +
                      std::to_string(i));
  }

  std::string one_blob;
  for (const std::string& r : records) one_blob += r + "\n";
  write_file(tmp.sub("all"), one_blob);

  std::string a_blob, b_blob;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (i % 3 == 0 ? a_blob : b_blob) += records[i] + "\n";
  }
  write_file(tmp.sub("part_a"), a_blob);
  write_file(tmp.sub("part_b"), b_blob);

  dedup_and_shuffle({tmp.sub("all")}, tmp.sub("merged1"), 13, kMiB);
  dedup_and_shuffle({tmp.sub("part_a"), tmp.sub("part_b")}, tmp.sub("merged2"),
                    13, kMiB);
  CHECK(read_file(tmp.sub("merged1")) == read_file(tmp.sub("merged2")));
}

TEST_CASE("different seeds give different permutations of the same multiset") {
  TempDir tmp("extsort-seeds");
  std::string blob;
  for (int i = 0; i < 200; ++i) blob += "row-" + std::to_string(i) + "\n";
  write_file(tmp.sub("in"), blob);

  dedup_and_shuffle({tmp.sub("in")}, tmp.sub("o1"), 1, kMiB);
  dedup_and_shuffle({tmp.sub("in")}, tmp.sub("o2"), 2, kMiB);
  std::vector<std::string> l1 = split_lines(read_file(tmp.sub("o1")));
  std::vector<std::string> l2 = split_lines(read_file(tmp.sub("o2")));
  CHECK(l1 != l2);
  std::sort(l1.begin(), l1.end());
  std::sort(l2.begin(), l2.end());
  CHECK(l1 == l2);
}

TEST_CASE("duplicates are dropped across shard boundaries") {
  TempDir tmp("extsort-dupes");
  const int unique = 10000;
  const std::string filler(100, 'x');  // >1 MiB total forces spilled runs
  std::string a_blob, b_blob;
  for (int i = 0; i < unique; ++i) {
    std::string rec =
        "payload-" + std::to_string(i * 7919) + "-" + filler + "\n";
    a_blob += rec;
    b_blob += rec;  // every record appears once per shard
  }
  write_file(tmp.sub("a"), a_blob);
  write_file(tmp.sub("b"), b_blob);

  // 1 MiB budget forces multiple sorted runs and a real merge.
  std::uint64_t n = dedup_and_shuffle({tmp.sub("a"), tmp.sub("b")},
                                      tmp.sub("out"), 3, kMiB);
  CHECK(n == unique);

  std::vector<std::string> lines = split_lines(read_file(tmp.sub("out")));
  REQUIRE(lines.size() == unique);
  std::map<std::string, int> counts;
  for (const std::string& l : lines) counts[l] += 1;
  for (const auto& [rec, count] : counts) CHECK(count == 1);
}

TEST_CASE("external_sort validates its options and inputs") {
  TempDir tmp("extsort-errors");
  write_file(tmp.sub("in"), "x\n");
  auto key = [](const std::string& r) { return fnv1a64(r); };

  ExtSortOptions small;
  small.memory_budget = kMiB - 1;
  CHECK_THROWS_AS(
      external_sort({tmp.sub("in")}, tmp.sub("out"), key, small), UsageError);

  ExtSortOptions fan;
  fan.merge_fan_in = 1;
  CHECK_THROWS_AS(external_sort({tmp.sub("in")}, tmp.sub("out"), key, fan),
                  UsageError);

  CHECK_THROWS_AS(
      external_sort({tmp.sub("missing")}, tmp.sub("out"), key,
                    ExtSortOptions{}),
      UsageError);
}

TEST_CASE("external_sort orders by key then record bytes") {
  TempDir tmp("extsort-order");
  write_file(tmp.sub("in"), "cherry\napple\nbanana\napple\n");
  auto key = [](const std::string&) { return std::uint64_t{0}; };
  ExtSortOptions opts;
  opts.drop_duplicates = true;
  std::uint64_t n = external_sort({tmp.sub("in")}, tmp.sub("out"), key, opts);
  CHECK(n == 3);
  CHECK(read_file(tmp.sub("out")) == "apple\nbanana\ncherry\n");
}
