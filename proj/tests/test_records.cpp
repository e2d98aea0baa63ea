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

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gur/common.hpp"
#include "gur/records.hpp"

using namespace gur;

TEST_CASE("parse_document_line reads id, title and sentences") {
  Document doc = parse_document_line(
      R"({"id": "d1", "title": "T", "text": "First one. Second one."})");
  CHECK(doc.id == "d1");
  REQUIRE(doc.title.has_value());
  CHECK(*doc.title == "T");
  REQUIRE(doc.sentences.size() == 2);
  CHECK(doc.sentences[0] == "First one.");
  CHECK(doc.sentences[1] == "Second one.");
}

TEST_CASE("parse_document_line treats missing, null and empty titles alike") {
  CHECK_FALSE(
      parse_document_line(R"({"id": "a", "text": "X."})").title.has_value());
  CHECK_FALSE(parse_document_line(R"({"id": "a", "title": null, "text": "X."})")
                  .title.has_value());
  CHECK_FALSE(parse_document_line(R"({"id": "a", "title": "", "text": "X."})")
                  .title.has_value());
}

TEST_CASE("parse_document_line rejects malformed lines") {
  CHECK_THROWS_AS(parse_document_line("not json"), UsageError);
  CHECK_THROWS_AS(parse_document_line(R"(["array"])"), UsageError);
  CHECK_THROWS_AS(parse_document_line(R"({"text": "X."})"), UsageError);
  CHECK_THROWS_AS(parse_document_line(R"({"id": "a"})"), UsageError);
  CHECK_THROWS_AS(parse_document_line(R"({"id": 7, "text": "X."})"),
                  UsageError);
}

TEST_CASE("bucket_for_lengths applies the 64-character boundary") {
  BucketSpec spec;
  CHECK(bucket_for_lengths(20, 30, spec) == Bucket::kShort);
  CHECK(bucket_for_lengths(20, 100, spec) == Bucket::kLong);
  CHECK(bucket_for_lengths(63, 63, spec) == Bucket::kShort);
  CHECK(bucket_for_lengths(64, 10, spec) == Bucket::kLong);
  CHECK(bucket_threshold(Bucket::kShort, spec) == 10);
  CHECK(bucket_threshold(Bucket::kLong, spec) == 15);
}

TEST_CASE("bucket_pair combines the length rule with the LCS threshold") {
  BucketSpec spec;
  SentencePair p;
  p.s1 = std::string(20, 'a');
  p.s2 = std::string(30, 'b');
  p.weight = 10;
  CHECK(bucket_pair(p, spec) == Bucket::kShort);

  p.s2 = std::string(100, 'b');
  p.weight = 15;
  CHECK(bucket_pair(p, spec) == Bucket::kLong);

  p.weight = 12;
  CHECK_FALSE(bucket_pair(p, spec).has_value());

  p.s2 = std::string(30, 'b');
  p.weight = 9;
  CHECK_FALSE(bucket_pair(p, spec).has_value());
}

TEST_CASE("serialize_pair canonicalizes the sentence order") {
  SentencePair p;
  p.s1 = "zebra sentence";
  p.s2 = "apple sentence";
  p.lcs = "sentence";
  p.weight = 8;
  p.doc_id = "d9";
  std::string line = serialize_pair(p);

  SentencePair q = p;
  std::swap(q.s1, q.s2);
  CHECK(serialize_pair(q) == line);

  SentencePair back = parse_pair_line(line);
  CHECK(back.s1 == "apple sentence");
  CHECK(back.s2 == "zebra sentence");
  CHECK(back.lcs == "sentence");
  CHECK(back.weight == 8);
  CHECK(back.doc_id == "d9");
}

TEST_CASE("parse_pair_line rejects malformed records") {
  CHECK_THROWS_AS(parse_pair_line("garbage"), UsageError);
  CHECK_THROWS_AS(parse_pair_line(R"({"s1": "a", "s2": "b"})"), UsageError);
  CHECK_THROWS_AS(
      parse_pair_line(
          R"({"doc_id": "d", "lcs": "x", "s1": "a", "s2": "b", "weight": "9"})"),
      UsageError);
}

TEST_CASE("random_crop basics") {
  Rng rng(5);
  std::vector<int> few = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(random_crop(few, 32, rng) == few);
  CHECK_THROWS_AS(random_crop(few, 0, rng), std::invalid_argument);

  std::vector<int> many(40);
  for (int i = 0; i < 40; ++i) many[i] = i;
  std::vector<int> crop = random_crop(many, 32, rng);
  REQUIRE(crop.size() == 32);
  for (int i = 1; i < 32; ++i) CHECK(crop[i] == crop[i - 1] + 1);
  CHECK(crop[0] >= 0);
  CHECK(crop[0] <= 8);
}

TEST_CASE("random_crop start positions are uniform") {
  Rng rng(17);
  std::vector<int> many(40);
  for (int i = 0; i < 40; ++i) many[i] = i;
  const int trials = 20000;
  std::map<int, int> counts;
  for (int t = 0; t < trials; ++t) {
    counts[random_crop(many, 32, rng)[0]] += 1;
  }
  REQUIRE(counts.size() == 9);
  for (const auto& [start, count] : counts) {
    double freq = static_cast<double>(count) / trials;
    CHECK(std::abs(freq - 1.0 / 9.0) < 0.01);
  }
}
