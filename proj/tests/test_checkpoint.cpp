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

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gur/checkpoint.hpp"
#include "gur/model.hpp"
#include "gur/vocab.hpp"

#include "test_util.hpp"

using namespace gur;
using gur::testing::TempDir;
using gur::testing::read_file;
using gur::testing::write_file;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.model_dim = 16;
  cfg.num_heads = 2;
  cfg.encoder_layers = 1;
  cfg.decoder_layers = 1;
  cfg.vector_dim = 8;
  cfg.ffn_dim = 32;
  cfg.max_seq = 24;
  return cfg;
}

GurModel<float> tiny_model(std::uint64_t seed) {
  return GurModel<float>(tiny_config(), Vocab::build({"abcdef 中文"}), seed);
}

}  // namespace

TEST_CASE("save then load reproduces representations bit-exactly") {
  TempDir tmp("ckpt-roundtrip");
  GurModel<float> model = tiny_model(3);
  save_checkpoint(model, tmp.sub("ck"));

  GurModel<float> back = load_checkpoint(tmp.sub("ck"));
  CHECK(back.config() == model.config());
  CHECK(back.vocab().size() == model.vocab().size());
  for (const char* text : {"abc", "fed 中", "中文"}) {
    CHECK(back.represent(text) == model.represent(text));
  }

  ModelConfig expected = tiny_config();
  GurModel<float> checked = load_checkpoint(tmp.sub("ck"), &expected);
  CHECK(checked.represent("abc") == model.represent("abc"));
}

TEST_CASE("config mismatch is rejected") {
  TempDir tmp("ckpt-mismatch");
  save_checkpoint(tiny_model(4), tmp.sub("ck"));
  ModelConfig wrong = tiny_config();
  wrong.model_dim = 32;
  wrong.vector_dim = 16;
  CHECK_THROWS_AS(load_checkpoint(tmp.sub("ck"), &wrong), CheckpointError);
}

TEST_CASE("missing files are reported as corrupt") {
  TempDir tmp("ckpt-missing");
  CHECK_THROWS_AS(load_checkpoint(tmp.sub("nowhere")), CheckpointError);

  save_checkpoint(tiny_model(5), tmp.sub("ck"));
  std::filesystem::remove(std::filesystem::path(tmp.sub("ck")) /
                          "params.bin");
  CHECK_THROWS_AS(load_checkpoint(tmp.sub("ck")), CheckpointError);
}

TEST_CASE("truncated weights are rejected") {
  TempDir tmp("ckpt-trunc");
  save_checkpoint(tiny_model(6), tmp.sub("ck"));
  std::string bin_path =
      (std::filesystem::path(tmp.sub("ck")) / "params.bin").string();
  std::string bytes = read_file(bin_path);
  REQUIRE(bytes.size() > 64);
  write_file(bin_path, bytes.substr(0, bytes.size() - 32));
  CHECK_THROWS_AS(load_checkpoint(tmp.sub("ck")), CheckpointError);
}

TEST_CASE("flipped weight bytes fail the hash check") {
  TempDir tmp("ckpt-flip");
  save_checkpoint(tiny_model(7), tmp.sub("ck"));
  std::string bin_path =
      (std::filesystem::path(tmp.sub("ck")) / "params.bin").string();
  std::string bytes = read_file(bin_path);
  bytes[bytes.size() / 2] ^= 0x40;
  write_file(bin_path, bytes);
  CHECK_THROWS_AS(load_checkpoint(tmp.sub("ck")), CheckpointError);
}

TEST_CASE("garbage manifests are rejected") {
  TempDir tmp("ckpt-manifest");
  save_checkpoint(tiny_model(8), tmp.sub("ck"));
  std::string mpath =
      (std::filesystem::path(tmp.sub("ck")) / "manifest.json").string();
  write_file(mpath, "{not json");
  CHECK_THROWS_AS(load_checkpoint(tmp.sub("ck")), CheckpointError);
  write_file(mpath, R"({"irrelevant": 1})");
  CHECK_THROWS_AS(load_checkpoint(tmp.sub("ck")), CheckpointError);
}

TEST_CASE("the vocabulary survives the roundtrip") {
  TempDir tmp("ckpt-vocab");
  GurModel<float> model = tiny_model(9);
  save_checkpoint(model, tmp.sub("ck"));
  GurModel<float> back = load_checkpoint(tmp.sub("ck"));
  std::vector<int> ids = model.vocab().tokenize("fab 中");
  CHECK(back.vocab().tokenize("fab 中") == ids);
  CHECK(back.vocab().detokenize(ids) == "fab 中");
  CHECK(back.vocab().num_sentinels() == model.vocab().num_sentinels());
}
