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

#include "gur/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gur/common.hpp"

namespace gur {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

json config_to_json(const ModelConfig& c) {
  json j;
  j["decoder_layers"] = c.decoder_layers;
  j["encoder_layers"] = c.encoder_layers;
  j["ffn_dim"] = c.ffn_dim;
  j["layer_norm_eps"] = c.layer_norm_eps;
  j["max_seq"] = c.max_seq;
  j["model_dim"] = c.model_dim;
  j["num_heads"] = c.num_heads;
  j["vector_dim"] = c.vector_dim;
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.decoder_layers = j.at("decoder_layers").get<int>();
  c.encoder_layers = j.at("encoder_layers").get<int>();
  c.ffn_dim = j.at("ffn_dim").get<int>();
  c.layer_norm_eps = j.at("layer_norm_eps").get<double>();
  c.max_seq = j.at("max_seq").get<int>();
  c.model_dim = j.at("model_dim").get<int>();
  c.num_heads = j.at("num_heads").get<int>();
  c.vector_dim = j.at("vector_dim").get<int>();
  return c;
}

}  // namespace

void save_checkpoint(const GurModel<float>& model, const std::string& dir) {
  fs::create_directories(dir);
  std::string bin;
  json table = json::array();
  for (const auto& [name, t] : model.named_params()) {
    json row;
    row["cols"] = t->cols;
    row["name"] = name;
    row["rows"] = t->rows;
    table.push_back(row);
    bin.append(reinterpret_cast<const char*>(t->val.data()),
               t->val.size() * sizeof(float));
  }
  {
    std::ofstream out(fs::path(dir) / "params.bin",
                      std::ios::binary | std::ios::trunc);
    out.write(bin.data(), static_cast<std::streamsize>(bin.size()));
    if (!out) throw std::runtime_error("save_checkpoint: write failed");
  }
  json manifest;
  manifest["config"] = config_to_json(model.config());
  manifest["format"] = 1;
  manifest["hash"] = hash_hex(fnv1a64(bin));
  manifest["params"] = table;
  json vocab;
  std::vector<std::uint32_t> chars;
  chars.reserve(model.vocab().chars().size());
  for (char32_t c : model.vocab().chars()) {
    chars.push_back(static_cast<std::uint32_t>(c));
  }
  vocab["chars"] = chars;
  vocab["num_sentinels"] = model.vocab().num_sentinels();
  manifest["vocab"] = vocab;
  std::ofstream out(fs::path(dir) / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << "\n";
  if (!out) throw std::runtime_error("save_checkpoint: manifest write failed");
}

GurModel<float> load_checkpoint(const std::string& dir,
                                const ModelConfig* expected) {
  fs::path mpath = fs::path(dir) / "manifest.json";
  std::ifstream min(mpath);
  if (!min) throw CheckpointError("cannot open " + mpath.string());
  json manifest = json::parse(min, nullptr, false);
  if (manifest.is_discarded()) {
    throw CheckpointError("manifest is not valid JSON");
  }
  ModelConfig cfg;
  Vocab vocab = Vocab::from_chars({}, 1);
  try {
    cfg = config_from_json(manifest.at("config"));
    std::vector<char32_t> chars;
    for (std::uint32_t c :
         manifest.at("vocab").at("chars").get<std::vector<std::uint32_t>>()) {
      chars.push_back(static_cast<char32_t>(c));
    }
    vocab = Vocab::from_chars(chars,
                              manifest.at("vocab").at("num_sentinels")
                                  .get<int>());
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("manifest field error: ") + e.what());
  }
  if (expected && !(cfg == *expected)) {
    throw CheckpointError("config mismatch against the expected model shape");
  }

  GurModel<float> model(cfg, vocab, 0);

  std::ifstream bin(fs::path(dir) / "params.bin",
                    std::ios::binary | std::ios::ate);
  if (!bin) throw CheckpointError("cannot open params.bin");
  std::streamsize size = bin.tellg();
  bin.seekg(0);
  std::string bytes(static_cast<std::size_t>(size), '\0');
  if (!bin.read(bytes.data(), size)) {
    throw CheckpointError("params.bin read failed");
  }
  if (manifest.at("hash").get<std::string>() != hash_hex(fnv1a64(bytes))) {
    throw CheckpointError("weight hash mismatch");
  }

  const json& table = manifest.at("params");
  const auto& params = model.named_params();
  if (table.size() != params.size()) {
    throw CheckpointError("parameter table size does not match the config");
  }
  std::size_t offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, t] = params[i];
    const json& row = table[i];
    if (row.at("name").get<std::string>() != name ||
        row.at("rows").get<int>() != t->rows ||
        row.at("cols").get<int>() != t->cols) {
      throw CheckpointError("parameter table entry mismatch at " + name);
    }
    std::size_t bytes_needed = t->val.size() * sizeof(float);
    if (offset + bytes_needed > bytes.size()) {
      throw CheckpointError("params.bin is truncated");
    }
    std::memcpy(t->val.data(), bytes.data() + offset, bytes_needed);
    offset += bytes_needed;
  }
  if (offset != bytes.size()) {
    throw CheckpointError("params.bin has trailing bytes");
  }
  return model;
}

}  // namespace gur
