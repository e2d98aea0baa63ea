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

#include "gur/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "gur/utf8.hpp"

namespace gur {

namespace {

namespace fs = std::filesystem;

std::string pad3(int n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", n);
  return buf;
}

std::ofstream open_trunc(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + p.string());
  return out;
}

// Sorted list of in_dir files named <prefix><anything>.jsonl.
std::vector<std::string> glob_shards(const fs::path& in_dir,
                                     const std::string& prefix) {
  std::vector<std::string> out;
  if (!fs::is_directory(in_dir)) {
    throw UsageError("not a directory: " + in_dir.string());
  }
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (name.rfind(prefix, 0) == 0 && name.size() > 6 &&
        name.compare(name.size() - 6, 6, ".jsonl") == 0) {
      out.push_back(entry.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void check_keys(const nlohmann::json& j,
                std::initializer_list<const char*> keys, const char* where) {
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* k : keys) {
      if (key == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw UsageError(std::string("config: unknown key \"") + key +
                       "\" in " + where);
    }
  }
}

template <typename T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw UsageError(std::string("config: bad value for \"") + key + "\"");
  }
}

}  // namespace

MineStats run_mine(const std::string& corpus_path, const std::string& out_dir,
                   const MineOptions& opts) {
  if (opts.num_shards < 1 || opts.num_shards > 4096) {
    throw UsageError("mine: num_shards must be in [1, 4096]");
  }
  std::ifstream in(corpus_path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + corpus_path);
  fs::create_directories(out_dir);
  fs::path base(out_dir);

  std::vector<std::ofstream> short_out, long_out, d2t_out;
  for (int s = 0; s < opts.num_shards; ++s) {
    short_out.push_back(open_trunc(base / ("pairs.short." + pad3(s) + ".jsonl")));
    long_out.push_back(open_trunc(base / ("pairs.long." + pad3(s) + ".jsonl")));
    d2t_out.push_back(open_trunc(base / ("d2t." + pad3(s) + ".jsonl")));
  }

  MineStats stats;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    Document doc = parse_document_line(line);
    ++stats.documents;
    int shard = static_cast<int>(fnv1a64(doc.id) %
                                 static_cast<std::uint64_t>(opts.num_shards));
    for (const SentencePair& p : mine_pairs(doc, opts.miner)) {
      Bucket b;
      if (opts.miner.lcs_filter) {
        std::optional<Bucket> ob = bucket_pair(p, opts.miner.bucket_spec);
        if (!ob) continue;
        b = *ob;
      } else {
        b = bucket_for_lengths(utf8_length(p.s1), utf8_length(p.s2),
                               opts.miner.bucket_spec);
      }
      if (b == Bucket::kShort) {
        short_out[shard] << serialize_pair(p) << "\n";
        ++stats.short_pairs;
      } else {
        long_out[shard] << serialize_pair(p) << "\n";
        ++stats.long_pairs;
      }
    }
    std::optional<PromptExample> d2t =
        make_document2title_example(doc, opts.d2t_content_chars);
    if (d2t) {
      d2t_out[shard] << serialize_prompt_example(*d2t) << "\n";
      ++stats.d2t_examples;
    }
  }
  if (in.bad()) throw UsageError("read failed on " + corpus_path);
  for (auto* group : {&short_out, &long_out, &d2t_out}) {
    for (std::ofstream& f : *group) {
      f.close();
      if (!f) throw UsageError("mine: write failed in " + out_dir);
    }
  }
  return stats;
}

DatasetStats run_build_dataset(const std::string& in_dir,
                               const std::string& out_dir, std::uint64_t seed,
                               const ExtSortOptions& sort_opts) {
  fs::create_directories(out_dir);
  fs::path base(out_dir);
  DatasetStats stats;
  struct Job {
    const char* prefix;
    const char* out_name;
    std::uint64_t tag;
    long* count;
  };
  Job jobs[] = {
      {"pairs.short.", "train.short.jsonl", 1, &stats.short_records},
      {"pairs.long.", "train.long.jsonl", 2, &stats.long_records},
      {"d2t.", "d2t.jsonl", 3, &stats.d2t_records},
  };
  for (const Job& job : jobs) {
    std::vector<std::string> shards = glob_shards(in_dir, job.prefix);
    fs::path out = base / job.out_name;
    if (shards.empty()) {
      open_trunc(out);
      *job.count = 0;
      continue;
    }
    *job.count = static_cast<long>(dedup_and_shuffle(
        shards, out.string(), hash_mix(seed, job.tag),
        sort_opts.memory_budget));
  }
  return stats;
}

RunConfig parse_run_config(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw UsageError("config: not a JSON object");
  }
  check_keys(j, {"seed", "threads", "deterministic", "num_shards",
                 "memory_budget_mb", "miner", "bucket", "model", "train"},
             "top level");
  RunConfig cfg;
  read_field(j, "seed", cfg.seed);
  read_field(j, "threads", cfg.threads);
  read_field(j, "deterministic", cfg.deterministic);
  read_field(j, "num_shards", cfg.num_shards);
  if (j.contains("memory_budget_mb")) {
    std::uint64_t mb = 0;
    read_field(j, "memory_budget_mb", mb);
    cfg.memory_budget = mb << 20;
  }

  if (j.contains("miner")) {
    const nlohmann::json& m = j.at("miner");
    check_keys(m, {"mode", "lcs_filter", "unutilized_only",
                   "d2t_content_chars"},
               "miner");
    std::string mode = "all-pairs";
    read_field(m, "mode", mode);
    if (mode == "all-pairs") {
      cfg.miner.mode = MineMode::kAllPairs;
    } else if (mode == "title-content") {
      cfg.miner.mode = MineMode::kTitleContent;
    } else {
      throw UsageError("config: unknown miner mode: " + mode);
    }
    read_field(m, "lcs_filter", cfg.miner.lcs_filter);
    read_field(m, "unutilized_only", cfg.miner.unutilized_only);
    read_field(m, "d2t_content_chars", cfg.d2t_content_chars);
  }

  if (j.contains("bucket")) {
    const nlohmann::json& b = j.at("bucket");
    check_keys(b, {"char_length_boundary", "short_seq_len", "long_seq_len",
                   "short_lcs_threshold", "long_lcs_threshold"},
               "bucket");
    BucketSpec spec;
    read_field(b, "char_length_boundary", spec.char_length_boundary);
    read_field(b, "short_seq_len", spec.short_seq_len);
    read_field(b, "long_seq_len", spec.long_seq_len);
    read_field(b, "short_lcs_threshold", spec.short_lcs_threshold);
    read_field(b, "long_lcs_threshold", spec.long_lcs_threshold);
    if (spec.short_seq_len >= spec.long_seq_len ||
        spec.short_lcs_threshold <= 0 || spec.long_lcs_threshold <= 0) {
      throw UsageError("config: invalid bucket spec");
    }
    cfg.miner.bucket_spec = spec;
    cfg.train.bucket = spec;
  }

  if (j.contains("model")) {
    const nlohmann::json& m = j.at("model");
    check_keys(m, {"model_dim", "num_heads", "encoder_layers",
                   "decoder_layers", "vector_dim", "ffn_dim", "max_seq"},
               "model");
    ModelConfig& mc = cfg.train.model;
    read_field(m, "model_dim", mc.model_dim);
    read_field(m, "num_heads", mc.num_heads);
    read_field(m, "encoder_layers", mc.encoder_layers);
    read_field(m, "decoder_layers", mc.decoder_layers);
    read_field(m, "vector_dim", mc.vector_dim);
    read_field(m, "ffn_dim", mc.ffn_dim);
    read_field(m, "max_seq", mc.max_seq);
    mc.validate();
  }

  if (j.contains("train")) {
    const nlohmann::json& t = j.at("train");
    check_keys(t, {"learning_rate", "warmup_steps", "weight_decay", "beta1",
                   "beta2", "eps", "steps", "batch_short", "batch_long",
                   "mode", "alpha", "temperature", "clip_norm", "mask_rate",
                   "span_dist", "span", "geo_p", "d2t_every"},
               "train");
    TrainConfig& tc = cfg.train;
    read_field(t, "learning_rate", tc.learning_rate);
    read_field(t, "warmup_steps", tc.warmup_steps);
    read_field(t, "weight_decay", tc.weight_decay);
    read_field(t, "beta1", tc.beta1);
    read_field(t, "beta2", tc.beta2);
    read_field(t, "eps", tc.eps);
    read_field(t, "steps", tc.steps);
    read_field(t, "batch_short", tc.batch_short);
    read_field(t, "batch_long", tc.batch_long);
    if (t.contains("mode")) {
      std::string mode;
      read_field(t, "mode", mode);
      tc.mode = train_mode_from_name(mode);
    }
    read_field(t, "alpha", tc.alpha);
    read_field(t, "temperature", tc.temperature);
    read_field(t, "clip_norm", tc.clip_norm);
    read_field(t, "mask_rate", tc.mask_rate);
    read_field(t, "span_dist", tc.span_dist);
    if (t.contains("span")) {
      const nlohmann::json& s = t.at("span");
      check_keys(s, {"p", "mode", "lower", "upper"}, "train.span");
      read_field(s, "p", tc.span.p);
      read_field(s, "mode", tc.span.mode);
      read_field(s, "lower", tc.span.lower);
      read_field(s, "upper", tc.span.upper);
    }
    read_field(t, "geo_p", tc.geo_p);
    read_field(t, "d2t_every", tc.d2t_every);
    tc.validate();
  }

  cfg.train.seed = cfg.seed;
  cfg.train.lcs_filter = cfg.miner.lcs_filter;
  if (cfg.threads < 1) throw UsageError("config: threads must be >= 1");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open config " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_run_config(text);
}

}  // namespace gur
