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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gur/bench.hpp"
#include "gur/checkpoint.hpp"
#include "gur/eval.hpp"
#include "gur/lcs.hpp"
#include "gur/masker.hpp"
#include "gur/objectives.hpp"
#include "gur/pipeline.hpp"
#include "gur/tensor.hpp"
#include "gur/text.hpp"
#include "gur/trainer.hpp"
#include "gur/utf8.hpp"
#include "gur/vocab.hpp"

namespace {

using namespace gur;

struct GlobalFlags {
  std::string config_path;
  bool have_seed = false;
  std::uint64_t seed = 0;
  int threads = 1;
  bool deterministic = false;
};

RunConfig effective_config(const GlobalFlags& g) {
  RunConfig cfg;
  if (!g.config_path.empty()) cfg = load_run_config(g.config_path);
  if (g.have_seed) {
    cfg.seed = g.seed;
    cfg.train.seed = g.seed;
  }
  cfg.threads = g.threads;
  if (g.deterministic) {
    cfg.deterministic = true;
    cfg.threads = 1;
  }
  return cfg;
}

std::vector<std::string> heldout_texts(const std::string& path) {
  std::vector<std::string> texts;
  for (const std::string& line : read_lines(path)) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("text") ||
        !j["text"].is_string()) {
      throw UsageError("malformed text record: " + line.substr(0, 80));
    }
    texts.push_back(j["text"].get<std::string>());
  }
  if (texts.empty()) throw UsageError("no texts in " + path);
  return texts;
}

void write_report(const nlohmann::ordered_json& report,
                  const std::string& path) {
  std::cout << report.dump(2) << "\n";
  if (path.empty()) return;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path);
  out << report.dump(2) << "\n";
}

// --- selftest ------------------------------------------------------------

struct Check {
  const char* name;
  std::function<void()> fn;
};

void expect(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

void selftest_utf8() {
  std::string s = "Tom 正在追逐 Jerry! 123";
  expect(utf8_encode(utf8_decode(s)) == s, "utf8 roundtrip changed bytes");
  expect(utf8_length(s) == 19, "utf8 length wrong");
  expect(is_cjk(U'正') && !is_cjk(U'T'), "cjk classification wrong");
}

void selftest_normalize() {
  expect(normalize("  A,  B!  ") == "a b", "normalize rule broken");
  std::string n = normalize("Mixed 大小写 Text.");
  expect(normalize(n) == n, "normalize not idempotent");
}

void selftest_lcs() {
  Rng rng(7);
  const std::string alphabet = "abc";
  for (int trial = 0; trial < 200; ++trial) {
    std::string a, b;
    int la = 1 + static_cast<int>(rng.uniform(24));
    int lb = 1 + static_cast<int>(rng.uniform(24));
    for (int i = 0; i < la; ++i) a += alphabet[rng.uniform(3)];
    for (int i = 0; i < lb; ++i) b += alphabet[rng.uniform(3)];
    LcsResult fast = longest_common_substring(a, b);
    LcsResult slow = brute_force_lcs(a, b);
    expect(fast.char_length == slow.char_length &&
               fast.weight == slow.weight,
           "lcs mismatch on a=" + a + " b=" + b);
  }
}

void selftest_masker() {
  SpanDist dist = hump_geometric_pmf({});
  double sum = 0.0;
  for (double p : dist.pmf) sum += p;
  expect(std::abs(sum - 1.0) < 1e-12, "hump pmf does not sum to 1");
  expect(std::abs(dist.mean() - 3.7950959958414012) < 1e-12,
         "hump mean off");
  Rng rng(11);
  double total_rate = 0.0;
  for (int i = 0; i < 200; ++i) {
    MaskLayout layout = sample_layout(128, 0.15, dist, rng);
    total_rate += layout.masked_tokens() / 128.0;
    std::vector<int> tokens(128);
    for (int t = 0; t < 128; ++t) tokens[t] = 10 + t;
    CorruptedExample ex = corrupt(tokens, layout, 1000, 3);
    expect(decorrupt(ex, 1000, 32, 3) == tokens,
           "corrupt/decorrupt not a roundtrip");
  }
  double mean_rate = total_rate / 200.0;
  expect(mean_rate > 0.10 && mean_rate < 0.20,
         "mask rate out of band: " + std::to_string(mean_rate));
}

void selftest_autodiff() {
  TapeScope<double> scope;
  Rng rng(3);
  auto x = make_tensor<double>(4, 8, true);
  auto w = make_tensor<double>(8, 8, true);
  for (double& v : x->val) v = rng.normal() * 0.5;
  for (double& v : w->val) v = rng.normal() * 0.5;
  auto h = tanh_op(matmul(x, w));
  auto p = softmax_rows(h);
  std::vector<int> targets = {1, 3, 0, 7};
  auto loss = cross_entropy_rows(scale(p, 3.0), targets, -1);
  backward(loss);
  double base = loss->val[0];
  double g = w->grad[9];
  double h_step = 1e-6;
  double saved = w->val[9];
  w->val[9] = saved + h_step;
  TapeScope<double> scope2;
  auto loss2 = cross_entropy_rows(
      scale(softmax_rows(tanh_op(matmul(x, w))), 3.0), targets, -1);
  double fd = (loss2->val[0] - base) / h_step;
  w->val[9] = saved;
  expect(std::abs(fd - g) < 1e-4 * std::max(1.0, std::abs(g)),
         "gradient check failed: fd=" + std::to_string(fd) +
             " analytic=" + std::to_string(g));
}

void selftest_cl_loss() {
  TapeScope<float> scope;
  auto a = make_tensor<float>(2, 4, false);
  a->val = {1, 0, 0, 0, 0, 1, 0, 0};
  auto b = make_tensor<float>(2, 4, false);
  b->val = a->val;
  auto loss = cl_loss(a, b, 0.1);
  expect(std::abs(loss->val[0] - 4.5398899216870535e-05) < 1e-7,
         "cl identity loss off: " + std::to_string(loss->val[0]));
}

void selftest_optimizer() {
  auto p = make_tensor<float>(1, 1, true);
  p->val[0] = 2.0f;
  p->ensure_grad();
  p->grad[0] = 0.0f;
  AdamW<float> opt(0.9, 0.999, 1e-8, 0.01);
  opt.step({p}, 0.1);
  expect(std::abs(p->val[0] - 2.0 * (1.0 - 0.1 * 0.01)) < 1e-7,
         "decoupled decay wrong");
}

void selftest_rng() {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    expect(a.next_u64() == b.next_u64(), "rng streams diverge");
  }
}

int run_selftest() {
  std::vector<Check> checks = {
      {"utf8", selftest_utf8},       {"normalize", selftest_normalize},
      {"lcs", selftest_lcs},         {"masker", selftest_masker},
      {"autodiff", selftest_autodiff}, {"cl-loss", selftest_cl_loss},
      {"optimizer", selftest_optimizer}, {"rng", selftest_rng},
  };
  int failures = 0;
  for (const Check& c : checks) {
    try {
      c.fn();
      std::cout << "ok " << c.name << "\n";
    } catch (const std::exception& e) {
      std::cout << "FAIL " << c.name << ": " << e.what() << "\n";
      ++failures;
    }
  }
  if (failures > 0) {
    std::cout << failures << " selftest failure(s)\n";
    return 1;
  }
  std::cout << "all selftests passed\n";
  return 0;
}

// --- subcommand bodies ----------------------------------------------------

int cmd_mine(const GlobalFlags& g, const std::string& corpus,
             const std::string& out, const std::string& mode,
             bool no_lcs_filter, int num_shards, int short_threshold,
             int long_threshold, int d2t_chars) {
  RunConfig cfg = effective_config(g);
  MineOptions opts;
  opts.miner = cfg.miner;
  opts.num_shards = num_shards > 0 ? num_shards : cfg.num_shards;
  opts.d2t_content_chars =
      d2t_chars > 0 ? static_cast<std::size_t>(d2t_chars)
                    : cfg.d2t_content_chars;
  if (!mode.empty()) {
    if (mode == "all-pairs") {
      opts.miner.mode = MineMode::kAllPairs;
    } else if (mode == "title-content") {
      opts.miner.mode = MineMode::kTitleContent;
    } else {
      throw UsageError("unknown mode: " + mode);
    }
  }
  if (no_lcs_filter) opts.miner.lcs_filter = false;
  if (short_threshold > 0) {
    opts.miner.bucket_spec.short_lcs_threshold = short_threshold;
  }
  if (long_threshold > 0) {
    opts.miner.bucket_spec.long_lcs_threshold = long_threshold;
  }
  MineStats stats = run_mine(corpus, out, opts);
  nlohmann::ordered_json report;
  report["documents"] = stats.documents;
  report["short_pairs"] = stats.short_pairs;
  report["long_pairs"] = stats.long_pairs;
  report["d2t_examples"] = stats.d2t_examples;
  std::cout << report.dump() << "\n";
  return 0;
}

int cmd_build_dataset(const GlobalFlags& g, const std::string& in,
                      const std::string& out, int memory_budget_mb) {
  RunConfig cfg = effective_config(g);
  ExtSortOptions sort_opts;
  sort_opts.memory_budget = memory_budget_mb > 0
                                ? (static_cast<std::uint64_t>(memory_budget_mb) << 20)
                                : cfg.memory_budget;
  DatasetStats stats = run_build_dataset(in, out, cfg.seed, sort_opts);
  nlohmann::ordered_json report;
  report["short_records"] = stats.short_records;
  report["long_records"] = stats.long_records;
  report["d2t_records"] = stats.d2t_records;
  std::cout << report.dump() << "\n";
  return 0;
}

int cmd_train(const GlobalFlags& g, const std::string& data,
              const std::string& out, const std::string& mode,
              bool no_lcs_filter, int steps, int batch_short, int batch_long,
              int d2t_every, const std::string& span_dist) {
  RunConfig cfg = effective_config(g);
  TrainConfig tc = cfg.train;
  if (!mode.empty()) tc.mode = train_mode_from_name(mode);
  if (no_lcs_filter) tc.lcs_filter = false;
  if (steps > 0) tc.steps = steps;
  if (batch_short > 0) tc.batch_short = batch_short;
  if (batch_long > 0) tc.batch_long = batch_long;
  if (d2t_every >= 0) tc.d2t_every = d2t_every;
  if (!span_dist.empty()) tc.span_dist = span_dist;
  TrainResult result = train(tc, data, out);
  nlohmann::ordered_json report;
  report["steps"] = static_cast<long>(result.log.size());
  report["final_total_loss"] =
      result.log.empty() ? 0.0 : result.log.back().total_loss;
  report["checkpoint"] = result.checkpoint_dir;
  report["log"] = result.log_path;
  std::cout << report.dump() << "\n";
  return 0;
}

int cmd_represent(const GlobalFlags& g, const std::string& model_dir,
                  const std::string& input, const std::string& output) {
  RunConfig cfg = effective_config(g);
  GurModel<float> model = load_checkpoint(model_dir);
  std::vector<std::string> ids, texts;
  for (const std::string& line : read_lines(input)) {
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (!j.is_discarded() && j.is_object() && j.contains("text") &&
        j["text"].is_string()) {
      std::string id = j.contains("id")
                           ? (j["id"].is_string() ? j["id"].get<std::string>()
                                                  : j["id"].dump())
                           : std::to_string(ids.size());
      ids.push_back(id);
      texts.push_back(j["text"].get<std::string>());
    } else {
      ids.push_back(std::to_string(ids.size()));
      texts.push_back(line);
    }
  }
  if (texts.empty()) throw UsageError("no input texts in " + input);
  std::vector<std::vector<float>> emb =
      embed_texts(model, texts, cfg.threads);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!output.empty()) {
    file.open(output, std::ios::binary | std::ios::trunc);
    if (!file) throw UsageError("cannot write " + output);
    out = &file;
  }
  *out << std::setprecision(8);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    *out << ids[i] << "\t";
    for (std::size_t d = 0; d < emb[i].size(); ++d) {
      if (d) *out << ",";
      *out << emb[i][d];
    }
    *out << "\n";
  }
  return 0;
}

int cmd_eval_retrieval(const GlobalFlags& g, const std::string& model_dir,
                       bool use_bm25, const std::string& queries,
                       const std::string& corpus, const std::string& qrels,
                       int recall_k, int mrr_k, const std::string& report_path) {
  RunConfig cfg = effective_config(g);
  RetrievalTask task = load_retrieval_task(queries, corpus, qrels);
  int k = std::max(recall_k, mrr_k);
  std::vector<RankedList> ranked;
  std::string system;
  if (use_bm25) {
    Bm25Index index(task.corpus);
    ranked = bm25_search_all(index, task, k);
    system = "bm25";
  } else {
    if (model_dir.empty()) {
      throw UsageError("eval-retrieval needs --model or --bm25");
    }
    GurModel<float> model = load_checkpoint(model_dir);
    ranked = dense_search(model, task, k, cfg.threads);
    system = model_dir;
  }
  nlohmann::ordered_json report;
  report["system"] = system;
  report["queries"] = static_cast<long>(task.qrels.size());
  report["recall_k"] = recall_k;
  report["recall"] = recall_at_k(ranked, task.qrels, recall_k);
  report["mrr_k"] = mrr_k;
  report["mrr"] = mrr_at_k(ranked, task.qrels, mrr_k);
  write_report(report, report_path);
  return 0;
}

int cmd_eval_zeroshot(const GlobalFlags& g, const std::string& model_dir,
                      const std::string& labels_path,
                      const std::string& samples_path,
                      const std::string& report_path) {
  RunConfig cfg = effective_config(g);
  GurModel<float> model = load_checkpoint(model_dir);
  LabelSet labels = load_labels(labels_path);
  std::vector<std::pair<int, std::string>> samples =
      load_samples(samples_path);
  std::vector<std::string> texts;
  texts.reserve(samples.size());
  for (const auto& [label, text] : samples) texts.push_back(text);
  std::vector<int> predicted =
      zero_shot_classify(model, texts, labels, cfg.threads);
  long correct = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (predicted[i] == samples[i].first) ++correct;
  }
  nlohmann::ordered_json report;
  report["system"] = model_dir;
  report["samples"] = static_cast<long>(samples.size());
  report["labels"] = static_cast<long>(labels.labels.size());
  report["accuracy"] =
      static_cast<double>(correct) / static_cast<double>(samples.size());
  write_report(report, report_path);
  return 0;
}

int cmd_generate(const GlobalFlags& g, const std::string& model_dir,
                 const std::string& prompt, const std::string& prompts_path,
                 bool auto_prompts, int max_new) {
  RunConfig cfg = effective_config(g);
  GurModel<float> model = load_checkpoint(model_dir);
  if (!prompt.empty()) {
    std::cout << model.generate_greedy(prompt, max_new) << "\n";
    return 0;
  }
  if (prompts_path.empty()) {
    throw UsageError("generate needs --prompt or --prompts");
  }
  std::vector<PromptQuery> queries = load_prompt_queries(prompts_path);
  Rng rng(cfg.seed);
  for (const PromptQuery& q : queries) {
    std::string text = q.text;
    bool masked = false;
    if (auto_prompts) {
      AutoPrompt ap = make_auto_prompt(q.text, q.keywords, rng);
      text = ap.text;
      masked = ap.masked;
      if (!masked) {
        std::cerr << "generate: query " << q.id
                  << " is all keywords, left unmasked\n";
      }
    }
    nlohmann::ordered_json row;
    row["id"] = q.id;
    row["prompt"] = text;
    if (auto_prompts) row["masked"] = masked;
    row["output"] = model.generate_greedy(text, max_new);
    std::cout << row.dump() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GUR: joint denoising + contrastive pretraining pipeline"};
  app.set_version_flag("--version", std::string(GUR_BUILD_ID));
  app.require_subcommand(1);

  GlobalFlags g;
  app.add_option("--config", g.config_path, "JSON config file");
  auto* seed_opt =
      app.add_option("--seed", g.seed, "Seed override for all stages");
  app.add_option("--threads", g.threads, "Worker thread cap")
      ->check(CLI::Range(1, 256));
  app.add_flag("--deterministic", g.deterministic,
               "Force sequential execution");

  auto* mine = app.add_subcommand("mine", "Mine related sentence pairs");
  std::string mine_corpus, mine_out, mine_mode;
  bool mine_no_filter = false;
  int mine_shards = 0, mine_short_thr = 0, mine_long_thr = 0, mine_d2t = 0;
  mine->add_option("--corpus", mine_corpus, "Document JSONL")->required();
  mine->add_option("--out", mine_out, "Output shard directory")->required();
  mine->add_option("--mode", mine_mode, "all-pairs | title-content");
  mine->add_flag("--no-lcs-filter", mine_no_filter, "Keep all candidates");
  mine->add_option("--num-shards", mine_shards, "Output shard count");
  mine->add_option("--short-threshold", mine_short_thr,
                   "Short-bucket LCS weight threshold");
  mine->add_option("--long-threshold", mine_long_thr,
                   "Long-bucket LCS weight threshold");
  mine->add_option("--d2t-content-chars", mine_d2t,
                   "Prompt content cap in characters");

  auto* build = app.add_subcommand("build-dataset",
                                   "Dedup and shuffle mined shards");
  std::string build_in, build_out;
  int build_mb = 0;
  build->add_option("--in", build_in, "Mined shard directory")->required();
  build->add_option("--out", build_out, "Dataset directory")->required();
  build->add_option("--memory-budget-mb", build_mb, "Sort memory budget");

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  std::string train_data, train_out, train_mode, train_span;
  bool train_no_filter = false;
  int train_steps = 0, train_bs = 0, train_bl = 0, train_d2t = -1;
  train_cmd->add_option("--data", train_data, "Dataset directory")
      ->required();
  train_cmd->add_option("--out", train_out, "Checkpoint directory")
      ->required();
  train_cmd->add_option("--mode", train_mode, "full | cl-only | lm-only");
  train_cmd->add_flag("--no-lcs-filter", train_no_filter,
                      "Record that pairs were mined unfiltered");
  train_cmd->add_option("--steps", train_steps, "Optimizer steps");
  train_cmd->add_option("--batch-short", train_bs, "Short-bucket batch size");
  train_cmd->add_option("--batch-long", train_bl, "Long-bucket batch size");
  train_cmd->add_option("--d2t-every", train_d2t,
                        "Prompt-task cadence (0 disables)");
  train_cmd->add_option("--span-dist", train_span, "hump | geometric");

  auto* represent = app.add_subcommand("represent",
                                       "Embed texts with a checkpoint");
  std::string rep_model, rep_input, rep_output;
  represent->add_option("--model", rep_model, "Checkpoint directory")
      ->required();
  represent->add_option("--input", rep_input,
                        "Text or JSONL file, one entry per line")
      ->required();
  represent->add_option("--output", rep_output, "TSV output path");

  auto* evalr = app.add_subcommand("eval-retrieval",
                                   "Dense or BM25 retrieval metrics");
  std::string er_model, er_queries, er_corpus, er_qrels, er_report;
  bool er_bm25 = false;
  int er_recall_k = 10, er_mrr_k = 10;
  evalr->add_option("--model", er_model, "Checkpoint directory");
  evalr->add_flag("--bm25", er_bm25, "Score with the BM25 baseline");
  evalr->add_option("--queries", er_queries, "queries.jsonl")->required();
  evalr->add_option("--corpus", er_corpus, "corpus.jsonl")->required();
  evalr->add_option("--qrels", er_qrels, "qrels.tsv")->required();
  evalr->add_option("--recall-k", er_recall_k, "Recall cutoff");
  evalr->add_option("--mrr-k", er_mrr_k, "MRR cutoff");
  evalr->add_option("--report", er_report, "Write metrics JSON here");

  auto* evalz = app.add_subcommand("eval-zeroshot",
                                   "Nearest-label classification accuracy");
  std::string ez_model, ez_labels, ez_samples, ez_report;
  evalz->add_option("--model", ez_model, "Checkpoint directory")->required();
  evalz->add_option("--labels", ez_labels, "labels.jsonl")->required();
  evalz->add_option("--samples", ez_samples, "samples.jsonl")->required();
  evalz->add_option("--report", ez_report, "Write metrics JSON here");

  auto* gen = app.add_subcommand("generate", "Greedy span infilling");
  std::string gen_model, gen_prompt, gen_prompts;
  bool gen_auto = false;
  int gen_max_new = 32;
  gen->add_option("--model", gen_model, "Checkpoint directory")->required();
  gen->add_option("--prompt", gen_prompt, "Single prompt text");
  gen->add_option("--prompts", gen_prompts, "queries.jsonl with keywords");
  gen->add_flag("--auto-prompts", gen_auto,
                "Mask a non-keyword span of each query first");
  gen->add_option("--max-new", gen_max_new, "Token budget per generation");

  auto* selftest = app.add_subcommand("selftest", "Run invariant checks");
  (void)selftest;

  CLI11_PARSE(app, argc, argv);
  g.have_seed = seed_opt->count() > 0;

  try {
    if (mine->parsed()) {
      return cmd_mine(g, mine_corpus, mine_out, mine_mode, mine_no_filter,
                      mine_shards, mine_short_thr, mine_long_thr, mine_d2t);
    }
    if (build->parsed()) {
      return cmd_build_dataset(g, build_in, build_out, build_mb);
    }
    if (train_cmd->parsed()) {
      return cmd_train(g, train_data, train_out, train_mode, train_no_filter,
                       train_steps, train_bs, train_bl, train_d2t,
                       train_span);
    }
    if (represent->parsed()) {
      return cmd_represent(g, rep_model, rep_input, rep_output);
    }
    if (evalr->parsed()) {
      return cmd_eval_retrieval(g, er_model, er_bm25, er_queries, er_corpus,
                                er_qrels, er_recall_k, er_mrr_k, er_report);
    }
    if (evalz->parsed()) {
      return cmd_eval_zeroshot(g, ez_model, ez_labels, ez_samples, ez_report);
    }
    if (gen->parsed()) {
      return cmd_generate(g, gen_model, gen_prompt, gen_prompts, gen_auto,
                          gen_max_new);
    }
    return run_selftest();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
