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
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gur/checkpoint.hpp"
#include "gur/common.hpp"
#include "gur/lcs.hpp"
#include "gur/miner.hpp"
#include "gur/records.hpp"
#include "gur/trainer.hpp"
#include "test_util.hpp"

using namespace gur;
using namespace gur::testing;

namespace {

TrainConfig tiny_train_config() {
  TrainConfig cfg;
  cfg.steps = 40;
  cfg.batch_short = 4;
  cfg.batch_long = 2;
  cfg.warmup_steps = 10;
  cfg.seed = 5;
  cfg.model.model_dim = 16;
  cfg.model.num_heads = 2;
  cfg.model.encoder_layers = 1;
  cfg.model.decoder_layers = 1;
  cfg.model.vector_dim = 8;
  cfg.model.ffn_dim = 32;
  cfg.model.max_seq = 32;
  cfg.bucket.short_seq_len = 16;
  return cfg;
}

void write_tiny_dataset(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const char* subjects[] = {"amber", "briny", "cobalt", "dusty",
                            "eager", "foggy", "gilded", "hazy"};
  const char* objects[] = {"harbor", "meadow", "signal"};
  std::ostringstream shorts;
  for (const char* s : subjects) {
    for (const char* o : objects) {
      std::string s1 = std::string(s) + " " + o + " appears at dawn.";
      std::string s2 = std::string(s) + " " + o + " returns by dusk.";
      LcsResult lcs = longest_common_substring(s1, s2);
      SentencePair p;
      p.s1 = s1;
      p.s2 = s2;
      p.lcs = lcs.substring;
      p.weight = lcs.weight;
      p.doc_id = std::string("doc-") + s + "-" + o;
      shorts << serialize_pair(p) << "\n";
    }
  }
  write_file(dir / "train.short.jsonl", shorts.str());
  write_file(dir / "train.long.jsonl", "");
  std::ostringstream d2t;
  for (const char* s : subjects) {
    PromptExample ex;
    ex.prompt = std::string("document2title: ") + s + " field notes";
    ex.target = std::string(s) + " notes";
    d2t << serialize_prompt_example(ex) << "\n";
  }
  write_file(dir / "d2t.jsonl", d2t.str());
}

bool same_loss(double a, double b) {
  if (std::isnan(a) && std::isnan(b)) return true;
  return a == b;
}

}  // namespace

TEST_CASE("learning rate ramps linearly and then stays flat") {
  TrainConfig cfg;
  cfg.learning_rate = 1e-4;
  cfg.warmup_steps = 100;
  CHECK(lr_at(0, cfg) == doctest::Approx(0.0));
  CHECK(lr_at(50, cfg) == doctest::Approx(5e-5).epsilon(1e-12));
  CHECK(lr_at(100, cfg) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(lr_at(1000000, cfg) == doctest::Approx(1e-4).epsilon(1e-12));

  cfg.warmup_steps = 0;
  CHECK(lr_at(0, cfg) == doctest::Approx(1e-4).epsilon(1e-12));

  CHECK_THROWS_AS(lr_at(-1, cfg), std::invalid_argument);
}

TEST_CASE("log records survive a JSON roundtrip") {
  TrainLogRecord r;
  r.step = 17;
  r.lm_loss = 3.25;
  r.cl_loss = std::nan("");
  r.total_loss = 3.25;
  r.lr = 5e-5;
  r.wall_ms = 12.5;
  std::string line = log_record_to_json(r);
  CHECK(line.find("\"cl_loss\":null") != std::string::npos);
  CHECK(line.rfind("{\"step\":17", 0) == 0);

  TrainLogRecord back = log_record_from_json(line);
  CHECK(back.step == 17);
  CHECK(back.lm_loss == doctest::Approx(3.25));
  CHECK(std::isnan(back.cl_loss));
  CHECK(back.total_loss == doctest::Approx(3.25));
  CHECK(back.lr == doctest::Approx(5e-5));
  CHECK(back.wall_ms == doctest::Approx(12.5));

  CHECK_THROWS_AS(log_record_from_json("not json"), UsageError);
  CHECK_THROWS_AS(log_record_from_json("{\"step\": 1}"), UsageError);
}

TEST_CASE("optimizer leaves parameters alone without gradients or decay") {
  auto p = make_tensor<double>(1, 3, true);
  p->val = {1.0, -2.0, 0.5};
  AdamW<double> opt(0.9, 0.999, 1e-8, 0.0);
  opt.step({p}, 1e-3);
  CHECK(p->val[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p->val[1] == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(p->val[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(opt.steps_taken() == 1);
}

TEST_CASE("weight decay is decoupled from the gradient update") {
  auto p = make_tensor<double>(1, 1, true);
  p->val = {2.0};
  double lr = 0.1;
  double wd = 0.1;
  AdamW<double> opt(0.9, 0.999, 1e-8, wd);
  for (int i = 0; i < 3; ++i) opt.step({p}, lr);
  CHECK(p->val[0] == doctest::Approx(2.0 * std::pow(1.0 - lr * wd, 3))
                         .epsilon(1e-12));
}

TEST_CASE("first update moves by about lr in the gradient direction") {
  auto p = make_tensor<double>(1, 2, true);
  p->val = {0.0, 0.0};
  p->grad = {0.1, -0.2};
  AdamW<double> opt(0.9, 0.999, 1e-8, 0.0);
  opt.step({p}, 1e-3);
  CHECK(std::abs(p->val[0] - (-1e-3)) < 1e-9);
  CHECK(std::abs(p->val[1] - 1e-3) < 1e-9);
}

TEST_CASE("optimizer trace matches an independent implementation") {
  const std::vector<double> init = {1.0, -2.0, 0.5};
  const std::vector<double> grads = {0.1, -0.2, 0.3};
  const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8, wd = 0.01;

  auto p = make_tensor<double>(1, 3, true);
  p->val.assign(init.begin(), init.end());
  AdamW<double> opt(b1, b2, eps, wd);
  for (int t = 0; t < 5; ++t) {
    p->grad.assign(grads.begin(), grads.end());
    opt.step({p}, lr);
  }

  std::vector<double> ref = init, m(3, 0.0), v(3, 0.0);
  for (int t = 1; t <= 5; ++t) {
    for (int j = 0; j < 3; ++j) {
      double g = grads[j];
      m[j] = b1 * m[j] + (1.0 - b1) * g;
      v[j] = b2 * v[j] + (1.0 - b2) * g * g;
      double mhat = m[j] / (1.0 - std::pow(b1, t));
      double vhat = v[j] / (1.0 - std::pow(b2, t));
      ref[j] -= lr * wd * ref[j];
      ref[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
  for (int j = 0; j < 3; ++j) {
    CHECK(p->val[j] == doctest::Approx(ref[j]).epsilon(1e-12));
  }
}

TEST_CASE("optimizer rejects list changes and non-finite gradients") {
  auto a = make_tensor<double>(1, 2, true);
  auto b = make_tensor<double>(1, 2, true);
  AdamW<double> opt(0.9, 0.999, 1e-8, 0.0);
  opt.step({a, b}, 1e-3);
  CHECK_THROWS_AS(opt.step({a}, 1e-3), std::invalid_argument);

  auto c = make_tensor<double>(1, 1, true);
  c->grad = {std::numeric_limits<double>::infinity()};
  AdamW<double> opt2(0.9, 0.999, 1e-8, 0.0);
  CHECK_THROWS_AS(opt2.step({c}, 1e-3), std::runtime_error);
}

TEST_CASE("gradient clipping rescales to the requested global norm") {
  auto a = make_tensor<double>(1, 1, true);
  auto b = make_tensor<double>(1, 1, true);
  a->grad = {3.0};
  b->grad = {4.0};
  clip_gradients<double>({a, b}, 1.0);
  CHECK(a->grad[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(b->grad[0] == doctest::Approx(0.8).epsilon(1e-12));

  a->grad = {0.3};
  b->grad = {0.4};
  clip_gradients<double>({a, b}, 1.0);
  CHECK(a->grad[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(b->grad[0] == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("training writes logs and a loadable checkpoint") {
  TempDir tmp("trainer-loop");
  auto data = tmp.sub("data");
  write_tiny_dataset(data);
  TrainConfig cfg = tiny_train_config();

  TrainResult result = train(cfg, data, tmp.sub("out"));
  REQUIRE(result.log.size() == 40);
  for (std::size_t i = 0; i < result.log.size(); ++i) {
    const TrainLogRecord& r = result.log[i];
    CHECK(r.step == static_cast<long>(i));
    CHECK(std::isfinite(r.total_loss));
    CHECK_FALSE(std::isnan(r.lm_loss));
    CHECK_FALSE(std::isnan(r.cl_loss));
    CHECK(r.lr == doctest::Approx(lr_at(r.step, cfg)).epsilon(1e-12));
  }

  std::vector<std::string> lines = read_lines(result.log_path);
  REQUIRE(lines.size() == 40);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    TrainLogRecord r = log_record_from_json(lines[i]);
    CHECK(r.step == result.log[i].step);
    CHECK(same_loss(r.lm_loss, result.log[i].lm_loss));
    CHECK(same_loss(r.cl_loss, result.log[i].cl_loss));
    CHECK(r.total_loss == result.log[i].total_loss);
  }

  GurModel<float> model = load_checkpoint(result.checkpoint_dir, &cfg.model);
  std::vector<float> vec = model.represent("amber harbor appears at dawn.");
  CHECK(static_cast<int>(vec.size()) == cfg.model.vector_dim);
}

TEST_CASE("single-objective modes log the missing term as absent") {
  TempDir tmp("trainer-modes");
  auto data = tmp.sub("data");
  write_tiny_dataset(data);
  TrainConfig cfg = tiny_train_config();
  cfg.steps = 6;

  cfg.mode = TrainMode::kClOnly;
  TrainResult cl = train(cfg, data, tmp.sub("cl"));
  for (const TrainLogRecord& r : cl.log) {
    CHECK(std::isnan(r.lm_loss));
    CHECK_FALSE(std::isnan(r.cl_loss));
  }

  cfg.mode = TrainMode::kLmOnly;
  TrainResult lm = train(cfg, data, tmp.sub("lm"));
  for (const TrainLogRecord& r : lm.log) {
    CHECK_FALSE(std::isnan(r.lm_loss));
    CHECK(std::isnan(r.cl_loss));
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  TempDir tmp("trainer-determinism");
  auto data = tmp.sub("data");
  write_tiny_dataset(data);
  TrainConfig cfg = tiny_train_config();
  cfg.steps = 12;

  TrainResult r1 = train(cfg, data, tmp.sub("a"));
  TrainResult r2 = train(cfg, data, tmp.sub("b"));
  REQUIRE(r1.log.size() == r2.log.size());
  for (std::size_t i = 0; i < r1.log.size(); ++i) {
    CHECK(r1.log[i].step == r2.log[i].step);
    CHECK(same_loss(r1.log[i].lm_loss, r2.log[i].lm_loss));
    CHECK(same_loss(r1.log[i].cl_loss, r2.log[i].cl_loss));
    CHECK(r1.log[i].total_loss == r2.log[i].total_loss);
    CHECK(r1.log[i].lr == r2.log[i].lr);
  }
  CHECK(read_file(std::filesystem::path(r1.checkpoint_dir) / "params.bin") ==
        read_file(std::filesystem::path(r2.checkpoint_dir) / "params.bin"));
}

TEST_CASE("training requires the dataset shards") {
  TempDir tmp("trainer-missing");
  TrainConfig cfg = tiny_train_config();
  CHECK_THROWS_AS(train(cfg, tmp.sub("nowhere"),
                        tmp.sub("out")),
                  UsageError);
}

TEST_CASE("mode names roundtrip and reject unknowns") {
  CHECK(train_mode_from_name("full") == TrainMode::kFull);
  CHECK(train_mode_from_name("cl-only") == TrainMode::kClOnly);
  CHECK(train_mode_from_name("lm-only") == TrainMode::kLmOnly);
  CHECK(std::string(train_mode_name(TrainMode::kLmOnly)) == "lm-only");
  CHECK_THROWS_AS(train_mode_from_name("both"), UsageError);
}

TEST_CASE("held-out loss is a pure function of model, texts and seed") {
  TempDir tmp("trainer-eval");
  auto data = tmp.sub("data");
  write_tiny_dataset(data);
  TrainConfig cfg = tiny_train_config();
  cfg.steps = 4;
  TrainResult result = train(cfg, data, tmp.sub("out"));
  GurModel<float> model = load_checkpoint(result.checkpoint_dir);

  std::vector<std::string> texts = {"amber harbor appears at dawn.",
                                    "foggy meadow returns by dusk.",
                                    "gilded signal appears at dawn."};
  double a = evaluate_lm_loss(model, texts, cfg, 123, 2, 16);
  double b = evaluate_lm_loss(model, texts, cfg, 123, 2, 16);
  CHECK(a == b);
  CHECK(std::isfinite(a));
  CHECK(a > 0.0);

  CHECK_THROWS_AS(evaluate_lm_loss(model, {}, cfg, 123, 2, 16),
                  std::invalid_argument);
  CHECK_THROWS_AS(evaluate_lm_loss(model, texts, cfg, 123, 0, 16),
                  std::invalid_argument);
  CHECK_THROWS_AS(evaluate_lm_loss(model, texts, cfg, 123, 2, 2),
                  std::invalid_argument);
}
