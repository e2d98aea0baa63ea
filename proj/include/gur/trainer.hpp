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

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gur/masker.hpp"
#include "gur/model.hpp"
#include "gur/records.hpp"
#include "gur/tensor.hpp"

namespace gur {

enum class TrainMode { kFull, kClOnly, kLmOnly };

const char* train_mode_name(TrainMode m);
TrainMode train_mode_from_name(const std::string& name);

struct TrainConfig {
  double learning_rate = 1e-4;
  int warmup_steps = 100;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int steps = 2000;
  int batch_short = 64;
  int batch_long = 16;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::kFull;
  bool lcs_filter = true;  // provenance of the mined data, recorded in logs
  double alpha = 1.0;
  double temperature = 0.1;
  double clip_norm = 1.0;
  double mask_rate = 0.15;
  std::string span_dist = "hump";  // hump | geometric
  HumpGeometricParams span;
  double geo_p = 0.2;
  int d2t_every = 8;  // every Nth step trains on document2title; 0 disables
  BucketSpec bucket;
  ModelConfig model;

  void validate() const {
    if (!(learning_rate > 0)) {
      throw std::invalid_argument("TrainConfig: learning_rate must be > 0");
    }
    if (warmup_steps < 0) {
      throw std::invalid_argument("TrainConfig: warmup_steps must be >= 0");
    }
    if (steps < 1 || batch_short < 2 || batch_long < 2) {
      throw std::invalid_argument("TrainConfig: bad steps or batch sizes");
    }
    if (span_dist != "hump" && span_dist != "geometric") {
      throw std::invalid_argument("TrainConfig: span_dist must be hump or "
                                  "geometric");
    }
  }
};

// Constant with warmup: linear ramp over warmup_steps, then flat.
double lr_at(long step, const TrainConfig& cfg);

struct TrainLogRecord {
  long step = 0;
  double lm_loss = std::nan("");   // NaN = absent (mode without the term)
  double cl_loss = std::nan("");
  double total_loss = 0.0;
  double lr = 0.0;
  double wall_ms = 0.0;
};

std::string log_record_to_json(const TrainLogRecord& r);
TrainLogRecord log_record_from_json(const std::string& line);

// Adam with decoupled weight decay. Moments are kept in double regardless
// of the parameter scalar type; update order is the parameter registration
// order, so steps are bit-reproducible.
template <typename S>
class AdamW {
 public:
  AdamW(double beta1, double beta2, double eps, double weight_decay)
      : b1_(beta1), b2_(beta2), eps_(eps), wd_(weight_decay) {}

  void step(const std::vector<TensorPtr<S>>& params, double lr) {
    if (m_.empty()) {
      m_.resize(params.size());
      v_.resize(params.size());
      for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i].assign(params[i]->val.size(), 0.0);
        v_[i].assign(params[i]->val.size(), 0.0);
      }
    }
    if (m_.size() != params.size()) {
      throw std::invalid_argument("AdamW: parameter list changed size");
    }
    ++t_;
    double bc1 = 1.0 - std::pow(b1_, t_);
    double bc2 = 1.0 - std::pow(b2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      TensorPtr<S> p = params[i];
      if (m_[i].size() != p->val.size()) {
        throw std::invalid_argument("AdamW: parameter shape changed");
      }
      bool has_grad = p->has_grad();
      for (std::size_t j = 0; j < p->val.size(); ++j) {
        double g = has_grad ? static_cast<double>(p->grad[j]) : 0.0;
        if (!std::isfinite(g)) {
          throw std::runtime_error("optimizer_step: non-finite gradient");
        }
        m_[i][j] = b1_ * m_[i][j] + (1.0 - b1_) * g;
        v_[i][j] = b2_ * v_[i][j] + (1.0 - b2_) * g * g;
        double update = (m_[i][j] / bc1) / (std::sqrt(v_[i][j] / bc2) + eps_);
        double val = static_cast<double>(p->val[j]);
        val -= lr * wd_ * val;
        val -= lr * update;
        p->val[j] = static_cast<S>(val);
      }
    }
  }

  long steps_taken() const { return t_; }

 private:
  double b1_, b2_, eps_, wd_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Scales all gradients so their global norm is at most max_norm.
template <typename S>
void clip_gradients(const std::vector<TensorPtr<S>>& params,
                    double max_norm) {
  double norm = grad_global_norm(params);
  if (norm <= max_norm || norm == 0.0) return;
  S factor = static_cast<S>(max_norm / norm);
  for (const TensorPtr<S>& p : params) {
    for (S& g : p->grad) g *= factor;
  }
}

struct TrainResult {
  std::vector<TrainLogRecord> log;
  std::string checkpoint_dir;
  std::string log_path;
};

// Full training loop over the shards in data_dir (train.short.jsonl,
// train.long.jsonl, optional d2t.jsonl). Builds the vocabulary from the
// data, trains per the config, writes train_log.jsonl and a checkpoint
// under out_dir.
TrainResult train(const TrainConfig& cfg, const std::string& data_dir,
                  const std::string& out_dir);

// Mean denoising loss over fixed held-out batches; masking layouts derive
// from eval_seed only, so two models are scored on identical batches.
double evaluate_lm_loss(const GurModel<float>& model,
                        const std::vector<std::string>& texts,
                        const TrainConfig& cfg, std::uint64_t eval_seed,
                        int batch_size, int seq_len);

}  // namespace gur
