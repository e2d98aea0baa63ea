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

#include "gur/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "gur/checkpoint.hpp"
#include "gur/miner.hpp"
#include "gur/objectives.hpp"
#include "gur/vocab.hpp"

namespace gur {

namespace {

namespace fs = std::filesystem;

// Stream over a fixed record set that reshuffles on wraparound. The
// permutation at epoch e depends only on (seed, tag, e), never on how many
// records each step consumed, so two runs with the same seed draw the same
// sequence.
class EpochStream {
 public:
  EpochStream(std::size_t size, std::uint64_t seed, std::uint64_t tag,
              std::string name)
      : order_(size), seed_(hash_mix(seed, tag)), name_(std::move(name)) {
    for (std::size_t i = 0; i < size; ++i) order_[i] = i;
    reshuffle();
  }

  bool empty() const { return order_.empty(); }
  long epoch() const { return epoch_; }

  std::size_t next() {
    if (pos_ >= order_.size()) reshuffle();
    return order_[pos_++];
  }

 private:
  void reshuffle() {
    Rng rng(hash_mix(seed_, static_cast<std::uint64_t>(++epoch_)));
    shuffle_vector(order_, rng);
    pos_ = 0;
    if (epoch_ > 1) {
      std::cerr << "trainer: " << name_ << " stream entering epoch " << epoch_
                << ", reshuffled\n";
    }
  }

  std::vector<std::size_t> order_;
  std::uint64_t seed_ = 0;
  std::string name_;
  std::size_t pos_ = 0;
  long epoch_ = 0;
};

SpanDist make_span_dist(const TrainConfig& cfg) {
  if (cfg.span_dist == "geometric") {
    return geometric_pmf(cfg.geo_p, cfg.span.lower, cfg.span.upper);
  }
  return hump_geometric_pmf(cfg.span);
}

// Crops the token ids to max_len and corrupts them with a fresh layout.
// Inputs too short to mask pass through with an EOS-only target.
CorruptedExample corrupt_text(const Vocab& vocab, const std::string& text,
                              int max_len, double rate, const SpanDist& dist,
                              Rng& rng) {
  std::vector<int> ids = random_crop(vocab.tokenize(text), max_len, rng);
  MaskLayout layout;
  if (static_cast<int>(ids.size()) >= 2) {
    layout = sample_layout(static_cast<int>(ids.size()), rate, dist, rng);
  }
  return corrupt(ids, layout, vocab.sentinel_base(), Vocab::kEos);
}

// Unit-norm embeddings of token crops packed to the batch's longest
// sequence; the training-time counterpart of represent_batch.
TensorPtr<float> embed_crops(const GurModel<float>& model,
                             const std::vector<const std::string*>& texts,
                             int max_len, Rng& rng) {
  std::vector<std::vector<int>> seqs;
  seqs.reserve(texts.size());
  int longest = 2;
  for (const std::string* t : texts) {
    std::vector<int> ids =
        random_crop(model.vocab().tokenize(*t), max_len, rng);
    longest = std::max(longest, static_cast<int>(ids.size()) + 1);
    seqs.push_back(std::move(ids));
  }
  PackedBatch pb = pack_sequences(seqs, longest, true);
  TensorPtr<float> enc = model.encode(pb.ids, pb.batch, pb.seq_len, pb.pad);
  return model.project_cls(enc, pb.batch, pb.seq_len);
}

LmBatch d2t_batch(const Vocab& vocab, const std::vector<PromptExample*>& exs,
                  int max_seq) {
  std::vector<CorruptedExample> ces;
  ces.reserve(exs.size());
  int enc_len = 2;
  for (const PromptExample* ex : exs) {
    CorruptedExample ce;
    ce.encoder_input = vocab.tokenize(ex->prompt);
    if (static_cast<int>(ce.encoder_input.size()) > max_seq - 1) {
      ce.encoder_input.resize(max_seq - 1);
    }
    ce.decoder_target = vocab.tokenize(ex->target);
    if (static_cast<int>(ce.decoder_target.size()) > max_seq - 2) {
      ce.decoder_target.resize(max_seq - 2);
    }
    ce.decoder_target.push_back(Vocab::kEos);
    enc_len = std::max(enc_len,
                       static_cast<int>(ce.encoder_input.size()) + 1);
    ces.push_back(std::move(ce));
  }
  return make_lm_batch(ces, enc_len);
}

double scalar_of(const TensorPtr<float>& t) {
  return static_cast<double>(t->val[0]);
}

void check_params_finite(const GurModel<float>& model, long step) {
  for (const auto& [name, t] : model.named_params()) {
    for (float v : t->val) {
      if (!std::isfinite(v)) {
        throw std::runtime_error("train: parameter " + name +
                                 " became non-finite after step " +
                                 std::to_string(step));
      }
    }
  }
}

}  // namespace

const char* train_mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::kFull: return "full";
    case TrainMode::kClOnly: return "cl-only";
    case TrainMode::kLmOnly: return "lm-only";
  }
  return "full";
}

TrainMode train_mode_from_name(const std::string& name) {
  if (name == "full") return TrainMode::kFull;
  if (name == "cl-only") return TrainMode::kClOnly;
  if (name == "lm-only") return TrainMode::kLmOnly;
  throw UsageError("unknown train mode: " + name);
}

double lr_at(long step, const TrainConfig& cfg) {
  if (step < 0) throw std::invalid_argument("lr_at: negative step");
  if (cfg.warmup_steps <= 0 || step >= cfg.warmup_steps) {
    return cfg.learning_rate;
  }
  return cfg.learning_rate * (static_cast<double>(step) / cfg.warmup_steps);
}

std::string log_record_to_json(const TrainLogRecord& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  if (std::isnan(r.lm_loss)) {
    j["lm_loss"] = nullptr;
  } else {
    j["lm_loss"] = r.lm_loss;
  }
  if (std::isnan(r.cl_loss)) {
    j["cl_loss"] = nullptr;
  } else {
    j["cl_loss"] = r.cl_loss;
  }
  j["total_loss"] = r.total_loss;
  j["lr"] = r.lr;
  j["wall_ms"] = r.wall_ms;
  return j.dump();
}

TrainLogRecord log_record_from_json(const std::string& line) {
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("step") ||
      !j.contains("total_loss") || !j.contains("lr") ||
      !j.contains("wall_ms")) {
    throw UsageError("malformed train log record: " + line.substr(0, 80));
  }
  TrainLogRecord r;
  r.step = j["step"].get<long>();
  if (j.contains("lm_loss") && !j["lm_loss"].is_null()) {
    r.lm_loss = j["lm_loss"].get<double>();
  }
  if (j.contains("cl_loss") && !j["cl_loss"].is_null()) {
    r.cl_loss = j["cl_loss"].get<double>();
  }
  r.total_loss = j["total_loss"].get<double>();
  r.lr = j["lr"].get<double>();
  r.wall_ms = j["wall_ms"].get<double>();
  return r;
}

TrainResult train(const TrainConfig& cfg, const std::string& data_dir,
                  const std::string& out_dir) {
  cfg.validate();
  fs::path data(data_dir);
  std::vector<SentencePair> shorts, longs;
  for (const std::string& line : read_lines((data / "train.short.jsonl").string())) {
    shorts.push_back(parse_pair_line(line));
  }
  for (const std::string& line : read_lines((data / "train.long.jsonl").string())) {
    longs.push_back(parse_pair_line(line));
  }
  std::vector<PromptExample> d2t;
  fs::path d2t_path = data / "d2t.jsonl";
  if (fs::exists(d2t_path)) {
    for (const std::string& line : read_lines(d2t_path.string())) {
      d2t.push_back(parse_prompt_line(line));
    }
  }
  if (shorts.empty() && longs.empty()) {
    throw UsageError("train: no pairs in " + data_dir);
  }

  std::vector<std::string> vocab_texts;
  vocab_texts.reserve(2 * (shorts.size() + longs.size()) + 2 * d2t.size());
  for (const SentencePair& p : shorts) {
    vocab_texts.push_back(p.s1);
    vocab_texts.push_back(p.s2);
  }
  for (const SentencePair& p : longs) {
    vocab_texts.push_back(p.s1);
    vocab_texts.push_back(p.s2);
  }
  for (const PromptExample& e : d2t) {
    vocab_texts.push_back(e.prompt);
    vocab_texts.push_back(e.target);
  }
  Vocab vocab = Vocab::build(vocab_texts);

  GurModel<float> model(cfg.model, vocab, cfg.seed);
  std::vector<TensorPtr<float>> params = model.trainable();
  AdamW<float> opt(cfg.beta1, cfg.beta2, cfg.eps, cfg.weight_decay);
  SpanDist dist = make_span_dist(cfg);
  LossWeights weights{cfg.alpha, cfg.temperature};

  EpochStream short_stream(shorts.size(), cfg.seed, 1, "short");
  EpochStream long_stream(longs.size(), cfg.seed, 2, "long");
  EpochStream d2t_stream(d2t.size(), cfg.seed, 3, "d2t");

  fs::create_directories(out_dir);
  fs::path log_path = fs::path(out_dir) / "train_log.jsonl";
  std::ofstream log_out(log_path, std::ios::binary | std::ios::trunc);
  if (!log_out) throw UsageError("cannot write " + log_path.string());

  TrainResult result;
  result.checkpoint_dir = out_dir;
  result.log_path = log_path.string();
  result.log.reserve(cfg.steps);

  bool want_lm = cfg.mode != TrainMode::kClOnly;
  bool want_cl = cfg.mode != TrainMode::kLmOnly;

  for (long step = 0; step < cfg.steps; ++step) {
    auto t0 = std::chrono::steady_clock::now();
    bool use_long = !longs.empty() && (shorts.empty() || (step % 2 == 1));
    const std::vector<SentencePair>& pool = use_long ? longs : shorts;
    EpochStream& stream = use_long ? long_stream : short_stream;
    int batch = use_long ? cfg.batch_long : cfg.batch_short;
    int seq_len = use_long ? cfg.bucket.long_seq_len
                           : cfg.bucket.short_seq_len;
    batch = std::min<int>(batch, static_cast<int>(pool.size()));
    if (batch < 2) {
      throw UsageError("train: bucket too small for a batch of 2");
    }
    std::vector<const SentencePair*> pairs;
    pairs.reserve(batch);
    for (int i = 0; i < batch; ++i) pairs.push_back(&pool[stream.next()]);

    bool d2t_step = want_lm && cfg.d2t_every > 0 && !d2t.empty() &&
                    step % cfg.d2t_every == cfg.d2t_every - 1;
    Rng rng(hash_mix(cfg.seed, static_cast<std::uint64_t>(step)));

    TapeScope<float> scope;
    TrainLogRecord rec;
    rec.step = step;
    rec.lr = lr_at(step, cfg);

    TensorPtr<float> loss;
    if (want_lm) {
      LmBatch lb;
      if (d2t_step) {
        std::vector<PromptExample*> exs;
        exs.reserve(batch);
        for (int i = 0; i < batch; ++i) {
          exs.push_back(&d2t[d2t_stream.next()]);
        }
        lb = d2t_batch(vocab, exs, cfg.model.max_seq);
      } else {
        std::vector<CorruptedExample> ces;
        ces.reserve(batch);
        for (const SentencePair* p : pairs) {
          ces.push_back(corrupt_text(vocab, p->s1, seq_len - 1,
                                     cfg.mask_rate, dist, rng));
        }
        lb = make_lm_batch(ces, seq_len);
      }
      loss = lm_loss(model, lb);
      rec.lm_loss = scalar_of(loss);
    }
    if (want_cl) {
      std::vector<const std::string*> a, b;
      a.reserve(batch);
      b.reserve(batch);
      for (const SentencePair* p : pairs) {
        a.push_back(&p->s1);
        b.push_back(&p->s2);
      }
      TensorPtr<float> ea = embed_crops(model, a, seq_len - 1, rng);
      TensorPtr<float> eb = embed_crops(model, b, seq_len - 1, rng);
      TensorPtr<float> cl = cl_loss(ea, eb, cfg.temperature);
      rec.cl_loss = scalar_of(cl);
      loss = loss ? total_loss(loss, cl, weights)
                  : scale(cl, static_cast<float>(cfg.alpha));
    }
    rec.total_loss = scalar_of(loss);
    if (!std::isfinite(rec.total_loss)) {
      throw std::runtime_error("train: non-finite loss at step " +
                               std::to_string(step));
    }

    backward(loss);
    clip_gradients(params, cfg.clip_norm);
    opt.step(params, rec.lr);
    for (const TensorPtr<float>& p : params) p->zero_grad();

    auto t1 = std::chrono::steady_clock::now();
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    log_out << log_record_to_json(rec) << "\n";
    result.log.push_back(rec);
  }
  check_params_finite(model, cfg.steps - 1);
  log_out.close();

  save_checkpoint(model, out_dir);
  return result;
}

double evaluate_lm_loss(const GurModel<float>& model,
                        const std::vector<std::string>& texts,
                        const TrainConfig& cfg, std::uint64_t eval_seed,
                        int batch_size, int seq_len) {
  if (texts.empty()) {
    throw std::invalid_argument("evaluate_lm_loss: no texts");
  }
  if (batch_size < 1 || seq_len < 4) {
    throw std::invalid_argument("evaluate_lm_loss: bad batch or seq length");
  }
  SpanDist dist = make_span_dist(cfg);
  Rng rng(eval_seed);
  const Vocab& vocab = model.vocab();
  double total = 0.0;
  long batches = 0;
  for (std::size_t start = 0; start < texts.size();
       start += static_cast<std::size_t>(batch_size)) {
    std::size_t stop = std::min(texts.size(),
                                start + static_cast<std::size_t>(batch_size));
    std::vector<CorruptedExample> ces;
    ces.reserve(stop - start);
    for (std::size_t i = start; i < stop; ++i) {
      ces.push_back(corrupt_text(vocab, texts[i], seq_len - 1, cfg.mask_rate,
                                 dist, rng));
    }
    LmBatch lb = make_lm_batch(ces, seq_len);
    total += scalar_of(lm_loss(model, lb));
    ++batches;
  }
  return total / static_cast<double>(batches);
}

}  // namespace gur
