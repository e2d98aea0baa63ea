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

// Pre-norm transformer encoder and decoder with a tanh projection head over
// the [CLS] state. The representation path reads encoder and head weights
// only; the decoder exists purely for the denoising objective and greedy
// generation. Sequences are packed as [batch*seq_len, dim] matrices.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gur/common.hpp"
#include "gur/tensor.hpp"
#include "gur/vocab.hpp"

namespace gur {

struct ModelConfig {
  int model_dim = 64;
  int num_heads = 4;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int vector_dim = 32;
  int ffn_dim = 256;
  int max_seq = 128;
  double layer_norm_eps = 1e-5;

  void validate() const {
    if (model_dim < 1 || num_heads < 1 || model_dim % num_heads != 0) {
      throw std::invalid_argument(
          "ModelConfig: model_dim must be a positive multiple of num_heads");
    }
    if (encoder_layers < 1 || decoder_layers < 1 || vector_dim < 1 ||
        ffn_dim < 1 || max_seq < 2) {
      throw std::invalid_argument("ModelConfig: non-positive dimension");
    }
  }

  bool operator==(const ModelConfig& o) const {
    return model_dim == o.model_dim && num_heads == o.num_heads &&
           encoder_layers == o.encoder_layers &&
           decoder_layers == o.decoder_layers && vector_dim == o.vector_dim &&
           ffn_dim == o.ffn_dim && max_seq == o.max_seq &&
           layer_norm_eps == o.layer_norm_eps;
  }
};

// Fixed-length batch of id sequences: [CLS]-prefixed, truncated, padded.
struct PackedBatch {
  std::vector<int> ids;             // batch * seq_len
  std::vector<unsigned char> pad;   // 1 where ids == [PAD]
  int batch = 0;
  int seq_len = 0;
};

inline PackedBatch pack_sequences(const std::vector<std::vector<int>>& seqs,
                                  int seq_len, bool prepend_cls) {
  PackedBatch out;
  out.batch = static_cast<int>(seqs.size());
  out.seq_len = seq_len;
  out.ids.assign(static_cast<std::size_t>(out.batch) * seq_len, Vocab::kPad);
  out.pad.assign(out.ids.size(), 1);
  for (int b = 0; b < out.batch; ++b) {
    int pos = 0;
    auto put = [&](int id) {
      out.ids[static_cast<std::size_t>(b) * seq_len + pos] = id;
      out.pad[static_cast<std::size_t>(b) * seq_len + pos] = 0;
      ++pos;
    };
    if (prepend_cls) put(Vocab::kCls);
    for (int id : seqs[b]) {
      if (pos >= seq_len) break;
      put(id);
    }
  }
  return out;
}

template <typename S>
class GurModel {
 public:
  GurModel(ModelConfig cfg, Vocab vocab, std::uint64_t seed)
      : cfg_(cfg), vocab_(std::move(vocab)) {
    cfg_.validate();
    if (vocab_.num_sentinels() < 1) {
      throw std::invalid_argument("GurModel: vocabulary has no sentinels");
    }
    Rng rng(seed);
    build_params(rng);
  }

  const ModelConfig& config() const { return cfg_; }
  const Vocab& vocab() const { return vocab_; }

  const std::vector<std::pair<std::string, TensorPtr<S>>>& named_params()
      const {
    return params_;
  }

  std::vector<TensorPtr<S>> trainable() const {
    std::vector<TensorPtr<S>> out;
    out.reserve(params_.size());
    for (const auto& [name, t] : params_) out.push_back(t);
    return out;
  }

  // Encoder and head parameters only; what represent() may touch.
  std::vector<TensorPtr<S>> encoder_side_params() const {
    std::vector<TensorPtr<S>> out;
    for (const auto& [name, t] : params_) {
      if (name.rfind("dec", 0) != 0) out.push_back(t);
    }
    return out;
  }

  TensorPtr<S> param(const std::string& name) const {
    for (const auto& [n, t] : params_) {
      if (n == name) return t;
    }
    throw std::invalid_argument("GurModel: no parameter named " + name);
  }

  // --- forward ----------------------------------------------------------

  // ids: batch*seq_len with [CLS] at each sequence head; pad marks [PAD]
  // slots. Returns hidden states [batch*seq_len, model_dim].
  TensorPtr<S> encode(const std::vector<int>& ids, int batch, int seq_len,
                      const std::vector<unsigned char>& pad) const {
    if (seq_len > cfg_.max_seq) {
      throw std::invalid_argument("encode: sequence length " +
                                  std::to_string(seq_len) + " exceeds max " +
                                  std::to_string(cfg_.max_seq));
    }
    if (ids.size() != static_cast<std::size_t>(batch) * seq_len ||
        pad.size() != ids.size()) {
      throw std::invalid_argument("encode: id/pad buffer size mismatch");
    }
    TensorPtr<S> x = embed_with_positions(ids, batch, seq_len, "enc_pos");
    S eps = static_cast<S>(cfg_.layer_norm_eps);
    for (int l = 0; l < cfg_.encoder_layers; ++l) {
      std::string p = "enc" + std::to_string(l) + ".";
      TensorPtr<S> h = layer_norm_rows(x, param(p + "ln1.g"),
                                       param(p + "ln1.b"), eps);
      TensorPtr<S> a = attention_block(p, h, h, batch, seq_len, seq_len, &pad,
                                       false);
      x = add(x, a);
      TensorPtr<S> h2 = layer_norm_rows(x, param(p + "ln2.g"),
                                        param(p + "ln2.b"), eps);
      x = add(x, ffn_block(p, h2));
    }
    return layer_norm_rows(x, param("enc_final.g"), param("enc_final.b"), eps);
  }

  // Projection head over the [CLS] rows: unit-norm [batch, vector_dim].
  TensorPtr<S> project_cls(const TensorPtr<S>& enc_states, int batch,
                           int seq_len) const {
    std::vector<int> cls_rows(batch);
    for (int b = 0; b < batch; ++b) cls_rows[b] = b * seq_len;
    TensorPtr<S> c = row_gather(enc_states, cls_rows);
    TensorPtr<S> h = tanh_op(
        add_row_broadcast(matmul(c, param("proj.W1")), param("proj.b1")));
    TensorPtr<S> z =
        add_row_broadcast(matmul(h, param("proj.W2")), param("proj.b2"));
    return normalize_rows(z);
  }

  // Unit-norm embeddings for a batch of texts: [N, vector_dim].
  TensorPtr<S> represent_batch(const std::vector<std::string>& texts) const {
    std::vector<std::vector<int>> seqs;
    seqs.reserve(texts.size());
    int longest = 1;
    for (const std::string& t : texts) {
      std::vector<int> ids = vocab_.tokenize(t);
      if (static_cast<int>(ids.size()) > cfg_.max_seq - 1) {
        ids.resize(cfg_.max_seq - 1);
      }
      longest = std::max(longest, static_cast<int>(ids.size()) + 1);
      seqs.push_back(std::move(ids));
    }
    PackedBatch pb = pack_sequences(seqs, longest, true);
    TensorPtr<S> enc = encode(pb.ids, pb.batch, pb.seq_len, pb.pad);
    return project_cls(enc, pb.batch, pb.seq_len);
  }

  std::vector<S> represent(const std::string& text) const {
    TensorPtr<S> e = represent_batch({text});
    return {e->val.begin(), e->val.end()};
  }

  // Decoder forward over packed target prefixes. Returns logits
  // [batch*dec_len, vocab_size] tied to the token embedding.
  TensorPtr<S> decode(const TensorPtr<S>& enc_states, int batch, int enc_len,
                      const std::vector<unsigned char>& enc_pad,
                      const std::vector<int>& dec_input, int dec_len) const {
    if (dec_len > cfg_.max_seq) {
      throw std::invalid_argument("decode: sequence length exceeds max");
    }
    if (dec_input.size() != static_cast<std::size_t>(batch) * dec_len) {
      throw std::invalid_argument("decode: input buffer size mismatch");
    }
    TensorPtr<S> y = embed_with_positions(dec_input, batch, dec_len,
                                          "dec_pos");
    S eps = static_cast<S>(cfg_.layer_norm_eps);
    for (int l = 0; l < cfg_.decoder_layers; ++l) {
      std::string p = "dec" + std::to_string(l) + ".";
      TensorPtr<S> h = layer_norm_rows(y, param(p + "ln1.g"),
                                       param(p + "ln1.b"), eps);
      y = add(y, attention_block(p + "self.", h, h, batch, dec_len, dec_len,
                                 nullptr, true));
      TensorPtr<S> h2 = layer_norm_rows(y, param(p + "ln2.g"),
                                        param(p + "ln2.b"), eps);
      y = add(y, attention_block(p + "cross.", h2, enc_states, batch, dec_len,
                                 enc_len, &enc_pad, false));
      TensorPtr<S> h3 = layer_norm_rows(y, param(p + "ln3.g"),
                                        param(p + "ln3.b"), eps);
      y = add(y, ffn_block(p, h3));
    }
    y = layer_norm_rows(y, param("dec_final.g"), param("dec_final.b"), eps);
    return matmul_nt(y, param("tok_emb"));
  }

  // Next-token logits after the given prefix (batch of one).
  std::vector<S> decode_step(const TensorPtr<S>& enc_states, int enc_len,
                             const std::vector<unsigned char>& enc_pad,
                             const std::vector<int>& prefix) const {
    TensorPtr<S> logits =
        decode(enc_states, 1, enc_len, enc_pad, prefix,
               static_cast<int>(prefix.size()));
    int v = logits->cols;
    std::vector<S> out(v);
    for (int j = 0; j < v; ++j) {
      out[j] = logits->val[static_cast<std::size_t>(logits->rows - 1) * v + j];
    }
    return out;
  }

  // Greedy argmax decoding until </s> or max_new tokens. The prompt may
  // contain literal sentinel markers such as "<X0>".
  std::string generate_greedy(const std::string& prompt, int max_new) const {
    if (max_new < 1) {
      throw std::invalid_argument("generate_greedy: max_new < 1");
    }
    std::vector<int> ids = vocab_.tokenize_with_sentinels(prompt);
    if (static_cast<int>(ids.size()) > cfg_.max_seq - 1) {
      ids.resize(cfg_.max_seq - 1);
    }
    PackedBatch pb = pack_sequences({ids}, static_cast<int>(ids.size()) + 1,
                                    true);
    TensorPtr<S> enc = encode(pb.ids, 1, pb.seq_len, pb.pad);
    std::vector<int> prefix = {Vocab::kPad};  // decoder start token
    std::vector<int> emitted;
    for (int step = 0; step < max_new; ++step) {
      if (static_cast<int>(prefix.size()) >= cfg_.max_seq) break;
      std::vector<S> logits = decode_step(enc, pb.seq_len, pb.pad, prefix);
      int best = 0;
      for (int j = 1; j < static_cast<int>(logits.size()); ++j) {
        if (logits[j] > logits[best]) best = j;
      }
      if (best == Vocab::kEos) break;
      emitted.push_back(best);
      prefix.push_back(best);
    }
    return vocab_.detokenize(emitted);
  }

 private:
  TensorPtr<S> embed_with_positions(const std::vector<int>& ids, int batch,
                                    int seq_len,
                                    const std::string& pos_name) const {
    TensorPtr<S> x = embedding_lookup(param("tok_emb"), ids);
    std::vector<int> pos(static_cast<std::size_t>(batch) * seq_len);
    for (int b = 0; b < batch; ++b) {
      for (int s = 0; s < seq_len; ++s) {
        pos[static_cast<std::size_t>(b) * seq_len + s] = s;
      }
    }
    return add(x, embedding_lookup(param(pos_name), pos));
  }

  TensorPtr<S> attention_block(const std::string& p, const TensorPtr<S>& q_in,
                               const TensorPtr<S>& kv_in, int batch, int q_len,
                               int k_len,
                               const std::vector<unsigned char>* key_pad,
                               bool causal) const {
    TensorPtr<S> q =
        add_row_broadcast(matmul(q_in, param(p + "Wq")), param(p + "bq"));
    TensorPtr<S> k =
        add_row_broadcast(matmul(kv_in, param(p + "Wk")), param(p + "bk"));
    TensorPtr<S> v =
        add_row_broadcast(matmul(kv_in, param(p + "Wv")), param(p + "bv"));
    TensorPtr<S> a = multi_head_attention(q, k, v, batch, q_len, k_len,
                                          cfg_.num_heads, key_pad, causal);
    return add_row_broadcast(matmul(a, param(p + "Wo")), param(p + "bo"));
  }

  TensorPtr<S> ffn_block(const std::string& p, const TensorPtr<S>& x) const {
    TensorPtr<S> h = relu(
        add_row_broadcast(matmul(x, param(p + "W1")), param(p + "b1")));
    return add_row_broadcast(matmul(h, param(p + "W2")), param(p + "b2"));
  }

  void add_param(const std::string& name, int rows, int cols, Rng& rng,
                 double init_std) {
    TensorPtr<S> t = make_tensor<S>(rows, cols, true);
    if (init_std > 0) {
      for (S& v : t->val) v = static_cast<S>(init_std * rng.normal());
    }
    params_.emplace_back(name, std::move(t));
  }

  void add_ln(const std::string& prefix, Rng& rng) {
    add_param(prefix + ".g", 1, cfg_.model_dim, rng, 0.0);
    TensorPtr<S> g = params_.back().second;
    for (S& v : g->val) v = S(1);
    add_param(prefix + ".b", 1, cfg_.model_dim, rng, 0.0);
  }

  void add_attention(const std::string& p, Rng& rng) {
    int d = cfg_.model_dim;
    add_param(p + "Wq", d, d, rng, 0.02);
    add_param(p + "bq", 1, d, rng, 0.0);
    add_param(p + "Wk", d, d, rng, 0.02);
    add_param(p + "bk", 1, d, rng, 0.0);
    add_param(p + "Wv", d, d, rng, 0.02);
    add_param(p + "bv", 1, d, rng, 0.0);
    add_param(p + "Wo", d, d, rng, 0.02);
    add_param(p + "bo", 1, d, rng, 0.0);
  }

  void add_ffn(const std::string& p, Rng& rng) {
    add_param(p + "W1", cfg_.model_dim, cfg_.ffn_dim, rng, 0.02);
    add_param(p + "b1", 1, cfg_.ffn_dim, rng, 0.0);
    add_param(p + "W2", cfg_.ffn_dim, cfg_.model_dim, rng, 0.02);
    add_param(p + "b2", 1, cfg_.model_dim, rng, 0.0);
  }

  void build_params(Rng& rng) {
    add_param("tok_emb", vocab_.size(), cfg_.model_dim, rng, 0.02);
    add_param("enc_pos", cfg_.max_seq, cfg_.model_dim, rng, 0.02);
    add_param("dec_pos", cfg_.max_seq, cfg_.model_dim, rng, 0.02);
    for (int l = 0; l < cfg_.encoder_layers; ++l) {
      std::string p = "enc" + std::to_string(l) + ".";
      add_ln(p + "ln1", rng);
      add_attention(p, rng);
      add_ln(p + "ln2", rng);
      add_ffn(p, rng);
    }
    add_ln("enc_final", rng);
    for (int l = 0; l < cfg_.decoder_layers; ++l) {
      std::string p = "dec" + std::to_string(l) + ".";
      add_ln(p + "ln1", rng);
      add_attention(p + "self.", rng);
      add_ln(p + "ln2", rng);
      add_attention(p + "cross.", rng);
      add_ln(p + "ln3", rng);
      add_ffn(p, rng);
    }
    add_ln("dec_final", rng);
    add_param("proj.W1", cfg_.model_dim, cfg_.model_dim, rng, 0.02);
    add_param("proj.b1", 1, cfg_.model_dim, rng, 0.0);
    add_param("proj.W2", cfg_.model_dim, cfg_.vector_dim, rng, 0.02);
    add_param("proj.b2", 1, cfg_.vector_dim, rng, 0.0);
  }

  ModelConfig cfg_;
  Vocab vocab_;
  std::vector<std::pair<std::string, TensorPtr<S>>> params_;
};

}  // namespace gur
