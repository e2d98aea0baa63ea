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
#include <stdexcept>
#include <vector>

#include "gur/masker.hpp"
#include "gur/model.hpp"
#include "gur/tensor.hpp"
#include "gur/vocab.hpp"

namespace gur {

struct LossWeights {
  double alpha = 1.0;
  double temperature = 0.1;
};

// One denoising batch in packed form. Targets are padded with [PAD], which
// the loss ignores; decoder inputs are the targets shifted right behind a
// [PAD] start token.
struct LmBatch {
  std::vector<int> enc_ids;
  std::vector<unsigned char> enc_pad;
  int batch = 0;
  int enc_len = 0;
  std::vector<int> dec_input;
  std::vector<int> targets;
  int dec_len = 0;
};

inline LmBatch make_lm_batch(const std::vector<CorruptedExample>& examples,
                             int enc_seq_len) {
  if (examples.empty()) {
    throw std::invalid_argument("make_lm_batch: empty batch");
  }
  LmBatch b;
  b.batch = static_cast<int>(examples.size());
  b.enc_len = enc_seq_len;
  std::vector<std::vector<int>> enc_seqs;
  enc_seqs.reserve(examples.size());
  int dec_len = 1;
  for (const CorruptedExample& ex : examples) {
    enc_seqs.push_back(ex.encoder_input);
    dec_len = std::max(dec_len, static_cast<int>(ex.decoder_target.size()));
  }
  PackedBatch pb = pack_sequences(enc_seqs, enc_seq_len, true);
  b.enc_ids = std::move(pb.ids);
  b.enc_pad = std::move(pb.pad);
  b.dec_len = dec_len;
  b.dec_input.assign(static_cast<std::size_t>(b.batch) * dec_len, Vocab::kPad);
  b.targets.assign(static_cast<std::size_t>(b.batch) * dec_len, Vocab::kPad);
  for (int i = 0; i < b.batch; ++i) {
    const std::vector<int>& t = examples[i].decoder_target;
    for (std::size_t j = 0; j < t.size(); ++j) {
      b.targets[static_cast<std::size_t>(i) * dec_len + j] = t[j];
      if (j + 1 < t.size()) {
        b.dec_input[static_cast<std::size_t>(i) * dec_len + j + 1] = t[j];
      }
    }
  }
  return b;
}

// Mean token cross-entropy of the decoder over the denoising targets.
template <typename S>
TensorPtr<S> lm_loss(const GurModel<S>& model, const LmBatch& b) {
  if (b.batch == 0 || b.dec_len == 0) {
    throw std::invalid_argument("lm_loss: empty targets");
  }
  TensorPtr<S> enc = model.encode(b.enc_ids, b.batch, b.enc_len, b.enc_pad);
  TensorPtr<S> logits =
      model.decode(enc, b.batch, b.enc_len, b.enc_pad, b.dec_input, b.dec_len);
  return cross_entropy_rows(logits, b.targets, Vocab::kPad);
}

// Symmetric InfoNCE over in-batch negatives. a and b are unit-norm
// embedding batches [N, dim] with matching rows as positives; similarity
// is the dot product, scaled by 1/tau, and the loss averages the row-wise
// and column-wise cross-entropies against the diagonal.
template <typename S>
TensorPtr<S> cl_loss(const TensorPtr<S>& a, const TensorPtr<S>& b,
                     double tau) {
  if (a->rows < 2) {
    throw std::invalid_argument("cl_loss: batch must have at least 2 rows");
  }
  if (a->rows != b->rows || a->cols != b->cols) {
    throw std::invalid_argument("cl_loss: embedding shape mismatch");
  }
  if (!(tau > 0)) throw std::invalid_argument("cl_loss: tau must be positive");
  TensorPtr<S> sim = scale(matmul_nt(a, b), static_cast<S>(1.0 / tau));
  std::vector<int> diag(a->rows);
  for (int i = 0; i < a->rows; ++i) diag[i] = i;
  TensorPtr<S> row_ce = cross_entropy_rows(sim, diag, -1);
  TensorPtr<S> col_ce = cross_entropy_rows(transpose(sim), diag, -1);
  return scale(add(row_ce, col_ce), S(0.5));
}

// Eq-style combination: lm + alpha * cl.
template <typename S>
TensorPtr<S> total_loss(const TensorPtr<S>& lm, const TensorPtr<S>& cl,
                        const LossWeights& w) {
  if (!std::isfinite(static_cast<double>(lm->val[0]))) {
    throw std::runtime_error("total_loss: non-finite lm term");
  }
  if (!std::isfinite(static_cast<double>(cl->val[0]))) {
    throw std::runtime_error("total_loss: non-finite cl term");
  }
  if (w.alpha < 0) throw std::invalid_argument("total_loss: alpha < 0");
  return add(lm, scale(cl, static_cast<S>(w.alpha)));
}

}  // namespace gur
