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

// Reverse-mode autodiff over dense row-major matrices, templated on the
// scalar type: float for training, double for finite-difference checks.
// Ops run eagerly and append backward closures to a thread-local tape;
// backward() replays the tape in reverse. There is no broadcasting beyond
// the explicit row-broadcast op and no implicit reordering anywhere, so
// a fixed graph yields bit-identical gradients run to run.

#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gur {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Tensor payloads use Eigen-aligned storage. Vectorized reductions peel to
// the first aligned element, so an unaligned base would make low-order bits
// depend on where malloc happened to place the buffer; pinning the base
// keeps every value a function of shapes and inputs alone.
template <typename S>
using AlignedVec = std::vector<S, Eigen::aligned_allocator<S>>;

template <typename S>
struct TensorImpl {
  int rows = 0;
  int cols = 0;
  AlignedVec<S> val;
  AlignedVec<S> grad;  // allocated on first use
  bool requires_grad = false;

  Eigen::Map<Mat<S>> map() { return {val.data(), rows, cols}; }
  Eigen::Map<const Mat<S>> cmap() const { return {val.data(), rows, cols}; }

  void ensure_grad() {
    if (grad.empty()) grad.assign(val.size(), S(0));
  }
  Eigen::Map<Mat<S>> gmap() {
    ensure_grad();
    return {grad.data(), rows, cols};
  }
  bool has_grad() const { return !grad.empty(); }
  void zero_grad() {
    for (S& g : grad) g = S(0);
  }
};

template <typename S>
using TensorPtr = std::shared_ptr<TensorImpl<S>>;

template <typename S>
TensorPtr<S> make_tensor(int rows, int cols, bool requires_grad = false) {
  auto t = std::make_shared<TensorImpl<S>>();
  t->rows = rows;
  t->cols = cols;
  t->val.assign(static_cast<std::size_t>(rows) * cols, S(0));
  t->requires_grad = requires_grad;
  return t;
}

template <typename S>
class Tape {
 public:
  void record(std::function<void()> op) { ops_.push_back(std::move(op)); }

  // Replays closures newest-first, then drops them (and the intermediate
  // tensors they keep alive).
  void run_backward() {
    for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
    ops_.clear();
  }

  std::size_t size() const { return ops_.size(); }

 private:
  std::vector<std::function<void()>> ops_;
};

template <typename S>
inline Tape<S>*& current_tape() {
  thread_local Tape<S>* tape = nullptr;
  return tape;
}

// RAII: ops record onto this tape while the scope is alive.
template <typename S>
class TapeScope {
 public:
  TapeScope() : prev_(current_tape<S>()) { current_tape<S>() = &tape_; }
  ~TapeScope() { current_tape<S>() = prev_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

  Tape<S>& tape() { return tape_; }

 private:
  Tape<S> tape_;
  Tape<S>* prev_;
};

template <typename S>
void backward(const TensorPtr<S>& loss) {
  Tape<S>* tape = current_tape<S>();
  if (!tape) throw std::logic_error("backward: no active tape");
  if (loss->rows != 1 || loss->cols != 1) {
    throw std::invalid_argument("backward: loss is not a scalar");
  }
  loss->ensure_grad();
  loss->grad[0] = S(1);
  tape->run_backward();
}

namespace detail {

inline std::string shape_str(int r, int c) {
  std::ostringstream os;
  os << "[" << r << "," << c << "]";
  return os.str();
}

template <typename S>
void check_finite(const TensorPtr<S>& t, const char* op) {
#ifndef NDEBUG
  for (S v : t->val) {
    if (!std::isfinite(static_cast<double>(v))) {
      throw std::runtime_error(std::string(op) +
                               ": non-finite value in forward output");
    }
  }
#else
  (void)t;
  (void)op;
#endif
}

template <typename S>
void record_if_tracing(const TensorPtr<S>& out, std::function<void()> op) {
  if (out->requires_grad && current_tape<S>() != nullptr) {
    current_tape<S>()->record(std::move(op));
  }
}

// Stable row softmax: returns P given scores.
template <typename S>
Mat<S> softmax_mat(const Mat<S>& scores) {
  Vec<S> mx = scores.rowwise().maxCoeff();
  Mat<S> p = (scores.colwise() - mx).array().exp().matrix();
  Vec<S> z = p.rowwise().sum();
  p.array() = p.array().colwise() / z.array();
  return p;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and affine ops

template <typename S>
TensorPtr<S> add(const TensorPtr<S>& a, const TensorPtr<S>& b) {
  if (a->rows != b->rows || a->cols != b->cols) {
    throw std::invalid_argument("add: shape mismatch " +
                                detail::shape_str(a->rows, a->cols) + " vs " +
                                detail::shape_str(b->rows, b->cols));
  }
  auto out = make_tensor<S>(a->rows, a->cols);
  out->map() = a->cmap() + b->cmap();
  out->requires_grad = a->requires_grad || b->requires_grad;
  detail::check_finite(out, "add");
  detail::record_if_tracing<S>(out, [a, b, out] {
    if (!out->has_grad()) return;
    if (a->requires_grad) a->gmap() += out->gmap();
    if (b->requires_grad) b->gmap() += out->gmap();
  });
  return out;
}

// a[m,n] + row[1,n] replicated down the rows.
template <typename S>
TensorPtr<S> add_row_broadcast(const TensorPtr<S>& a, const TensorPtr<S>& row) {
  if (row->rows != 1 || a->cols != row->cols) {
    throw std::invalid_argument("add_row_broadcast: shape mismatch " +
                                detail::shape_str(a->rows, a->cols) + " vs " +
                                detail::shape_str(row->rows, row->cols));
  }
  auto out = make_tensor<S>(a->rows, a->cols);
  out->map() = a->cmap().rowwise() + row->cmap().row(0);
  out->requires_grad = a->requires_grad || row->requires_grad;
  detail::check_finite(out, "add_row_broadcast");
  detail::record_if_tracing<S>(out, [a, row, out] {
    if (!out->has_grad()) return;
    if (a->requires_grad) a->gmap() += out->gmap();
    if (row->requires_grad) row->gmap().row(0) += out->gmap().colwise().sum();
  });
  return out;
}

template <typename S>
TensorPtr<S> scale(const TensorPtr<S>& a, S factor) {
  auto out = make_tensor<S>(a->rows, a->cols);
  out->map() = a->cmap() * factor;
  out->requires_grad = a->requires_grad;
  detail::check_finite(out, "scale");
  detail::record_if_tracing<S>(out, [a, out, factor] {
    if (!out->has_grad()) return;
    if (a->requires_grad) a->gmap() += out->gmap() * factor;
  });
  return out;
}

template <typename S>
TensorPtr<S> relu(const TensorPtr<S>& a) {
  auto out = make_tensor<S>(a->rows, a->cols);
  out->map() = a->cmap().cwiseMax(S(0));
  out->requires_grad = a->requires_grad;
  detail::check_finite(out, "relu");
  detail::record_if_tracing<S>(out, [a, out] {
    if (!out->has_grad() || !a->requires_grad) return;
    auto g = out->gmap();
    auto x = a->cmap();
    auto dx = a->gmap();
    for (int i = 0; i < a->rows; ++i) {
      for (int j = 0; j < a->cols; ++j) {
        if (x(i, j) > S(0)) dx(i, j) += g(i, j);
      }
    }
  });
  return out;
}

template <typename S>
TensorPtr<S> tanh_op(const TensorPtr<S>& a) {
  auto out = make_tensor<S>(a->rows, a->cols);
  out->map() = a->cmap().array().tanh();
  out->requires_grad = a->requires_grad;
  detail::check_finite(out, "tanh");
  detail::record_if_tracing<S>(out, [a, out] {
    if (!out->has_grad() || !a->requires_grad) return;
    a->gmap().array() +=
        out->gmap().array() * (S(1) - out->cmap().array().square());
  });
  return out;
}

// ---------------------------------------------------------------------------
// Matrix products

template <typename S>
TensorPtr<S> matmul(const TensorPtr<S>& a, const TensorPtr<S>& b) {
  if (a->cols != b->rows) {
    throw std::invalid_argument("matmul: shape mismatch " +
                                detail::shape_str(a->rows, a->cols) + " x " +
                                detail::shape_str(b->rows, b->cols));
  }
  auto out = make_tensor<S>(a->rows, b->cols);
  {
    // Row-axpy product instead of the packed GEMM kernel: every output row
    // accumulates in the same order, so equal input rows give bit-equal
    // output rows no matter where they sit in the batch. The packed kernel
    // folds leftover row panels differently and breaks that property.
    auto am = a->cmap();
    auto bm = b->cmap();
    auto om = out->map();
    for (int i = 0; i < a->rows; ++i) {
      auto orow = om.row(i);
      for (int k = 0; k < a->cols; ++k) orow += am(i, k) * bm.row(k);
    }
  }
  out->requires_grad = a->requires_grad || b->requires_grad;
  detail::check_finite(out, "matmul");
  detail::record_if_tracing<S>(out, [a, b, out] {
    if (!out->has_grad()) return;
    if (a->requires_grad) {
      a->gmap().noalias() += out->gmap() * b->cmap().transpose();
    }
    if (b->requires_grad) {
      b->gmap().noalias() += a->cmap().transpose() * out->gmap();
    }
  });
  return out;
}

// a[m,k] * b[n,k]^T -> [m,n]; used for tied output projections and
// similarity matrices.
template <typename S>
TensorPtr<S> matmul_nt(const TensorPtr<S>& a, const TensorPtr<S>& b) {
  if (a->cols != b->cols) {
    throw std::invalid_argument("matmul_nt: shape mismatch " +
                                detail::shape_str(a->rows, a->cols) + " x " +
                                detail::shape_str(b->rows, b->cols) + "^T");
  }
  auto out = make_tensor<S>(a->rows, b->rows);
  out->map().noalias() = a->cmap() * b->cmap().transpose();
  out->requires_grad = a->requires_grad || b->requires_grad;
  detail::check_finite(out, "matmul_nt");
  detail::record_if_tracing<S>(out, [a, b, out] {
    if (!out->has_grad()) return;
    if (a->requires_grad) a->gmap().noalias() += out->gmap() * b->cmap();
    if (b->requires_grad) {
      b->gmap().noalias() += out->gmap().transpose() * a->cmap();
    }
  });
  return out;
}

template <typename S>
TensorPtr<S> transpose(const TensorPtr<S>& a) {
  auto out = make_tensor<S>(a->cols, a->rows);
  out->map() = a->cmap().transpose();
  out->requires_grad = a->requires_grad;
  detail::record_if_tracing<S>(out, [a, out] {
    if (!out->has_grad() || !a->requires_grad) return;
    a->gmap() += out->gmap().transpose();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Row-structured ops

template <typename S>
TensorPtr<S> softmax_rows(const TensorPtr<S>& a) {
  auto out = make_tensor<S>(a->rows, a->cols);
  out->map() = detail::softmax_mat<S>(a->cmap());
  out->requires_grad = a->requires_grad;
  detail::check_finite(out, "softmax_rows");
  detail::record_if_tracing<S>(out, [a, out] {
    if (!out->has_grad() || !a->requires_grad) return;
    auto p = out->cmap();
    auto g = out->gmap();
    Vec<S> dot = (g.cwiseProduct(p)).rowwise().sum();
    a->gmap().array() +=
        p.array() * (g.array().colwise() - dot.array());
  });
  return out;
}

template <typename S>
TensorPtr<S> layer_norm_rows(const TensorPtr<S>& x, const TensorPtr<S>& gain,
                             const TensorPtr<S>& bias, S eps) {
  if (gain->rows != 1 || bias->rows != 1 || gain->cols != x->cols ||
      bias->cols != x->cols) {
    throw std::invalid_argument("layer_norm_rows: parameter shape mismatch");
  }
  if (!(eps > S(0))) {
    throw std::invalid_argument("layer_norm_rows: eps must be positive");
  }
  auto out = make_tensor<S>(x->rows, x->cols);
  auto xhat = std::make_shared<Mat<S>>(x->rows, x->cols);
  auto inv_sigma = std::make_shared<Vec<S>>(x->rows);
  {
    auto xm = x->cmap();
    Vec<S> mu = xm.rowwise().mean();
    Mat<S> centered = xm.colwise() - mu;
    Vec<S> var = centered.array().square().rowwise().mean();
    // sqrt then divide: both correctly rounded, so packet and scalar lanes
    // agree bitwise, unlike the approximate rsqrt kernel.
    inv_sigma->array() = (var.array() + eps).sqrt().inverse();
    xhat->array() = centered.array().colwise() * inv_sigma->array();
    out->map().array() =
        (xhat->array().rowwise() * gain->cmap().row(0).array()).rowwise() +
        bias->cmap().row(0).array();
  }
  out->requires_grad =
      x->requires_grad || gain->requires_grad || bias->requires_grad;
  detail::check_finite(out, "layer_norm_rows");
  detail::record_if_tracing<S>(out, [x, gain, bias, out, xhat, inv_sigma] {
    if (!out->has_grad()) return;
    auto g = out->gmap();
    if (bias->requires_grad) bias->gmap().row(0) += g.colwise().sum();
    if (gain->requires_grad) {
      gain->gmap().row(0) += (g.cwiseProduct(*xhat)).colwise().sum();
    }
    if (x->requires_grad) {
      int n = x->cols;
      Mat<S> dxhat = g.array().rowwise() * gain->cmap().row(0).array();
      Vec<S> m1 = dxhat.rowwise().sum() / S(n);
      Vec<S> m2 = (dxhat.cwiseProduct(*xhat)).rowwise().sum() / S(n);
      x->gmap().array() +=
          ((dxhat.array().colwise() - m1.array()) -
           xhat->array().colwise() * m2.array())
              .colwise() *
          inv_sigma->array();
    }
  });
  return out;
}

// Rows rescaled to unit L2 norm.
template <typename S>
TensorPtr<S> normalize_rows(const TensorPtr<S>& x) {
  auto out = make_tensor<S>(x->rows, x->cols);
  auto inv_norm = std::make_shared<Vec<S>>(x->rows);
  {
    Vec<S> n = x->cmap().rowwise().norm();
    for (int i = 0; i < x->rows; ++i) {
      (*inv_norm)(i) = S(1) / std::max(n(i), S(1e-12));
    }
    out->map().array() = x->cmap().array().colwise() * inv_norm->array();
  }
  out->requires_grad = x->requires_grad;
  detail::check_finite(out, "normalize_rows");
  detail::record_if_tracing<S>(out, [x, out, inv_norm] {
    if (!out->has_grad() || !x->requires_grad) return;
    auto y = out->cmap();
    auto g = out->gmap();
    Vec<S> dot = (g.cwiseProduct(y)).rowwise().sum();
    x->gmap().array() +=
        ((g.array() - y.array().colwise() * dot.array()).colwise() *
         inv_norm->array());
  });
  return out;
}

// ---------------------------------------------------------------------------
// Lookup / gather

template <typename S>
TensorPtr<S> embedding_lookup(const TensorPtr<S>& table,
                              const std::vector<int>& ids) {
  for (int id : ids) {
    if (id < 0 || id >= table->rows) {
      throw std::invalid_argument("embedding_lookup: id out of range");
    }
  }
  auto out = make_tensor<S>(static_cast<int>(ids.size()), table->cols);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out->map().row(static_cast<int>(i)) = table->cmap().row(ids[i]);
  }
  out->requires_grad = table->requires_grad;
  detail::record_if_tracing<S>(out, [table, out, ids] {
    if (!out->has_grad() || !table->requires_grad) return;
    auto g = out->gmap();
    auto tg = table->gmap();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      tg.row(ids[i]) += g.row(static_cast<int>(i));
    }
  });
  return out;
}

template <typename S>
TensorPtr<S> row_gather(const TensorPtr<S>& x, const std::vector<int>& rows) {
  for (int r : rows) {
    if (r < 0 || r >= x->rows) {
      throw std::invalid_argument("row_gather: row index out of range");
    }
  }
  auto out = make_tensor<S>(static_cast<int>(rows.size()), x->cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out->map().row(static_cast<int>(i)) = x->cmap().row(rows[i]);
  }
  out->requires_grad = x->requires_grad;
  detail::record_if_tracing<S>(out, [x, out, rows] {
    if (!out->has_grad() || !x->requires_grad) return;
    auto g = out->gmap();
    auto xg = x->gmap();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      xg.row(rows[i]) += g.row(static_cast<int>(i));
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Attention

// Fused multi-head scaled-dot-product attention over packed batches.
// q is [batch*q_len, d]; k and v are [batch*k_len, d]. key_pad, when given,
// marks key positions (batch*k_len entries, nonzero = masked). causal
// restricts each query to keys at or before its own position.
template <typename S>
TensorPtr<S> multi_head_attention(const TensorPtr<S>& q, const TensorPtr<S>& k,
                                  const TensorPtr<S>& v, int batch, int q_len,
                                  int k_len, int heads,
                                  const std::vector<unsigned char>* key_pad,
                                  bool causal) {
  int d = q->cols;
  if (q->rows != batch * q_len || k->rows != batch * k_len ||
      v->rows != batch * k_len || k->cols != d || v->cols != d) {
    throw std::invalid_argument("multi_head_attention: shape mismatch");
  }
  if (heads < 1 || d % heads != 0) {
    throw std::invalid_argument(
        "multi_head_attention: dim not divisible by heads");
  }
  if (key_pad && key_pad->size() != static_cast<std::size_t>(batch * k_len)) {
    throw std::invalid_argument("multi_head_attention: bad key_pad size");
  }
  if (causal && q_len != k_len) {
    throw std::invalid_argument(
        "multi_head_attention: causal needs q_len == k_len");
  }
  int dh = d / heads;
  S inv_sqrt = S(1) / std::sqrt(static_cast<S>(dh));
  auto out = make_tensor<S>(batch * q_len, d);
  auto probs = std::make_shared<std::vector<Mat<S>>>();
  probs->reserve(static_cast<std::size_t>(batch) * heads);
  const S kNegInf = S(-1e9);
  {
    auto qm = q->cmap();
    auto km = k->cmap();
    auto vm = v->cmap();
    auto om = out->map();
    for (int b = 0; b < batch; ++b) {
      for (int h = 0; h < heads; ++h) {
        Mat<S> scores = (qm.block(b * q_len, h * dh, q_len, dh) *
                         km.block(b * k_len, h * dh, k_len, dh).transpose()) *
                        inv_sqrt;
        if (key_pad) {
          for (int j = 0; j < k_len; ++j) {
            if ((*key_pad)[b * k_len + j]) scores.col(j).setConstant(kNegInf);
          }
        }
        if (causal) {
          for (int i = 0; i < q_len; ++i) {
            for (int j = i + 1; j < k_len; ++j) scores(i, j) = kNegInf;
          }
        }
        Mat<S> p = detail::softmax_mat<S>(scores);
        om.block(b * q_len, h * dh, q_len, dh).noalias() =
            p * vm.block(b * k_len, h * dh, k_len, dh);
        probs->push_back(std::move(p));
      }
    }
  }
  out->requires_grad =
      q->requires_grad || k->requires_grad || v->requires_grad;
  detail::check_finite(out, "multi_head_attention");
  detail::record_if_tracing<S>(
      out, [q, k, v, out, probs, batch, q_len, k_len, heads, dh, inv_sqrt] {
        if (!out->has_grad()) return;
        auto og = out->gmap();
        auto qm = q->cmap();
        auto km = k->cmap();
        auto vm = v->cmap();
        for (int b = 0; b < batch; ++b) {
          for (int h = 0; h < heads; ++h) {
            const Mat<S>& p = (*probs)[static_cast<std::size_t>(b) * heads + h];
            Mat<S> dout = og.block(b * q_len, h * dh, q_len, dh);
            if (v->requires_grad) {
              auto vg = v->gmap();
              vg.block(b * k_len, h * dh, k_len, dh).noalias() +=
                  p.transpose() * dout;
            }
            if (q->requires_grad || k->requires_grad) {
              Mat<S> dp =
                  dout * vm.block(b * k_len, h * dh, k_len, dh).transpose();
              Vec<S> dot = (dp.cwiseProduct(p)).rowwise().sum();
              Mat<S> ds = (p.array() * (dp.array().colwise() - dot.array()) *
                           inv_sqrt)
                              .matrix();
              if (q->requires_grad) {
                auto qg = q->gmap();
                qg.block(b * q_len, h * dh, q_len, dh).noalias() +=
                    ds * km.block(b * k_len, h * dh, k_len, dh);
              }
              if (k->requires_grad) {
                auto kg = k->gmap();
                kg.block(b * k_len, h * dh, k_len, dh).noalias() +=
                    ds.transpose() * qm.block(b * q_len, h * dh, q_len, dh);
              }
            }
          }
        }
      });
  return out;
}

// ---------------------------------------------------------------------------
// Loss

// Mean negative log-likelihood over rows whose target is not ignore_id.
template <typename S>
TensorPtr<S> cross_entropy_rows(const TensorPtr<S>& logits,
                                const std::vector<int>& targets,
                                int ignore_id) {
  if (static_cast<int>(targets.size()) != logits->rows) {
    throw std::invalid_argument("cross_entropy_rows: target count " +
                                std::to_string(targets.size()) +
                                " does not match rows " +
                                std::to_string(logits->rows));
  }
  int counted = 0;
  for (int t : targets) {
    if (t == ignore_id) continue;
    if (t < 0 || t >= logits->cols) {
      throw std::invalid_argument("cross_entropy_rows: target out of range");
    }
    ++counted;
  }
  if (counted == 0) {
    throw std::invalid_argument("cross_entropy_rows: all targets ignored");
  }
  auto probs = std::make_shared<Mat<S>>(detail::softmax_mat<S>(logits->cmap()));
  S loss = S(0);
  for (int r = 0; r < logits->rows; ++r) {
    if (targets[r] == ignore_id) continue;
    S pr = std::max((*probs)(r, targets[r]), S(1e-30));
    loss -= std::log(pr);
  }
  loss /= static_cast<S>(counted);
  auto out = make_tensor<S>(1, 1);
  out->val[0] = loss;
  out->requires_grad = logits->requires_grad;
  detail::check_finite(out, "cross_entropy_rows");
  detail::record_if_tracing<S>(out, [logits, out, probs, targets, ignore_id,
                                     counted] {
    if (!out->has_grad() || !logits->requires_grad) return;
    S g = out->grad[0] / static_cast<S>(counted);
    auto lg = logits->gmap();
    for (int r = 0; r < logits->rows; ++r) {
      if (targets[r] == ignore_id) continue;
      lg.row(r) += probs->row(r) * g;
      lg(r, targets[r]) -= g;
    }
  });
  return out;
}

// Global L2 norm over a set of gradient buffers.
template <typename S>
double grad_global_norm(const std::vector<TensorPtr<S>>& params) {
  double sq = 0.0;
  for (const TensorPtr<S>& p : params) {
    for (S g : p->grad) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(sq);
}

}  // namespace gur
