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
#include <functional>
#include <stdexcept>
#include <vector>

#include "gur/common.hpp"
#include "gur/tensor.hpp"

using namespace gur;

namespace {

using T = TensorPtr<double>;

T random_tensor(int rows, int cols, Rng& rng, bool requires_grad = true,
                double scale = 1.0) {
  T t = make_tensor<double>(rows, cols, requires_grad);
  for (double& v : t->val) v = scale * rng.normal();
  return t;
}

// Projects a matrix to a scalar through fixed random weights so every
// entry's gradient is distinct: loss = u^T X v.
struct Scalarizer {
  T u;
  T v;

  Scalarizer(int rows, int cols, Rng& rng)
      : u(random_tensor(rows, 1, rng, false)),
        v(random_tensor(cols, 1, rng, false)) {}

  T operator()(const T& x) const { return matmul(matmul(transpose(u), x), v); }
};

// Central-difference check of d(forward)/d(input) for every coordinate of
// every listed input. forward() must be a pure function of the inputs.
double max_grad_error(const std::vector<T>& inputs,
                      const std::function<T()>& forward, double h = 1e-5) {
  std::vector<std::vector<double>> analytic;
  for (const T& t : inputs) {
    t->ensure_grad();
    t->zero_grad();
  }
  {
    TapeScope<double> scope;
    T loss = forward();
    backward(loss);
    for (const T& t : inputs) {
      analytic.emplace_back(t->grad.begin(), t->grad.end());
    }
  }
  double worst = 0.0;
  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    const T& t = inputs[ti];
    for (std::size_t j = 0; j < t->val.size(); ++j) {
      double orig = t->val[j];
      t->val[j] = orig + h;
      double fp = forward()->val[0];
      t->val[j] = orig - h;
      double fm = forward()->val[0];
      t->val[j] = orig;
      double numeric = (fp - fm) / (2.0 * h);
      double ana = analytic[ti][j];
      double denom = std::max({std::abs(numeric), std::abs(ana), 1e-6});
      worst = std::max(worst, std::abs(numeric - ana) / denom);
    }
  }
  return worst;
}

constexpr double kTol = 1e-4;

}  // namespace

TEST_CASE("gradients of elementwise and affine ops") {
  Rng rng(1);
  T a = random_tensor(3, 4, rng);
  T b = random_tensor(3, 4, rng);
  T row = random_tensor(1, 4, rng);
  Scalarizer s(3, 4, rng);

  CHECK(max_grad_error({a, b}, [&] { return s(add(a, b)); }) < kTol);
  CHECK(max_grad_error({a, row}, [&] {
          return s(add_row_broadcast(a, row));
        }) < kTol);
  CHECK(max_grad_error({a}, [&] { return s(scale(a, 1.7)); }) < kTol);
  CHECK(max_grad_error({a}, [&] { return s(tanh_op(a)); }) < kTol);

  // Keep relu inputs away from the kink.
  T c = make_tensor<double>(3, 4, true);
  Rng rng2(2);
  for (double& v : c->val) {
    v = rng2.normal();
    if (std::abs(v) < 0.2) v = v < 0 ? v - 0.2 : v + 0.2;
  }
  CHECK(max_grad_error({c}, [&] { return s(relu(c)); }) < kTol);
}

TEST_CASE("gradients of matrix products and transpose") {
  Rng rng(3);
  T a = random_tensor(3, 4, rng);
  T b = random_tensor(4, 2, rng);
  T c = random_tensor(5, 4, rng);
  Scalarizer s32(3, 2, rng);
  Scalarizer s35(3, 5, rng);
  Scalarizer s43(4, 3, rng);

  CHECK(max_grad_error({a, b}, [&] { return s32(matmul(a, b)); }) < kTol);
  CHECK(max_grad_error({a, c}, [&] { return s35(matmul_nt(a, c)); }) < kTol);
  CHECK(max_grad_error({a}, [&] { return s43(transpose(a)); }) < kTol);
}

TEST_CASE("gradients of row-structured ops") {
  Rng rng(4);
  T x = random_tensor(4, 6, rng);
  T gain = random_tensor(1, 6, rng, true, 0.5);
  for (double& v : gain->val) v += 1.0;
  T bias = random_tensor(1, 6, rng, true, 0.3);
  Scalarizer s(4, 6, rng);

  CHECK(max_grad_error({x}, [&] { return s(softmax_rows(x)); }) < kTol);
  CHECK(max_grad_error({x, gain, bias}, [&] {
          return s(layer_norm_rows(x, gain, bias, 1e-5));
        }) < kTol);
  CHECK(max_grad_error({x}, [&] { return s(normalize_rows(x)); }) < kTol);
}

TEST_CASE("gradients of lookup and gather accumulate over repeats") {
  Rng rng(5);
  T table = random_tensor(6, 4, rng);
  std::vector<int> ids = {0, 2, 1, 2, 5};
  Scalarizer s(5, 4, rng);
  CHECK(max_grad_error({table}, [&] {
          return s(embedding_lookup(table, ids));
        }) < kTol);

  T x = random_tensor(5, 3, rng);
  std::vector<int> rows = {4, 0, 4};
  Scalarizer s2(3, 3, rng);
  CHECK(max_grad_error({x}, [&] { return s2(row_gather(x, rows)); }) < kTol);
}

TEST_CASE("gradients of multi-head attention") {
  Rng rng(6);
  const int batch = 2, q_len = 3, k_len = 3, heads = 2, d = 4;
  T q = random_tensor(batch * q_len, d, rng, true, 0.5);
  T k = random_tensor(batch * k_len, d, rng, true, 0.5);
  T v = random_tensor(batch * k_len, d, rng, true, 0.5);
  Scalarizer s(batch * q_len, d, rng);

  CHECK(max_grad_error({q, k, v}, [&] {
          return s(multi_head_attention(q, k, v, batch, q_len, k_len, heads,
                                        nullptr, false));
        }) < kTol);
  CHECK(max_grad_error({q, k, v}, [&] {
          return s(multi_head_attention(q, k, v, batch, q_len, k_len, heads,
                                        nullptr, true));
        }) < kTol);

  std::vector<unsigned char> pad(batch * k_len, 0);
  pad[2] = 1;  // mask the last key of the first batch element
  CHECK(max_grad_error({q, k, v}, [&] {
          return s(multi_head_attention(q, k, v, batch, q_len, k_len, heads,
                                        &pad, false));
        }) < kTol);
}

TEST_CASE("gradients of cross entropy with ignored targets") {
  Rng rng(7);
  T logits = random_tensor(5, 7, rng);
  std::vector<int> targets = {3, -1, 0, 6, -1};
  CHECK(max_grad_error({logits}, [&] {
          return cross_entropy_rows(logits, targets, -1);
        }) < kTol);
}

TEST_CASE("gradients of a composed network") {
  Rng rng(8);
  T x = random_tensor(4, 6, rng, true, 0.5);
  T w1 = random_tensor(6, 8, rng, true, 0.5);
  T b1 = random_tensor(1, 8, rng, true, 0.2);
  T w2 = random_tensor(8, 5, rng, true, 0.5);
  T gain = make_tensor<double>(1, 8, true);
  for (double& g : gain->val) g = 1.0;
  T bias = make_tensor<double>(1, 8, true);
  std::vector<int> targets = {1, 4, 0, 2};
  auto forward = [&] {
    T h = tanh_op(add_row_broadcast(matmul(x, w1), b1));
    T n = layer_norm_rows(h, gain, bias, 1e-5);
    T logits = matmul(n, w2);
    return cross_entropy_rows(logits, targets, -1);
  };
  CHECK(max_grad_error({x, w1, b1, w2, gain, bias}, forward) < kTol);
}

TEST_CASE("gradients accumulate when a tensor is reused") {
  Rng rng(9);
  T a = random_tensor(3, 4, rng);
  Scalarizer s(3, 4, rng);
  std::vector<double> grad_once, grad_twice;
  {
    TapeScope<double> scope;
    backward(s(a));
    a->ensure_grad();
    grad_once.assign(a->grad.begin(), a->grad.end());
  }
  a->zero_grad();
  {
    TapeScope<double> scope;
    backward(s(add(a, a)));
    grad_twice.assign(a->grad.begin(), a->grad.end());
  }
  REQUIRE(grad_once.size() == grad_twice.size());
  for (std::size_t i = 0; i < grad_once.size(); ++i) {
    CHECK(grad_twice[i] == doctest::Approx(2.0 * grad_once[i]).epsilon(1e-12));
  }
}

TEST_CASE("softmax of constant rows is uniform and rows sum to one") {
  T x = make_tensor<double>(2, 5);
  for (double& v : x->val) v = 3.25;
  T p = softmax_rows(x);
  for (double v : p->val) CHECK(v == doctest::Approx(0.2).epsilon(1e-12));

  Rng rng(10);
  T y = random_tensor(4, 7, rng);
  T q = softmax_rows(y);
  for (int r = 0; r < 4; ++r) {
    double sum = 0.0;
    for (int c = 0; c < 7; ++c) sum += q->val[r * 7 + c];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("layer norm standardizes each row") {
  Rng rng(11);
  T x = random_tensor(5, 16, rng, false, 2.0);
  T gain = make_tensor<double>(1, 16);
  for (double& g : gain->val) g = 1.0;
  T bias = make_tensor<double>(1, 16);
  T out = layer_norm_rows(x, gain, bias, 1e-10);
  for (int r = 0; r < 5; ++r) {
    double mean = 0.0, var = 0.0;
    for (int c = 0; c < 16; ++c) mean += out->val[r * 16 + c];
    mean /= 16.0;
    for (int c = 0; c < 16; ++c) {
      double d = out->val[r * 16 + c] - mean;
      var += d * d;
    }
    var /= 16.0;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("causal attention ignores future positions") {
  Rng rng(12);
  const int batch = 1, len = 4, heads = 2, d = 4;
  T q = random_tensor(len, d, rng, false, 0.5);
  T k = random_tensor(len, d, rng, false, 0.5);
  T v = random_tensor(len, d, rng, false, 0.5);
  T out1 =
      multi_head_attention(q, k, v, batch, len, len, heads, nullptr, true);

  // Perturbing the last key/value must not change earlier output rows.
  for (int c = 0; c < d; ++c) {
    k->val[3 * d + c] += 10.0;
    v->val[3 * d + c] -= 7.0;
  }
  T out2 =
      multi_head_attention(q, k, v, batch, len, len, heads, nullptr, true);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < d; ++c) {
      CHECK(out1->val[r * d + c] == out2->val[r * d + c]);
    }
  }
}

TEST_CASE("padded keys receive no attention") {
  Rng rng(13);
  const int batch = 1, len = 4, heads = 2, d = 4;
  T q = random_tensor(len, d, rng, false, 0.5);
  T k = random_tensor(len, d, rng, false, 0.5);
  T v = random_tensor(len, d, rng, false, 0.5);
  std::vector<unsigned char> pad = {0, 0, 0, 1};
  T out1 = multi_head_attention(q, k, v, batch, len, len, heads, &pad, false);
  for (int c = 0; c < d; ++c) {
    k->val[3 * d + c] += 5.0;
    v->val[3 * d + c] += 5.0;
  }
  T out2 = multi_head_attention(q, k, v, batch, len, len, heads, &pad, false);
  CHECK(out1->val == out2->val);
}

TEST_CASE("shape and usage errors") {
  T a = make_tensor<double>(2, 3);
  T b = make_tensor<double>(3, 2);
  CHECK_THROWS_AS(add(a, b), std::invalid_argument);
  CHECK_THROWS_AS(matmul(a, a), std::invalid_argument);
  CHECK_THROWS_AS(matmul_nt(a, b), std::invalid_argument);
  CHECK_THROWS_AS(add_row_broadcast(a, b), std::invalid_argument);

  T q = make_tensor<double>(4, 4);
  CHECK_THROWS_AS(
      multi_head_attention(q, q, q, 1, 4, 4, 3, nullptr, false),
      std::invalid_argument);
  CHECK_THROWS_AS(
      multi_head_attention(q, q, q, 1, 2, 4, 2, nullptr, true),
      std::invalid_argument);

  std::vector<int> bad_targets = {0, 1, 2};  // three targets, two rows
  CHECK_THROWS_AS(cross_entropy_rows(a, bad_targets, -1),
                  std::invalid_argument);
  std::vector<int> all_ignored = {-1, -1};
  T logits = make_tensor<double>(2, 3);
  CHECK_THROWS_AS(cross_entropy_rows(logits, all_ignored, -1),
                  std::invalid_argument);
  std::vector<int> oob = {0, 9};
  CHECK_THROWS_AS(cross_entropy_rows(logits, oob, -1), std::invalid_argument);

  CHECK_THROWS_AS(embedding_lookup(a, std::vector<int>{5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(row_gather(a, std::vector<int>{2}), std::invalid_argument);
  CHECK_THROWS_AS(layer_norm_rows(a, b, b, 1e-5), std::invalid_argument);
}

TEST_CASE("backward requires an active tape and a scalar loss") {
  T a = make_tensor<double>(1, 1, true);
  CHECK_THROWS_AS(backward(a), std::logic_error);

  TapeScope<double> scope;
  T m = make_tensor<double>(2, 2, true);
  CHECK_THROWS_AS(backward(m), std::invalid_argument);
}

TEST_CASE("grad_global_norm sums squared gradients") {
  T a = make_tensor<double>(1, 2, true);
  a->ensure_grad();
  a->grad[0] = 3.0;
  a->grad[1] = 4.0;
  CHECK(grad_global_norm<double>({a}) == doctest::Approx(5.0).epsilon(1e-12));

  T b = make_tensor<double>(1, 1, true);
  b->ensure_grad();
  b->grad[0] = 12.0;
  CHECK(grad_global_norm<double>({a, b}) ==
        doctest::Approx(13.0).epsilon(1e-12));
}

TEST_CASE("forward runs without a tape do not record") {
  Rng rng(14);
  T a = random_tensor(2, 2, rng);
  T out = add(a, a);  // no scope installed
  CHECK(out->requires_grad);
  CHECK(current_tape<double>() == nullptr);
}
