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

#include "gur/masker.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gur {

double SpanDist::mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    m += (lower + static_cast<int>(i)) * pmf[i];
  }
  return m;
}

int SpanDist::sample(Rng& rng) const {
  double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    acc += pmf[i];
    if (u < acc) return lower + static_cast<int>(i);
  }
  return upper();
}

SpanDist hump_geometric_pmf(const HumpGeometricParams& params) {
  if (!(params.p > 0.0 && params.p < 1.0)) {
    throw std::invalid_argument("hump_geometric_pmf: p must lie in (0,1)");
  }
  if (!(params.lower <= params.mode && params.mode <= params.upper)) {
    throw std::invalid_argument(
        "hump_geometric_pmf: need lower <= mode <= upper");
  }
  SpanDist d;
  d.lower = params.lower;
  d.pmf.resize(params.upper - params.lower + 1);
  double z = 0.0;
  for (int k = params.lower; k <= params.upper; ++k) {
    double w = std::pow(params.p, std::abs(k - params.mode));
    d.pmf[k - params.lower] = w;
    z += w;
  }
  for (double& w : d.pmf) w /= z;
  return d;
}

SpanDist geometric_pmf(double p, int lower, int upper) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("geometric_pmf: p must lie in (0,1)");
  }
  if (lower < 1 || lower > upper) {
    throw std::invalid_argument("geometric_pmf: need 1 <= lower <= upper");
  }
  SpanDist d;
  d.lower = lower;
  d.pmf.resize(upper - lower + 1);
  double z = 0.0;
  for (int k = lower; k <= upper; ++k) {
    double w = std::pow(1.0 - p, k - 1) * p;
    d.pmf[k - lower] = w;
    z += w;
  }
  for (double& w : d.pmf) w /= z;
  return d;
}

int MaskLayout::masked_tokens() const {
  int n = 0;
  for (const auto& [start, len] : spans) n += len;
  return n;
}

MaskLayout sample_layout(int seq_len, double rate, const SpanDist& dist,
                         Rng& rng) {
  if (seq_len < 2) throw std::invalid_argument("sample_layout: seq_len < 2");
  if (!(rate > 0.0 && rate < 0.5)) {
    throw std::invalid_argument("sample_layout: rate must lie in (0, 0.5)");
  }
  MaskLayout layout;
  layout.mask_rate_target = rate;
  int budget = static_cast<int>(std::llround(rate * seq_len));
  if (budget <= 0) return layout;

  // blocked[i]: i is masked or adjacent to a masked position.
  std::vector<char> blocked(seq_len, 0);
  int masked = 0;
  while (masked < budget) {
    int remaining = budget - masked;
    if (remaining < dist.lower) break;
    int len = std::min(dist.sample(rng), remaining);
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
      int start = static_cast<int>(
          rng.uniform(static_cast<std::uint64_t>(seq_len - len + 1)));
      bool free = true;
      for (int i = start; i < start + len; ++i) {
        if (blocked[i]) {
          free = false;
          break;
        }
      }
      if (!free) continue;
      layout.spans.emplace_back(start, len);
      for (int i = std::max(0, start - 1);
           i < std::min(seq_len, start + len + 1); ++i) {
        blocked[i] = 1;
      }
      masked += len;
      placed = true;
    }
    if (!placed) break;
  }
  std::sort(layout.spans.begin(), layout.spans.end());
  return layout;
}

CorruptedExample corrupt(const std::vector<int>& tokens,
                         const MaskLayout& layout, int sentinel_base,
                         int eos_id) {
  std::vector<std::pair<int, int>> spans = layout.spans;
  std::sort(spans.begin(), spans.end());
  int prev_end = -1;
  for (const auto& [start, len] : spans) {
    if (start < 0 || len < 1 ||
        start + len > static_cast<int>(tokens.size())) {
      throw std::invalid_argument("corrupt: span outside the token range");
    }
    if (start < prev_end) {
      throw std::invalid_argument("corrupt: overlapping spans");
    }
    prev_end = start + len;
  }
  CorruptedExample ex;
  ex.encoder_input.reserve(tokens.size());
  std::size_t pos = 0;
  for (std::size_t s = 0; s < spans.size(); ++s) {
    auto [start, len] = spans[s];
    while (pos < static_cast<std::size_t>(start)) {
      ex.encoder_input.push_back(tokens[pos++]);
    }
    int sentinel = sentinel_base - static_cast<int>(s);
    ex.encoder_input.push_back(sentinel);
    ex.decoder_target.push_back(sentinel);
    for (int i = 0; i < len; ++i) {
      ex.decoder_target.push_back(tokens[pos++]);
    }
  }
  while (pos < tokens.size()) ex.encoder_input.push_back(tokens[pos++]);
  ex.decoder_target.push_back(eos_id);
  return ex;
}

std::vector<int> decorrupt(const CorruptedExample& ex, int sentinel_base,
                           int num_sentinels, int eos_id) {
  auto is_sentinel = [&](int id) {
    return id <= sentinel_base && id > sentinel_base - num_sentinels;
  };
  // Collect each sentinel's span from the target.
  std::vector<std::vector<int>> span_of(num_sentinels);
  int cur = -1;
  for (int id : ex.decoder_target) {
    if (id == eos_id) break;
    if (is_sentinel(id)) {
      cur = sentinel_base - id;
    } else if (cur >= 0) {
      span_of[cur].push_back(id);
    }
  }
  std::vector<int> out;
  for (int id : ex.encoder_input) {
    if (is_sentinel(id)) {
      const std::vector<int>& span = span_of[sentinel_base - id];
      out.insert(out.end(), span.begin(), span.end());
    } else {
      out.push_back(id);
    }
  }
  return out;
}

}  // namespace gur
