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

#include <vector>

#include "gur/common.hpp"

namespace gur {

struct HumpGeometricParams {
  double p = 0.66;
  int mode = 3;
  int lower = 1;
  int upper = 10;
};

// Discrete span-length law over [lower, upper].
struct SpanDist {
  int lower = 1;
  std::vector<double> pmf;  // pmf[k - lower] = P(k)

  int upper() const { return lower + static_cast<int>(pmf.size()) - 1; }
  double mean() const;
  int sample(Rng& rng) const;
};

// P(k) proportional to p^|k - mode|, renormalized. Peaked at the mode with
// geometric decay on both sides.
SpanDist hump_geometric_pmf(const HumpGeometricParams& params);

// Plain geometric P(k) proportional to (1-p)^(k-1) * p, clipped to
// [lower, upper] and renormalized. Skewed towards the shortest spans.
SpanDist geometric_pmf(double p, int lower, int upper);

struct MaskLayout {
  std::vector<std::pair<int, int>> spans;  // (start, length), sorted
  double mask_rate_target = 0.15;

  int masked_tokens() const;
};

// Draws spans until the budget round(rate * seq_len) is filled. Sampled
// lengths are clamped to the remaining budget so the realized rate never
// overshoots; starts are rejection-sampled (at most 100 tries per span) to
// keep spans disjoint with at least one unmasked token between them.
MaskLayout sample_layout(int seq_len, double rate, const SpanDist& dist,
                         Rng& rng);

struct CorruptedExample {
  std::vector<int> encoder_input;
  std::vector<int> decoder_target;
};

// T5-style corruption: span i collapses to the single sentinel token
// (sentinel_base - i) in the encoder input; the decoder target lists each
// sentinel followed by the tokens it hid, then eos_id.
CorruptedExample corrupt(const std::vector<int>& tokens,
                         const MaskLayout& layout, int sentinel_base,
                         int eos_id);

// Reconstruction oracle: splices the spans of decoder_target back into
// encoder_input. corrupt followed by decorrupt is the identity.
std::vector<int> decorrupt(const CorruptedExample& ex, int sentinel_base,
                           int num_sentinels, int eos_id);

}  // namespace gur
