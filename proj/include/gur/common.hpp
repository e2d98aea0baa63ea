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
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gur {

// Thrown for malformed inputs (bad JSONL, bad flags, corrupt checkpoints).
// The CLI maps this to exit code 2; everything else unexpected is exit 1.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// FNV-1a, 64-bit. Stable across platforms; used for dedup keys and
// shuffle ordering so that sorted output never depends on input order.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// splitmix64 finalizer. Mixes a seed into a hash so that reshuffling with a
// different seed produces an unrelated permutation.
inline std::uint64_t hash_mix(std::uint64_t seed, std::uint64_t h) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull + h;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic RNG. mt19937_64 has a portable bit stream, but the standard
// distributions do not, so the mappings from bits to values live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Unbiased integer in [0, n) via 128-bit multiply (Lemire's method,
  // without the rejection step; bias is < 2^-64 * n, irrelevant here).
  std::uint64_t uniform(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. One value per call; the second root is
  // discarded to keep state independent of call parity.
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

 private:
  std::mt19937_64 engine_;
};

// Reads a text file as lines, dropping empty ones. Throws UsageError when
// the file cannot be opened.
inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

// In-place Fisher-Yates driven by the given generator.
template <typename T>
void shuffle_vector(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = rng.uniform(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace gur
