// Copyright 2026 The otfdh Authors
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

#include <cstdint>
#include <limits>
#include <random>
#include <span>

#include "otfdh/bytes.hpp"
#include "otfdh/errors.hpp"

namespace otfdh {

// splitmix64; used to derive independent sub-stream seeds from a master seed
// so that unrelated components never share a generator.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic random source. Same seed, same stream, on every platform:
// mt19937_64 output is fully specified by the standard and all bounded draws
// below use rejection sampling rather than implementation-defined
// distributions.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, n). Rejection against a power-of-two mask, no modulo bias.
  std::uint64_t uniform_below_u64(std::uint64_t n) {
    if (n == 0) throw ParameterError("uniform_below_u64: bound must be positive");
    if (n == 1) return 0;
    std::uint64_t mask = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t top = n - 1;
    // smallest all-ones mask covering top
    mask = top;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    for (;;) {
      std::uint64_t v = next_u64() & mask;
      if (v < n) return v;
    }
  }

  // Uniform in [lo, hi], inclusive.
  std::uint64_t uniform_range_u64(std::uint64_t lo, std::uint64_t hi) {
    if (lo > hi) throw ParameterError("uniform_range_u64: empty range");
    return lo + uniform_below_u64(hi - lo + 1);
  }

  // Uniform double in [0, 1) with 53 significant bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  void fill(std::span<Byte> out) {
    std::size_t i = 0;
    while (i < out.size()) {
      std::uint64_t v = next_u64();
      for (int b = 0; b < 8 && i < out.size(); ++b, ++i) {
        out[i] = static_cast<Byte>(v >> (8 * b));
      }
    }
  }

  Bytes bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
  }

  // Independent child stream. `tag` separates the children of one parent.
  RandomSource derive(std::uint64_t tag) const {
    return RandomSource(mix64(seed_ ^ mix64(tag)));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace otfdh
