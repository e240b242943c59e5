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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "otfdh/bigint.hpp"
#include "otfdh/rng.hpp"

using namespace otfdh;

TEST_CASE("equal seeds produce equal streams") {
  RandomSource a(12345), b(12345);
  for (int i = 0; i < 10000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
  RandomSource a(1), b(2);
  bool any_diff = false;
  for (int i = 0; i < 16 && !any_diff; ++i) any_diff = a.next_u64() != b.next_u64();
  REQUIRE(any_diff);
}

TEST_CASE("uniform_below_u64 stays in range") {
  RandomSource rng(7);
  for (int i = 0; i < 20000; ++i) {
    REQUIRE(rng.uniform_below_u64(20) < 20);
  }
  REQUIRE(rng.uniform_below_u64(1) == 0);
  REQUIRE_THROWS_AS(rng.uniform_below_u64(0), ParameterError);
}

TEST_CASE("uniform_below_u64 has no visible modulo bias") {
  // 20 buckets, 1e5 draws: each count within 5 sigma of the binomial mean.
  RandomSource rng(99);
  const int n = 100000, buckets = 20;
  std::vector<int> count(buckets, 0);
  for (int i = 0; i < n; ++i) ++count[rng.uniform_below_u64(buckets)];
  const double mean = double(n) / buckets;
  const double sigma = std::sqrt(n * (1.0 / buckets) * (1.0 - 1.0 / buckets));
  for (int c : count) {
    REQUIRE(std::abs(c - mean) < 5 * sigma);
  }
}

TEST_CASE("derive gives independent deterministic children") {
  RandomSource parent(5);
  RandomSource c1 = parent.derive(1), c1again = parent.derive(1), c2 = parent.derive(2);
  REQUIRE(c1.next_u64() == c1again.next_u64());
  RandomSource c1b = parent.derive(1);
  REQUIRE(c1b.next_u64() != c2.next_u64());
}

TEST_CASE("biguint draws are deterministic and bounded") {
  RandomSource a(42), b(42);
  BigUint bound = biguint_from_hex("ffeeddccbbaa99887766554433221100");
  for (int i = 0; i < 500; ++i) {
    BigUint x = uniform_below(a, bound);
    REQUIRE(x == uniform_below(b, bound));
    REQUIRE(x < bound);
  }
  REQUIRE(uniform_below(a, BigUint(1)) == 0);
  REQUIRE_THROWS_AS(uniform_below(a, BigUint(0)), ParameterError);
}

TEST_CASE("random_bits has exactly the requested width available") {
  RandomSource rng(3);
  for (unsigned bits : {1u, 7u, 8u, 9u, 63u, 64u, 65u, 255u}) {
    for (int i = 0; i < 50; ++i) {
      REQUIRE(bit_length(random_bits(rng, bits)) <= bits);
    }
  }
  REQUIRE(random_bits(rng, 0) == 0);
}
