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

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include "otfdh/bigint.hpp"
#include "otfdh/errors.hpp"
#include "otfdh/rng.hpp"

namespace otfdh {

inline constexpr unsigned kDefaultMillerRabinRounds = 32;

namespace detail {

// Odd primes below 8192, used both for deterministic small-number primality
// and for sieving candidate windows during prime generation.
inline const std::vector<std::uint32_t>& small_odd_primes() {
  static const std::vector<std::uint32_t> primes = [] {
    constexpr std::uint32_t kLimit = 8192;
    std::vector<bool> composite(kLimit, false);
    std::vector<std::uint32_t> out;
    for (std::uint32_t i = 3; i < kLimit; i += 2) {
      if (composite[i]) continue;
      out.push_back(i);
      for (std::uint64_t j = static_cast<std::uint64_t>(i) * i; j < kLimit; j += 2 * i) {
        composite[static_cast<std::uint32_t>(j)] = true;
      }
    }
    return out;
  }();
  return primes;
}

inline bool trial_division_prime_u32(std::uint32_t n) {
  if (n < 2) return false;
  if (n == 2) return true;
  if (n % 2 == 0) return false;
  for (std::uint32_t d : small_odd_primes()) {
    if (static_cast<std::uint64_t>(d) * d > n) break;
    if (n % d == 0) return false;
  }
  return true;
}

inline std::uint64_t fnv1a(ByteView data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Byte b : data) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

// base^exponent mod modulus by binary square-and-multiply.
inline BigUint modexp(const BigUint& base, const BigUint& exponent, const BigUint& modulus) {
  if (modulus < 2) throw ParameterError("modexp: modulus must be >= 2");
  BigUint result = 1;
  BigUint acc = base % modulus;
  const unsigned nbits = bit_length(exponent);
  for (unsigned i = 0; i < nbits; ++i) {
    if (boost::multiprecision::bit_test(exponent, i)) {
      result = result * acc % modulus;
    }
    if (i + 1 < nbits) acc = acc * acc % modulus;
  }
  return result;
}

// Primality test. Deterministic (exact) below 2^16 via trial division;
// Miller-Rabin above, with `rounds` bases drawn from a stream seeded by the
// candidate itself so verdicts are reproducible. A false result is always
// definitely composite.
inline bool is_prime(const BigUint& n, unsigned rounds = kDefaultMillerRabinRounds) {
  if (rounds < 1) throw ParameterError("is_prime: rounds must be >= 1");
  if (n < 2) return false;
  if (n == 2 || n == 3) return true;
  if ((n & 1) == 0) return false;
  if (n < 65536) return detail::trial_division_prime_u32(n.convert_to<std::uint32_t>());

  for (std::uint32_t d : detail::small_odd_primes()) {
    if (n % d == 0) return false;
  }

  BigUint d = n - 1;
  unsigned s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }

  RandomSource bases(detail::fnv1a(to_bytes(n)) ^ 0x6f746664687072ULL);
  const BigUint n_minus_1 = n - 1;
  for (unsigned round = 0; round < rounds; ++round) {
    BigUint a = 2 + uniform_below(bases, n - 3);
    BigUint x = modexp(a, d, n);
    if (x == 1 || x == n_minus_1) continue;
    bool witness = true;
    for (unsigned r = 1; r < s; ++r) {
      x = x * x % n;
      if (x == n_minus_1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

namespace detail {

// Incremental sieve over a window n, n+step, n+2*step, ...: tracks n mod p for
// every small odd prime and rejects candidates with a tiny factor before any
// Miller-Rabin work. `need_safe` additionally rejects candidates where
// (n-1)/2 has a small factor, i.e. n ≡ 1 (mod p).
template <typename Accept>
std::optional<BigUint> sieved_prime_search(unsigned bits, RandomSource& rng, unsigned step,
                                           unsigned low_bits_mask, bool need_safe,
                                           bool top_two_bits, std::uint64_t budget,
                                           Accept accept) {
  const auto& primes = small_odd_primes();
  std::vector<std::uint32_t> residues(primes.size());
  std::uint64_t tried = 0;
  while (tried < budget) {
    BigUint n = random_bits(rng, bits);
    boost::multiprecision::bit_set(n, bits - 1);
    if (top_two_bits && bits >= 2) boost::multiprecision::bit_set(n, bits - 2);
    n |= low_bits_mask;
    for (std::size_t i = 0; i < primes.size(); ++i) {
      residues[i] = (n % primes[i]).convert_to<std::uint32_t>();
    }
    // Walk the window; restart with a fresh base if the bit length drifts.
    for (unsigned w = 0; w < 65536 && tried < budget; ++w, ++tried) {
      bool sieve_ok = true;
      for (std::size_t i = 0; i < primes.size(); ++i) {
        std::uint32_t r = residues[i];
        if (r == 0 || (need_safe && r == 1)) {
          sieve_ok = false;
          break;
        }
      }
      if (sieve_ok && bit_length(n) == bits && accept(n)) return n;
      n += step;
      if (bit_length(n) != bits) break;
      for (std::size_t i = 0; i < primes.size(); ++i) {
        std::uint32_t r = residues[i] + step;
        while (r >= primes[i]) r -= primes[i];
        residues[i] = r;
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Random prime with exactly `bits` bits and the top two bits set (so that a
// product of two such primes keeps its full width).
inline BigUint generate_prime(unsigned bits, RandomSource& rng) {
  if (bits < 8) throw ParameterError("generate_prime: bits must be >= 8");
  if (bits <= 20) {
    for (unsigned i = 0; i < 200000; ++i) {
      BigUint n = random_bits(rng, bits);
      boost::multiprecision::bit_set(n, bits - 1);
      boost::multiprecision::bit_set(n, bits - 2);
      n |= 1;
      if (is_prime(n)) return n;
    }
    throw GenerationError("generate_prime: candidate budget exhausted");
  }
  auto hit = detail::sieved_prime_search(bits, rng, /*step=*/2, /*low_bits_mask=*/1,
                                         /*need_safe=*/false, /*top_two_bits=*/true,
                                         /*budget=*/1ULL << 22,
                                         [](const BigUint& n) { return is_prime(n); });
  if (!hit) throw GenerationError("generate_prime: candidate budget exhausted");
  return *hit;
}

// Safe prime: p prime with (p-1)/2 prime as well. Exactly `bits` bits.
inline BigUint generate_safe_prime(unsigned bits, RandomSource& rng) {
  if (bits < 8) throw ParameterError("generate_safe_prime: bits must be >= 8");
  if (bits <= 20) {
    for (unsigned i = 0; i < 400000; ++i) {
      BigUint n = random_bits(rng, bits);
      boost::multiprecision::bit_set(n, bits - 1);
      n |= 3;  // p ≡ 3 (mod 4) so q = (p-1)/2 is odd
      if (is_prime((n - 1) >> 1) && is_prime(n)) return n;
    }
    throw GenerationError("generate_safe_prime: candidate budget exhausted");
  }
  auto hit = detail::sieved_prime_search(
      bits, rng, /*step=*/4, /*low_bits_mask=*/3, /*need_safe=*/true,
      /*top_two_bits=*/false, /*budget=*/1ULL << 24,
      [](const BigUint& n) { return is_prime((n - 1) >> 1) && is_prime(n); });
  if (!hit) throw GenerationError("generate_safe_prime: candidate budget exhausted");
  return *hit;
}

namespace detail {

// Distinct prime factors of m, by stripping small primes and accepting at most
// one large prime remainder. Returns nullopt when the remainder is composite
// and out of reach for trial division.
inline std::optional<std::vector<BigUint>> factor_for_order_check(BigUint m) {
  std::vector<BigUint> factors;
  if ((m & 1) == 0) {
    factors.push_back(2);
    while ((m & 1) == 0) m >>= 1;
  }
  for (std::uint32_t d : small_odd_primes()) {
    if (m == 1) break;
    if (m % d == 0) {
      factors.push_back(d);
      while (m % d == 0) m /= d;
    }
  }
  if (m == 1) return factors;
  if (is_prime(m)) {
    factors.push_back(m);
    return factors;
  }
  return std::nullopt;
}

}  // namespace detail

// True iff the multiplicative order of g modulo prime p is exactly p-1, i.e.
// the powers of g sweep the whole group. Decided by checking
// g^((p-1)/q) != 1 for every prime factor q of p-1; for a safe prime that is
// the classic two-exponentiation test.
inline bool is_primitive_root(const BigUint& g, const BigUint& p) {
  if (!is_prime(p)) throw ParameterError("is_primitive_root: p must be prime");
  if (g < 1 || g >= p) throw ParameterError("is_primitive_root: g must satisfy 1 <= g < p");
  if (p == 2) return g == 1;
  const BigUint group_order = p - 1;
  auto factors = detail::factor_for_order_check(group_order);
  if (!factors) {
    throw ParameterError("is_primitive_root: p-1 not factorable within budget");
  }
  for (const BigUint& q : *factors) {
    if (modexp(g, group_order / q, p) == 1) return false;
  }
  return true;
}

inline bool is_safe_prime(const BigUint& p) {
  return p >= 5 && is_prime(p) && is_prime((p - 1) >> 1);
}

// Random primitive root modulo a safe prime. With `prefer_prime_g` the result
// is additionally prime itself (the protocol's structural pair is often
// described as two primes; a primitive root need not be prime, so this is an
// opt-in restriction).
inline BigUint find_primitive_root(const BigUint& p, RandomSource& rng, bool prefer_prime_g) {
  if (!is_safe_prime(p)) throw ParameterError("find_primitive_root: p must be a safe prime");
  const BigUint q = (p - 1) >> 1;
  for (unsigned i = 0; i < 200000; ++i) {
    BigUint g = 2 + uniform_below(rng, p - 3);  // [2, p-2]
    if (prefer_prime_g && !is_prime(g)) continue;
    if (modexp(g, 2, p) != 1 && modexp(g, q, p) != 1) return g;
  }
  throw GenerationError("find_primitive_root: candidate budget exhausted");
}

// Uniform DH secret in [2, p-2].
inline BigUint uniform_secret(const BigUint& p, RandomSource& rng) {
  if (p < 5) throw ParameterError("uniform_secret: p must be >= 5");
  return 2 + uniform_below(rng, p - 3);
}

// The structural pair (g, p): prime modulus and a generator of the full
// multiplicative group.
struct DhParams {
  BigUint g;
  BigUint p;

  bool operator==(const DhParams&) const = default;
};

enum class ParamsCheck {
  ok,
  g_out_of_range,
  p_not_prime,
  g_not_primitive,
  unsupported_modulus,
};

inline ParamsCheck validate_params(const DhParams& params) {
  if (params.g < 2 || params.g >= params.p) return ParamsCheck::g_out_of_range;
  if (!is_prime(params.p)) return ParamsCheck::p_not_prime;
  try {
    if (!is_primitive_root(params.g, params.p)) return ParamsCheck::g_not_primitive;
  } catch (const ParameterError&) {
    return ParamsCheck::unsupported_modulus;
  }
  return ParamsCheck::ok;
}

inline DhParams checked_params(BigUint g, BigUint p) {
  DhParams params{std::move(g), std::move(p)};
  if (validate_params(params) != ParamsCheck::ok) {
    throw ParameterError("checked_params: invalid (g, p)");
  }
  return params;
}

// Fresh (g, p) for a session: safe prime plus primitive root.
inline DhParams generate_params(unsigned bits, RandomSource& rng, bool prefer_prime_g = true) {
  BigUint p = generate_safe_prime(bits, rng);
  BigUint g = find_primitive_root(p, rng, prefer_prime_g);
  return DhParams{std::move(g), std::move(p)};
}

}  // namespace otfdh
