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

#include <boost/multiprecision/cpp_int.hpp>

#include "otfdh/bytes.hpp"
#include "otfdh/errors.hpp"
#include "otfdh/rng.hpp"

namespace otfdh {

// Arbitrary-precision unsigned integer. Values are kept non-negative by
// construction; the canonical byte form below is the normative encoding
// everywhere one of these crosses a module boundary.
using BigUint = boost::multiprecision::cpp_int;

inline unsigned bit_length(const BigUint& n) {
  if (n == 0) return 0;
  return boost::multiprecision::msb(n) + 1;
}

// Canonical encoding: big-endian, minimal (no leading zero byte). Zero is the
// empty string.
inline Bytes to_bytes(const BigUint& n) {
  if (n < 0) throw ParameterError("to_bytes: negative value");
  Bytes out((bit_length(n) + 7) / 8);
  BigUint t = n;
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = static_cast<Byte>(t & 0xff);
    t >>= 8;
  }
  return out;
}

// Tolerant of leading zero bytes on input; encode(decode(x)) is canonical.
inline BigUint from_bytes(ByteView data) {
  BigUint n = 0;
  for (Byte b : data) {
    n <<= 8;
    n |= b;
  }
  return n;
}

// Fixed-width big-endian encoding, left-padded with zeros.
inline Bytes to_bytes_padded(const BigUint& n, std::size_t width) {
  Bytes canon = to_bytes(n);
  if (canon.size() > width) throw ParameterError("to_bytes_padded: value does not fit width");
  Bytes out(width - canon.size(), 0);
  out.insert(out.end(), canon.begin(), canon.end());
  return out;
}

inline std::string to_hex(const BigUint& n) { return to_hex(ByteView(to_bytes(n))); }

inline BigUint biguint_from_hex(const std::string& hex) {
  Bytes raw;
  std::string padded = (hex.size() % 2) ? "0" + hex : hex;
  if (!from_hex(padded, raw)) throw ParameterError("biguint_from_hex: invalid hex");
  return from_bytes(raw);
}

// Uniform in [0, 2^bits).
inline BigUint random_bits(RandomSource& rng, unsigned bits) {
  if (bits == 0) return 0;
  Bytes buf = rng.bytes((bits + 7) / 8);
  unsigned excess = static_cast<unsigned>(buf.size() * 8) - bits;
  buf[0] &= static_cast<Byte>(0xff >> excess);
  return from_bytes(buf);
}

// Uniform in [0, n) by rejection sampling over bit_length(n)-bit draws.
inline BigUint uniform_below(RandomSource& rng, const BigUint& n) {
  if (n <= 0) throw ParameterError("uniform_below: bound must be positive");
  if (n == 1) return 0;
  unsigned bits = bit_length(n);
  for (;;) {
    BigUint v = random_bits(rng, bits);
    if (v < n) return v;
  }
}

}  // namespace otfdh
