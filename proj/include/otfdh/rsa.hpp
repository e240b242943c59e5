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

#include <optional>
#include <utility>

#include "otfdh/bigint.hpp"
#include "otfdh/errors.hpp"
#include "otfdh/numtheory.hpp"

// Textbook RSA: raw modular powers over chunked payloads, no padding scheme,
// no hashing. Signatures are private-exponent transforms of the full payload
// and verification is literal D(E(Z)) = Z byte equality. This is deliberately
// the desk-scale classroom construction, not production RSA.

namespace otfdh {

struct RsaPublicKey {
  BigUint n;
  BigUint e;

  bool operator==(const RsaPublicKey&) const = default;
};

struct RsaKeyPair {
  RsaPublicKey pub;
  BigUint d;
  // Factors retained for self-test only; never serialized.
  BigUint p_factor;
  BigUint q_factor;
};

namespace detail {

// Extended Euclid. Returns x with a*x ≡ 1 (mod m), or nullopt when
// gcd(a, m) != 1.
inline std::optional<BigUint> mod_inverse(const BigUint& a, const BigUint& m) {
  BigUint old_r = a % m, r = m;
  BigUint old_s = 1, s = 0;
  while (r != 0) {
    BigUint qt = old_r / r;
    BigUint tmp = old_r - qt * r;
    old_r = r;
    r = tmp;
    tmp = old_s - qt * s;
    old_s = s;
    s = tmp;
  }
  if (old_r != 1) return std::nullopt;
  BigUint inv = old_s % m;
  if (inv < 0) inv += m;
  return inv;
}

}  // namespace detail

// Deterministic pair from fixed factors; used by tests and by keygen.
inline RsaKeyPair rsa_from_factors(const BigUint& p, const BigUint& q, BigUint e) {
  if (p == q) throw ParameterError("rsa_from_factors: factors must be distinct");
  const BigUint n = p * q;
  const BigUint phi = (p - 1) * (q - 1);
  while (gcd(e, phi) != 1) e += 2;
  auto d = detail::mod_inverse(e, phi);
  if (!d) throw GenerationError("rsa_from_factors: no modular inverse for e");
  return RsaKeyPair{RsaPublicKey{n, e}, *d, p, q};
}

// Key pair with an n of exactly `bits` bits from two distinct bits/2 primes.
// e defaults to 65537 and is bumped to the next odd value coprime to phi(n)
// when necessary.
inline RsaKeyPair rsa_keygen(unsigned bits, RandomSource& rng) {
  if (bits < 64 || bits % 2 != 0) {
    throw ParameterError("rsa_keygen: bits must be even and >= 64");
  }
  BigUint p = generate_prime(bits / 2, rng);
  BigUint q = generate_prime(bits / 2, rng);
  while (q == p) q = generate_prime(bits / 2, rng);
  return rsa_from_factors(p, q, 65537);
}

inline std::size_t modulus_bytes(const BigUint& n) { return (bit_length(n) + 7) / 8; }

// --- chunk framing -----------------------------------------------------------
//
// Payloads of arbitrary length are carried as fixed-size blocks:
//   plain block size  B = modulus_bytes - 1   (every block value < n)
//   cipher block size C = modulus_bytes
// The forward direction appends zero padding plus one trailer byte holding
// payload_len mod B, so the inverse direction can strip the padding exactly.
// The empty payload maps to the empty ciphertext.

inline Bytes chunk_pad(ByteView data, std::size_t block) {
  if (block < 1) throw ParameterError("chunk_pad: block must be >= 1");
  if (data.empty()) return {};
  Bytes out(data.begin(), data.end());
  const std::size_t remainder = data.size() % block;
  const std::size_t pad = (block - 1 - remainder) % block;
  out.insert(out.end(), pad, 0);
  out.push_back(static_cast<Byte>(remainder));
  return out;
}

inline std::optional<Bytes> chunk_unpad(ByteView padded, std::size_t block) {
  if (block < 1) throw ParameterError("chunk_unpad: block must be >= 1");
  if (padded.empty()) return Bytes{};
  if (padded.size() % block != 0) return std::nullopt;
  const Byte trailer = padded.back();
  if (trailer >= block) return std::nullopt;  // malformed trailer
  const std::size_t blocks = padded.size() / block;
  const std::size_t len = (blocks - 1) * block + trailer;
  // padding between payload and trailer must be zero
  for (std::size_t i = len; i + 1 < padded.size(); ++i) {
    if (padded[i] != 0) return std::nullopt;
  }
  return Bytes(padded.begin(), padded.begin() + static_cast<std::ptrdiff_t>(len));
}

// Forward transform: pad, then per block m -> m^exponent mod n, each result
// left-padded to the full modulus width.
inline Bytes rsa_apply(ByteView data, const BigUint& exponent, const BigUint& n) {
  const std::size_t cbytes = modulus_bytes(n);
  if (cbytes < 2) throw ParameterError("rsa_apply: modulus too small");
  const std::size_t block = cbytes - 1;
  const Bytes padded = chunk_pad(data, block);
  Bytes out;
  out.reserve((padded.size() / block) * cbytes);
  for (std::size_t off = 0; off < padded.size(); off += block) {
    BigUint m = from_bytes(ByteView(padded).subspan(off, block));
    Bytes c = to_bytes_padded(modexp(m, exponent, n), cbytes);
    out.insert(out.end(), c.begin(), c.end());
  }
  return out;
}

// Inverse transform: per block c -> c^exponent mod n, then strip the chunk
// padding. Any structural violation (odd length, block value >= n, bad
// trailer) reports failure instead of producing garbage, which is how
// tampering surfaces.
inline std::optional<Bytes> rsa_invert(ByteView data, const BigUint& exponent, const BigUint& n) {
  const std::size_t cbytes = modulus_bytes(n);
  if (cbytes < 2) throw ParameterError("rsa_invert: modulus too small");
  const std::size_t block = cbytes - 1;
  if (data.size() % cbytes != 0) return std::nullopt;
  Bytes padded;
  padded.reserve((data.size() / cbytes) * block);
  for (std::size_t off = 0; off < data.size(); off += cbytes) {
    BigUint c = from_bytes(data.subspan(off, cbytes));
    if (c >= n) return std::nullopt;
    BigUint m = modexp(c, exponent, n);
    if (bit_length(m) > 8 * block) return std::nullopt;  // not a valid plain block
    Bytes mb = to_bytes_padded(m, block);
    padded.insert(padded.end(), mb.begin(), mb.end());
  }
  return chunk_unpad(padded, block);
}

inline Bytes rsa_encrypt(ByteView m, const RsaPublicKey& k) { return rsa_apply(m, k.e, k.n); }

inline std::optional<Bytes> rsa_decrypt(ByteView c, const RsaKeyPair& kp) {
  return rsa_invert(c, kp.d, kp.pub.n);
}

inline Bytes rsa_sign(ByteView m, const RsaKeyPair& kp) { return rsa_apply(m, kp.d, kp.pub.n); }

// Recovers the signed payload with the public exponent and compares byte for
// byte. Never throws on tampered input.
inline bool rsa_verify(ByteView m, ByteView sig, const RsaPublicKey& k) {
  auto recovered = rsa_invert(sig, k.e, k.n);
  if (!recovered) return false;
  return recovered->size() == m.size() && std::equal(recovered->begin(), recovered->end(), m.begin());
}

// Payload plus signature, valid at construction.
struct SignedPayload {
  Bytes payload;
  Bytes signature;
};

inline SignedPayload make_signed(Bytes payload, const RsaKeyPair& signer) {
  Bytes sig = rsa_sign(payload, signer);
  return SignedPayload{std::move(payload), std::move(sig)};
}

}  // namespace otfdh
