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

#include <utility>

#include "otfdh/bigint.hpp"
#include "otfdh/errors.hpp"
#include "otfdh/numtheory.hpp"

// One Diffie-Hellman exchange over an agreed (g, p), producing the shared
// secret K and its fixed-width byte expansion used as a one-time pad.

namespace otfdh {

// Pad width for a given modulus: every key under the same params expands to
// the same number of bytes regardless of leading zeros in K.
inline std::size_t otp_width(const DhParams& params) { return (bit_length(params.p) + 7) / 8; }

// One side's ephemeral: secret exponent plus the public value that crosses
// the wire. The secret never leaves the owning role.
struct DhEphemeral {
  BigUint secret;
  BigUint public_value;
  DhParams params;
};

struct SharedKey {
  BigUint k;
  Bytes otp;  // big-endian K, left-padded to otp_width(params)

  bool operator==(const SharedKey&) const = default;
};

// Deterministic variant for tests and replays of worked examples.
inline DhEphemeral dh_offer_with_secret(const DhParams& params, BigUint secret) {
  if (secret < 2 || secret > params.p - 2) {
    throw ParameterError("dh_offer_with_secret: secret out of [2, p-2]");
  }
  BigUint pub = modexp(params.g, secret, params.p);
  return DhEphemeral{std::move(secret), std::move(pub), params};
}

inline DhEphemeral dh_offer(const DhParams& params, RandomSource& rng) {
  if (params.p < 5) throw ParameterError("dh_offer: modulus too small");
  if (params.g < 2 || params.g >= params.p) throw ParameterError("dh_offer: generator out of range");
  return dh_offer_with_secret(params, uniform_secret(params.p, rng));
}

// Values whose powers collapse the key space. The protocol rejects them and
// treats the exchange as failed rather than deriving a predictable key.
inline bool degenerate_public_value(const BigUint& v, const DhParams& params) {
  return v <= 1 || v >= params.p - 1;
}

inline SharedKey dh_combine(const DhEphemeral& mine, const BigUint& theirs_public) {
  if (degenerate_public_value(theirs_public, mine.params)) {
    throw ProtocolError("dh_combine: degenerate public value");
  }
  BigUint k = modexp(theirs_public, mine.secret, mine.params.p);
  Bytes otp = to_bytes_padded(k, otp_width(mine.params));
  return SharedKey{std::move(k), std::move(otp)};
}

// Byte-wise XOR against the leading bytes of the pad. Involution; a second
// application restores the input.
inline Bytes xor_otp(ByteView data, const SharedKey& key) {
  if (data.size() > key.otp.size()) {
    throw SizeError("xor_otp: data longer than one-time pad");
  }
  Bytes out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i] ^ key.otp[i];
  return out;
}

}  // namespace otfdh
