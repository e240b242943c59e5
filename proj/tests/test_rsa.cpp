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

#include "oracles.hpp"
#include "otfdh/roles.hpp"
#include "otfdh/rsa.hpp"

using namespace otfdh;

TEST_CASE("the classic toy key: p=61 q=53 e=17") {
  RsaKeyPair kp = rsa_from_factors(61, 53, 17);
  REQUIRE(kp.pub.n == 3233);
  REQUIRE(kp.pub.e == 17);
  REQUIRE(kp.d == 2753);
  // independent route: extended Euclid over phi = 60 * 52
  REQUIRE(oracles::ext_euclid_inverse(17, 3120) == 2753);
  // and the keypair invariant over lcm(p-1, q-1)
  REQUIRE(kp.d * kp.pub.e % lcm(BigUint(60), BigUint(52)) == 1);
}

TEST_CASE("keygen produces working pairs") {
  RandomSource rng(5);
  RsaKeyPair kp = rsa_keygen(128, rng);
  REQUIRE(bit_length(kp.p_factor) == 64);
  REQUIRE(bit_length(kp.q_factor) == 64);
  REQUIRE(kp.p_factor != kp.q_factor);
  REQUIRE(kp.pub.n >= BigUint(1) << 127);
  REQUIRE(kp.pub.e == 65537);
  for (int i = 0; i < 100; ++i) {
    BigUint m = uniform_below(rng, kp.pub.n);
    REQUIRE(modexp(modexp(m, kp.pub.e, kp.pub.n), kp.d, kp.pub.n) == m);
  }
  RandomSource rng2(6);
  REQUIRE(rsa_keygen(128, rng2).pub.n != kp.pub.n);
  REQUIRE_THROWS_AS(rsa_keygen(62, rng2), ParameterError);
  REQUIRE_THROWS_AS(rsa_keygen(129, rng2), ParameterError);
}

TEST_CASE("rsa_apply on a single block matches the modexp oracle") {
  RsaKeyPair kp = rsa_from_factors(61, 53, 17);
  // one data byte 65 -> blocks [65, trailer]; first cipher block is 65^17 mod n
  Bytes out = rsa_apply(Bytes{65}, kp.pub.e, kp.pub.n);
  REQUIRE(out.size() == 4);  // two 2-byte blocks
  REQUIRE(from_bytes(ByteView(out).first(2)) == 2790);
  REQUIRE(oracles::naive_modexp(65, 17, 3233) == 2790);
}

TEST_CASE("chunk framing is bijective") {
  RandomSource rng(9);
  for (std::size_t block : {1u, 2u, 7u, 16u, 63u}) {
    for (int trial = 0; trial < 60; ++trial) {
      Bytes x = rng.bytes(rng.uniform_below_u64(block * 10 + 1));
      auto back = chunk_unpad(chunk_pad(x, block), block);
      REQUIRE(back.has_value());
      REQUIRE(*back == x);
    }
  }
  REQUIRE(chunk_pad({}, 5).empty());
  REQUIRE(chunk_unpad(Bytes{}, 5)->empty());
  // bad trailer value
  REQUIRE_FALSE(chunk_unpad(Bytes{0, 0, 0, 0, 9}, 5).has_value());
  // nonzero padding byte between payload end and trailer
  REQUIRE_FALSE(chunk_unpad(Bytes{1, 2, 7, 0, 2}, 5).has_value());
  // length not a multiple of the block
  REQUIRE_FALSE(chunk_unpad(Bytes{1, 2, 3}, 5).has_value());
}

TEST_CASE("apply/invert round-trips across block counts") {
  RandomSource rng(10);
  RsaKeyPair kp = rsa_keygen(128, rng);
  const std::size_t block = modulus_bytes(kp.pub.n) - 1;
  for (std::size_t len : {std::size_t(0), std::size_t(1), block - 1, block, block + 1,
                          2 * block, 3 * block - 1}) {
    Bytes m = rng.bytes(len);
    Bytes c = rsa_apply(m, kp.pub.e, kp.pub.n);
    auto back = rsa_invert(c, kp.d, kp.pub.n);
    REQUIRE(back.has_value());
    REQUIRE(*back == m);
  }
  REQUIRE(rsa_apply({}, kp.pub.e, kp.pub.n).empty());
}

TEST_CASE("encrypt/decrypt round-trips the setup payload at 64-bit desk scale") {
  RandomSource rng(11);
  RsaKeyPair sd = rsa_keygen(64, rng);
  RsaKeyPair hg = rsa_keygen(64, rng);
  Bytes core = encode_setup_core(DhParams{5, 23}, sd.pub);
  Bytes ct = rsa_encrypt(core, hg.pub);
  auto back = rsa_decrypt(ct, hg);
  REQUIRE(back.has_value());
  REQUIRE(*back == core);

  auto empty_back = rsa_decrypt(rsa_encrypt({}, hg.pub), hg);
  REQUIRE(empty_back.has_value());
  REQUIRE(empty_back->empty());
}

TEST_CASE("every single-byte flip of a ciphertext is detected or changes the plaintext") {
  RandomSource rng(12);
  RsaKeyPair kp = rsa_keygen(128, rng);
  Bytes m = rng.bytes(40);
  Bytes c = rsa_encrypt(m, kp.pub);
  for (std::size_t i = 0; i < c.size(); ++i) {
    Bytes corrupted = c;
    corrupted[i] ^= 0xA5;
    auto back = rsa_decrypt(corrupted, kp);
    if (back) REQUIRE(*back != m);
  }
}

TEST_CASE("sign and verify") {
  RandomSource rng(13);
  RsaKeyPair kp = rsa_keygen(128, rng);
  const std::size_t block = modulus_bytes(kp.pub.n) - 1;
  for (int i = 0; i < 100; ++i) {
    Bytes m = rng.bytes(rng.uniform_below_u64(2 * block + 1));
    Bytes sig = rsa_sign(m, kp);
    REQUIRE(rsa_verify(m, sig, kp.pub));
    Bytes other = m;
    other.push_back(0x01);
    REQUIRE_FALSE(rsa_verify(other, sig, kp.pub));
  }
  // signatures do not transfer between keys
  for (int i = 0; i < 20; ++i) {
    RandomSource r2(100 + i);
    RsaKeyPair wrong = rsa_keygen(128, r2);
    Bytes m = rng.bytes(24);
    REQUIRE_FALSE(rsa_verify(m, rsa_sign(m, kp), wrong.pub));
  }
  // garbage signatures never throw
  REQUIRE_FALSE(rsa_verify(Bytes{1, 2, 3}, Bytes{0xFF, 0xFF}, kp.pub));
  REQUIRE_FALSE(rsa_verify(Bytes{1, 2, 3}, Bytes{}, kp.pub));
}

TEST_CASE("make_signed verifies at construction") {
  RandomSource rng(14);
  RsaKeyPair kp = rsa_keygen(128, rng);
  SignedPayload sp = make_signed(rng.bytes(30), kp);
  REQUIRE(rsa_verify(sp.payload, sp.signature, kp.pub));
}

TEST_CASE("every single-bit flip in a signature breaks verification") {
  RandomSource rng(15);
  RsaKeyPair kp = rsa_keygen(256, rng);
  Bytes params_bytes = encode_params(DhParams{5, 23});
  Bytes sig = rsa_sign(params_bytes, kp);
  for (std::size_t byte = 0; byte < sig.size(); ++byte) {
    for (int bit = 0; bit < 8; ++bit) {
      Bytes corrupted = sig;
      corrupted[byte] ^= static_cast<Byte>(1u << bit);
      REQUIRE_FALSE(rsa_verify(params_bytes, corrupted, kp.pub));
    }
  }
}

TEST_CASE("property: sign-verify and encrypt-decrypt hold over random keys and messages") {
  RandomSource rng(16);
  for (int k = 0; k < 5; ++k) {
    RsaKeyPair kp = rsa_keygen(96 + 32 * k, rng);
    for (int i = 0; i < 40; ++i) {
      Bytes m = rng.bytes(rng.uniform_below_u64(80));
      REQUIRE(*rsa_decrypt(rsa_encrypt(m, kp.pub), kp) == m);
      REQUIRE(rsa_verify(m, rsa_sign(m, kp), kp.pub));
    }
  }
}
