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

#include <set>

#include "otfdh/goldens.hpp"
#include "otfdh/rng.hpp"
#include "otfdh/wire.hpp"

using namespace otfdh;

namespace {

WireMessage random_message(RandomSource& rng) {
  WireMessage m;
  m.type = static_cast<MsgType>(1 + rng.uniform_below_u64(8));
  m.session_id = static_cast<std::uint32_t>(rng.next_u64());
  m.seq = rng.next_u64();
  std::size_t nfields = rng.uniform_below_u64(4);
  for (std::size_t i = 0; i < nfields; ++i) {
    m.fields.push_back(rng.bytes(rng.uniform_below_u64(20)));
  }
  return m;
}

}  // namespace

TEST_CASE("layout: an integer field is length-prefixed big-endian") {
  WireMessage m = make_message(MsgType::DhOffer, 0, 0, {Bytes{0x17}});
  Bytes wire = serialize(m);
  // ... | field_count 00 01 | field_len 00 00 00 01 | 17
  Bytes tail(wire.end() - 7, wire.end());
  REQUIRE(tail == Bytes{0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x17});
}

TEST_CASE("layout: empty field list gives a bare 20-byte message") {
  Bytes wire = serialize(make_message(MsgType::PubkeyRequest, 7, 9));
  REQUIRE(wire.size() == kWireHeaderSize);
  REQUIRE(wire.size() == 20);
  REQUIRE(Bytes(wire.begin(), wire.begin() + 4) == Bytes{'O', 'T', 'F', 'D'});
  REQUIRE(wire[4] == kWireVersion);
}

TEST_CASE("parse(serialize(m)) == m over randomized messages") {
  RandomSource rng(1);
  for (int i = 0; i < 10000; ++i) {
    WireMessage m = random_message(rng);
    WireMessage back;
    REQUIRE(parse(serialize(m), back) == ParseError::none);
    REQUIRE(back == m);
  }
}

TEST_CASE("each malformation class gets its own error") {
  WireMessage m = make_message(MsgType::Data, 1, 2, {Bytes{1, 2, 3}});
  Bytes good = serialize(m);
  WireMessage out;

  for (std::size_t cut = 0; cut < good.size(); ++cut) {
    Bytes truncated(good.begin(), good.begin() + cut);
    REQUIRE(parse(truncated, out) == ParseError::truncated);
  }

  Bytes bad_magic = good;
  bad_magic[0] ^= 0xFF;
  REQUIRE(parse(bad_magic, out) == ParseError::bad_magic);

  Bytes bad_version = good;
  bad_version[4] = 9;
  REQUIRE(parse(bad_version, out) == ParseError::bad_version);

  Bytes bad_type = good;
  bad_type[5] = 0;
  REQUIRE(parse(bad_type, out) == ParseError::bad_msg_type);
  bad_type[5] = 42;
  REQUIRE(parse(bad_type, out) == ParseError::bad_msg_type);

  Bytes trailing = good;
  trailing.push_back(0x00);
  REQUIRE(parse(trailing, out) == ParseError::trailing_bytes);
}

TEST_CASE("a forged field count cannot force a large allocation") {
  // header claiming 65535 fields with no bytes behind it
  ByteWriter w;
  w.raw(ByteView(kWireMagic));
  w.u8(kWireVersion);
  w.u8(7);
  w.u32(1);
  w.u64(1);
  w.u16(0xFFFF);
  WireMessage out;
  REQUIRE(parse(w.take(), out) == ParseError::truncated);

  // field length prefix claiming 4 GiB
  WireMessage m = make_message(MsgType::Data, 1, 2, {Bytes{1}});
  Bytes wire = serialize(m);
  wire[20] = 0xFF;  // first byte of the field length
  REQUIRE(parse(wire, out) == ParseError::truncated);
}

TEST_CASE("parser survives random fuzz input") {
  RandomSource rng(2);
  WireMessage out;
  for (int i = 0; i < 100000; ++i) {
    Bytes junk = rng.bytes(rng.uniform_below_u64(65));
    parse(junk, out);  // must not crash or overallocate; result irrelevant
  }
  SUCCEED();
}

TEST_CASE("serialization is injective on distinct messages") {
  RandomSource rng(3);
  std::set<Bytes> wires;
  std::set<std::string> keys;
  int distinct = 0;
  for (int i = 0; i < 2000; ++i) {
    WireMessage m = random_message(rng);
    Bytes wire = serialize(m);
    std::string key = to_hex(wire);
    // build a structural key independent of serialize() to dedupe inputs
    std::string structural = std::to_string(static_cast<int>(m.type)) + "/" +
                             std::to_string(m.session_id) + "/" + std::to_string(m.seq);
    for (const Bytes& f : m.fields) structural += "/" + to_hex(f);
    if (keys.insert(structural).second) {
      ++distinct;
      REQUIRE(wires.insert(wire).second);
    }
  }
  REQUIRE(distinct > 1900);
}

TEST_CASE("crc32 matches the reference check value") {
  Bytes data{'1', '2', '3', '4', '5', '6', '7', '8', '9'};
  REQUIRE(crc32(data) == 0xCBF43926u);
  REQUIRE(crc32({}) == 0x00000000u);
}

TEST_CASE("frame layout: empty payload packs to 16 bytes") {
  Bytes f = frame_pack(0, {});
  REQUIRE(f.size() == 16);
  // crc is over the 12 header bytes
  std::uint32_t expect = crc32(ByteView(f).first(12));
  std::uint32_t stored = 0;
  for (int i = 12; i < 16; ++i) stored = (stored << 8) | f[i];
  REQUIRE(stored == expect);

  Frame out;
  REQUIRE(frame_unpack(f, out) == FrameError::none);
  REQUIRE(out.seq == 0);
  REQUIRE(out.payload.empty());
}

TEST_CASE("frame round-trip over random payloads") {
  RandomSource rng(4);
  for (int i = 0; i < 10000; ++i) {
    std::uint64_t seq = rng.next_u64();
    Bytes payload = rng.bytes(rng.uniform_below_u64(48));
    Frame out;
    REQUIRE(frame_unpack(frame_pack(seq, payload), out) == FrameError::none);
    REQUIRE(out.seq == seq);
    REQUIRE(out.payload == payload);
  }
}

TEST_CASE("any single-byte corruption of a frame is caught") {
  RandomSource rng(5);
  int trials = 0;
  for (int i = 0; i < 400; ++i) {
    Bytes f = frame_pack(rng.next_u64(), rng.bytes(1 + rng.uniform_below_u64(24)));
    for (std::size_t pos = 0; pos < f.size(); ++pos) {
      Bytes corrupted = f;
      Byte flip = static_cast<Byte>(1 + rng.uniform_below_u64(255));
      corrupted[pos] ^= flip;
      Frame out;
      REQUIRE(frame_unpack(corrupted, out) != FrameError::none);
      ++trials;
    }
  }
  REQUIRE(trials > 10000);
}

TEST_CASE("frame errors are classified") {
  Frame out;
  REQUIRE(frame_unpack(Bytes(15, 0), out) == FrameError::too_short);
  Bytes f = frame_pack(1, Bytes{1, 2, 3});
  Bytes longer = f;
  longer.push_back(0);
  REQUIRE(frame_unpack(longer, out) == FrameError::length_mismatch);
  Bytes bad = f;
  bad.back() ^= 1;
  REQUIRE(frame_unpack(bad, out) == FrameError::bad_crc);
}

TEST_CASE("unknown message types cannot be constructed or serialized") {
  REQUIRE_THROWS_AS(make_message(static_cast<MsgType>(0), 0, 0), ParameterError);
  REQUIRE_THROWS_AS(make_message(static_cast<MsgType>(9), 0, 0), ParameterError);
  WireMessage m;
  m.type = static_cast<MsgType>(200);
  REQUIRE_THROWS_AS(serialize(m), ParameterError);
}

TEST_CASE("shipped golden vectors cover every message type once") {
  auto vectors = golden_vectors();
  REQUIRE(vectors.size() == 8);
  std::set<MsgType> types;
  for (const auto& [name, msg] : vectors) {
    types.insert(msg.type);
    WireMessage back;
    Bytes wire = serialize(msg);
    REQUIRE(parse(wire, back) == ParseError::none);
    REQUIRE(back == msg);
    REQUIRE(serialize(back) == wire);
  }
  REQUIRE(types.size() == 8);
}
