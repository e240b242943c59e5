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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "otfdh/bytes.hpp"
#include "otfdh/errors.hpp"

// Wire layout (all integers big-endian):
//
//   message := "OTFD" | version(1) | msg_type(1) | session_id(4) | seq(8)
//            | field_count(2) | { field_len(4) | field_bytes }*
//
//   frame   := seq(8) | payload_len(4) | payload | crc32(4)
//
// The layouts are normative and bit-exact; goldens.hpp ships reference
// vectors pinning them.

namespace otfdh {

inline constexpr std::array<Byte, 4> kWireMagic = {'O', 'T', 'F', 'D'};
inline constexpr Byte kWireVersion = 1;
inline constexpr std::size_t kWireHeaderSize = 20;  // magic..field_count
inline constexpr std::size_t kFrameOverhead = 16;   // seq + len + crc32

enum class MsgType : std::uint8_t {
  SetupU2Hg = 1,
  SetupHg2Sd = 2,
  PubkeyRequest = 3,
  PubkeyReply = 4,
  DhOffer = 5,
  DhResponse = 6,
  Data = 7,
  Reinit = 8,
};

inline bool valid_msg_type(std::uint8_t t) { return t >= 1 && t <= 8; }

inline const char* to_string(MsgType t) {
  switch (t) {
    case MsgType::SetupU2Hg: return "SETUP_U2HG";
    case MsgType::SetupHg2Sd: return "SETUP_HG2SD";
    case MsgType::PubkeyRequest: return "PUBKEY_REQUEST";
    case MsgType::PubkeyReply: return "PUBKEY_REPLY";
    case MsgType::DhOffer: return "DH_OFFER";
    case MsgType::DhResponse: return "DH_RESPONSE";
    case MsgType::Data: return "DATA";
    case MsgType::Reinit: return "REINIT";
  }
  return "UNKNOWN";
}

struct WireMessage {
  MsgType type = MsgType::SetupU2Hg;
  std::uint32_t session_id = 0;
  std::uint64_t seq = 0;
  std::vector<Bytes> fields;

  bool operator==(const WireMessage&) const = default;
};

inline WireMessage make_message(MsgType type, std::uint32_t session_id, std::uint64_t seq,
                                std::vector<Bytes> fields = {}) {
  if (!valid_msg_type(static_cast<std::uint8_t>(type))) {
    throw ParameterError("make_message: unknown msg_type");
  }
  return WireMessage{type, session_id, seq, std::move(fields)};
}

inline Bytes serialize(const WireMessage& m) {
  if (!valid_msg_type(static_cast<std::uint8_t>(m.type))) {
    throw ParameterError("serialize: unknown msg_type");
  }
  ByteWriter w;
  w.raw(ByteView(kWireMagic));
  w.u8(kWireVersion);
  w.u8(static_cast<std::uint8_t>(m.type));
  w.u32(m.session_id);
  w.u64(m.seq);
  w.u16(static_cast<std::uint16_t>(m.fields.size()));
  for (const Bytes& f : m.fields) w.lp(f);
  return w.take();
}

enum class ParseError : std::uint8_t {
  none = 0,
  bad_magic,
  bad_version,
  bad_msg_type,
  truncated,
  trailing_bytes,
};

inline const char* to_string(ParseError e) {
  switch (e) {
    case ParseError::none: return "none";
    case ParseError::bad_magic: return "bad_magic";
    case ParseError::bad_version: return "bad_version";
    case ParseError::bad_msg_type: return "bad_msg_type";
    case ParseError::truncated: return "truncated";
    case ParseError::trailing_bytes: return "trailing_bytes";
  }
  return "unknown";
}

// Total parser over attacker-controlled input: never reads past declared
// lengths, never allocates more than the buffer can back, classifies every
// malformation.
inline ParseError parse(ByteView data, WireMessage& out) {
  ByteReader r(data);
  ByteView magic;
  if (!r.raw(4, magic)) return ParseError::truncated;
  if (!std::equal(magic.begin(), magic.end(), kWireMagic.begin())) return ParseError::bad_magic;
  std::uint8_t version = 0, type = 0;
  if (!r.u8(version)) return ParseError::truncated;
  if (version != kWireVersion) return ParseError::bad_version;
  if (!r.u8(type)) return ParseError::truncated;
  if (!valid_msg_type(type)) return ParseError::bad_msg_type;
  WireMessage m;
  m.type = static_cast<MsgType>(type);
  if (!r.u32(m.session_id)) return ParseError::truncated;
  if (!r.u64(m.seq)) return ParseError::truncated;
  std::uint16_t field_count = 0;
  if (!r.u16(field_count)) return ParseError::truncated;
  // Each field needs at least its 4-byte length prefix; cap the reserve at
  // what the remaining buffer could possibly hold.
  if (static_cast<std::size_t>(field_count) * 4 > r.remaining()) return ParseError::truncated;
  m.fields.reserve(field_count);
  for (std::uint16_t i = 0; i < field_count; ++i) {
    Bytes field;
    if (!r.lp_copy(field)) return ParseError::truncated;
    m.fields.push_back(std::move(field));
  }
  if (!r.done()) return ParseError::trailing_bytes;
  out = std::move(m);
  return ParseError::none;
}

// --- crc32 (IEEE 802.3, reflected, as in zlib) -------------------------------

inline std::uint32_t crc32(ByteView data) {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (Byte b : data) crc = table[(crc ^ b) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

// --- plaintext frame ---------------------------------------------------------
//
// The unit that gets XOR-encrypted: sequence number as the anti-replay nonce,
// explicit length, and a crc32 so the receiver can recognize whether the pad
// it derived matches the pad the sender used.

struct Frame {
  std::uint64_t seq = 0;
  Bytes payload;

  bool operator==(const Frame&) const = default;
};

inline Bytes frame_pack(std::uint64_t seq, ByteView payload) {
  ByteWriter w;
  w.u64(seq);
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.raw(payload);
  std::uint32_t crc = crc32(w.buffer());
  w.u32(crc);
  return w.take();
}

enum class FrameError : std::uint8_t {
  none = 0,
  too_short,
  length_mismatch,
  bad_crc,
};

inline FrameError frame_unpack(ByteView data, Frame& out) {
  if (data.size() < kFrameOverhead) return FrameError::too_short;
  ByteReader r(data);
  Frame f;
  std::uint32_t len = 0;
  r.u64(f.seq);
  r.u32(len);
  if (static_cast<std::size_t>(len) + kFrameOverhead != data.size()) {
    return FrameError::length_mismatch;
  }
  ByteView payload;
  r.raw(len, payload);
  std::uint32_t crc = 0;
  r.u32(crc);
  if (crc != crc32(data.first(data.size() - 4))) return FrameError::bad_crc;
  f.payload.assign(payload.begin(), payload.end());
  out = std::move(f);
  return FrameError::none;
}

}  // namespace otfdh
