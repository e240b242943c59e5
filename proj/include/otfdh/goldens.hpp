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

#include <string>
#include <utility>
#include <vector>

#include "otfdh/wire.hpp"

// Reference wire vectors: one message of every type with fixed contents. The
// hex dumps shipped in goldens/wire_goldens.txt must match these bit for bit;
// an independent implementation that reproduces the file interoperates.

namespace otfdh {

inline std::vector<std::pair<std::string, WireMessage>> golden_vectors() {
  auto bytes = [](std::initializer_list<int> xs) {
    Bytes out;
    for (int x : xs) out.push_back(static_cast<Byte>(x));
    return out;
  };
  std::vector<std::pair<std::string, WireMessage>> v;
  // Setup ciphertexts are opaque blobs at the wire layer; a counting pattern
  // stands in for them.
  v.emplace_back("setup_u2hg",
                 make_message(MsgType::SetupU2Hg, 1, 0,
                              {bytes({0x00, 0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08,
                                      0x09, 0x0a, 0x0b, 0x0c, 0x0d, 0x0e, 0x0f})}));
  v.emplace_back("setup_hg2sd",
                 make_message(MsgType::SetupHg2Sd, 1, 0,
                              {bytes({0xf0, 0xe1, 0xd2, 0xc3, 0xb4, 0xa5, 0x96, 0x87})}));
  v.emplace_back("pubkey_request", make_message(MsgType::PubkeyRequest, 1, 0));
  // n = 3233, e = 17: the classic toy key
  v.emplace_back("pubkey_reply",
                 make_message(MsgType::PubkeyReply, 1, 0, {bytes({0x0c, 0xa1}), bytes({0x11})}));
  // the worked micro-exchange over (g=5, p=23): x = 8, y = 19
  v.emplace_back("dh_offer", make_message(MsgType::DhOffer, 1, 1, {bytes({0x08})}));
  v.emplace_back("dh_response", make_message(MsgType::DhResponse, 1, 1, {bytes({0x13})}));
  // 0xDEAD xored with pad prefix 0xBEEF
  v.emplace_back("data", make_message(MsgType::Data, 1, 1, {bytes({0x60, 0x42})}));
  v.emplace_back("reinit",
                 make_message(MsgType::Reinit, 2, 0,
                              {bytes({0x11, 0x22, 0x33, 0x44, 0x55, 0x66, 0x77, 0x88, 0x99,
                                      0xaa, 0xbb, 0xcc})}));
  return v;
}

inline std::string golden_file_text() {
  std::string out = "# otfdh wire-format golden vectors (format v1)\n";
  out += "# <name> <hex of serialized message>\n";
  for (const auto& [name, msg] : golden_vectors()) {
    out += name;
    out += ' ';
    out += to_hex(serialize(msg));
    out += '\n';
  }
  return out;
}

}  // namespace otfdh
