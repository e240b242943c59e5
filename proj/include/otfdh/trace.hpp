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
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "otfdh/wire.hpp"

namespace otfdh {

using Tick = std::uint64_t;

enum class RoleId : std::uint8_t { SD, HG, OTTS };

inline const char* to_string(RoleId r) {
  switch (r) {
    case RoleId::SD: return "SD";
    case RoleId::HG: return "HG";
    case RoleId::OTTS: return "OTTS";
  }
  return "?";
}

enum class Phase : std::uint8_t {
  Unprovisioned,
  Provisioned,
  SetupPending,
  Established,
  ReinitPending,
  Failed,
};

inline const char* to_string(Phase p) {
  switch (p) {
    case Phase::Unprovisioned: return "UNPROVISIONED";
    case Phase::Provisioned: return "PROVISIONED";
    case Phase::SetupPending: return "SETUP_PENDING";
    case Phase::Established: return "ESTABLISHED";
    case Phase::ReinitPending: return "REINIT_PENDING";
    case Phase::Failed: return "FAILED";
  }
  return "?";
}

enum class Outcome : std::uint8_t {
  provisioned,
  setup_sent,
  setup_accepted,
  pubkey_requested,
  pubkey_sent,
  pubkey_received,
  established,
  offer_sent,
  retransmit,
  response_sent,
  data_sent,
  delivered,
  reinit_started,
  reinit_accepted,
  escalated,
  rejected_decode,
  rejected_params,
  rejected_signature,
  rejected_stale_session,
  rejected_phase,
  rejected_crc,
  rejected_replay,
  rejected_orphan_data,
  rejected_orphan_response,
  rejected_degenerate_key,
  rejected_size,
  pending_expired,
  failed,
};

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::provisioned: return "provisioned";
    case Outcome::setup_sent: return "setup_sent";
    case Outcome::setup_accepted: return "setup_accepted";
    case Outcome::pubkey_requested: return "pubkey_requested";
    case Outcome::pubkey_sent: return "pubkey_sent";
    case Outcome::pubkey_received: return "pubkey_received";
    case Outcome::established: return "established";
    case Outcome::offer_sent: return "offer_sent";
    case Outcome::retransmit: return "retransmit";
    case Outcome::response_sent: return "response_sent";
    case Outcome::data_sent: return "data_sent";
    case Outcome::delivered: return "delivered";
    case Outcome::reinit_started: return "reinit_started";
    case Outcome::reinit_accepted: return "reinit_accepted";
    case Outcome::escalated: return "escalated";
    case Outcome::rejected_decode: return "rejected_decode";
    case Outcome::rejected_params: return "rejected_params";
    case Outcome::rejected_signature: return "rejected_signature";
    case Outcome::rejected_stale_session: return "rejected_stale_session";
    case Outcome::rejected_phase: return "rejected_phase";
    case Outcome::rejected_crc: return "rejected_crc";
    case Outcome::rejected_replay: return "rejected_replay";
    case Outcome::rejected_orphan_data: return "rejected_orphan_data";
    case Outcome::rejected_orphan_response: return "rejected_orphan_response";
    case Outcome::rejected_degenerate_key: return "rejected_degenerate_key";
    case Outcome::rejected_size: return "rejected_size";
    case Outcome::pending_expired: return "pending_expired";
    case Outcome::failed: return "failed";
  }
  return "?";
}

inline bool is_rejection(Outcome o) {
  switch (o) {
    case Outcome::rejected_decode:
    case Outcome::rejected_params:
    case Outcome::rejected_signature:
    case Outcome::rejected_stale_session:
    case Outcome::rejected_phase:
    case Outcome::rejected_crc:
    case Outcome::rejected_replay:
    case Outcome::rejected_orphan_data:
    case Outcome::rejected_orphan_response:
    case Outcome::rejected_degenerate_key:
    case Outcome::rejected_size:
      return true;
    default:
      return false;
  }
}

// One record per state transition; phase_from == phase_to for events that do
// not move the machine.
struct Event {
  Tick time = 0;
  RoleId role = RoleId::SD;
  Phase phase_from = Phase::Unprovisioned;
  Phase phase_to = Phase::Unprovisioned;
  std::optional<MsgType> msg_type;
  std::uint64_t seq = 0;
  Outcome outcome = Outcome::provisioned;
};

struct EventLog {
  std::vector<Event> events;

  void record(Event e) { events.push_back(std::move(e)); }
};

// All values are enum names or integers, so the record can be emitted
// directly without an escaping pass.
inline std::string to_json(const Event& e) {
  std::string out = "{\"time\":" + std::to_string(e.time);
  out += ",\"role\":\"";
  out += to_string(e.role);
  out += "\",\"phase_from\":\"";
  out += to_string(e.phase_from);
  out += "\",\"phase_to\":\"";
  out += to_string(e.phase_to);
  out += "\",\"msg_type\":";
  if (e.msg_type) {
    out += "\"";
    out += to_string(*e.msg_type);
    out += "\"";
  } else {
    out += "null";
  }
  out += ",\"seq\":" + std::to_string(e.seq);
  out += ",\"outcome\":\"";
  out += to_string(e.outcome);
  out += "\"}";
  return out;
}

inline std::string to_jsonl(const EventLog& log) {
  std::string out;
  for (const Event& e : log.events) {
    out += to_json(e);
    out += '\n';
  }
  return out;
}

inline bool write_jsonl(const EventLog& log, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) return false;
  f << to_jsonl(log);
  return static_cast<bool>(f);
}

}  // namespace otfdh
