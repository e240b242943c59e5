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

#include <deque>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "otfdh/dh.hpp"
#include "otfdh/errors.hpp"
#include "otfdh/numtheory.hpp"
#include "otfdh/rsa.hpp"
#include "otfdh/trace.hpp"
#include "otfdh/wire.hpp"

// The three protocol parties:
//
//   SD   (smart device)    the constrained endpoint
//   HG   (home gateway)    the capable local server
//   OTTS (the end user)    trusted once, at configuration time
//
// Setup: the user generates the device key pair and the structural pair
// (g, p), writes the private key into the device directly, and sends
// (g, p) plus the device public key to the gateway encrypted under the
// gateway key. The gateway answers with (g, p) signed by itself, encrypted
// under the device key; the device accepts when the recovered signature
// matches the received pair.
//
// Data: every packet runs its own ephemeral exchange (OFFER carries x,
// RESPONSE carries y, DATA carries the frame XOR-encrypted with the derived
// one-time pad). Keys are never reused across packets.
//
// Re-initialization: the gateway mints a fresh (g, p), signs it, and sends it
// encrypted under the device key it already knows.

namespace otfdh {

// --- protocol payload encodings ----------------------------------------------

inline Bytes encode_params(const DhParams& params) {
  ByteWriter w;
  w.lp(to_bytes(params.g));
  w.lp(to_bytes(params.p));
  return w.take();
}

inline std::optional<DhParams> decode_params(ByteView data) {
  ByteReader r(data);
  ByteView g, p;
  if (!r.lp(g) || !r.lp(p) || !r.done()) return std::nullopt;
  return DhParams{from_bytes(g), from_bytes(p)};
}

inline Bytes encode_pubkey(const RsaPublicKey& k) {
  ByteWriter w;
  w.lp(to_bytes(k.n));
  w.lp(to_bytes(k.e));
  return w.take();
}

inline std::optional<RsaPublicKey> decode_pubkey(ByteView data) {
  ByteReader r(data);
  ByteView n, e;
  if (!r.lp(n) || !r.lp(e) || !r.done()) return std::nullopt;
  return RsaPublicKey{from_bytes(n), from_bytes(e)};
}

// (g,p) || device public key: the payload the user sends to the gateway and
// the unit the optional user signature covers.
inline Bytes encode_setup_core(const DhParams& params, const RsaPublicKey& sd_pub) {
  ByteWriter w;
  w.raw(encode_params(params));
  w.raw(encode_pubkey(sd_pub));
  return w.take();
}

inline bool decode_setup_core(ByteView data, DhParams& params, RsaPublicKey& sd_pub) {
  ByteReader r(data);
  ByteView g, p, n, e;
  if (!r.lp(g) || !r.lp(p) || !r.lp(n) || !r.lp(e) || !r.done()) return false;
  params = DhParams{from_bytes(g), from_bytes(p)};
  sd_pub = RsaPublicKey{from_bytes(n), from_bytes(e)};
  return true;
}

// Plaintext of SETUP_U2HG before encryption under the gateway key:
//   lp(core) | has_sig(1) | [lp(signature over core)]
inline Bytes encode_setup_u2hg_inner(ByteView core, const Bytes* signature) {
  ByteWriter w;
  w.lp(core);
  w.u8(signature ? 1 : 0);
  if (signature) w.lp(*signature);
  return w.take();
}

inline bool decode_setup_u2hg_inner(ByteView data, Bytes& core, std::optional<Bytes>& signature) {
  ByteReader r(data);
  std::uint8_t has_sig = 0;
  if (!r.lp_copy(core) || !r.u8(has_sig)) return false;
  if (has_sig > 1) return false;
  signature.reset();
  if (has_sig) {
    Bytes sig;
    if (!r.lp_copy(sig)) return false;
    signature = std::move(sig);
  }
  return r.done();
}

// Plaintext of SETUP_HG2SD and REINIT before encryption under the device key:
//   lp(params_bytes) | lp(signature over params_bytes)
inline Bytes encode_signed_params_inner(ByteView params_bytes, ByteView signature) {
  ByteWriter w;
  w.lp(params_bytes);
  w.lp(signature);
  return w.take();
}

inline bool decode_signed_params_inner(ByteView data, Bytes& params_bytes, Bytes& signature) {
  ByteReader r(data);
  return r.lp_copy(params_bytes) && r.lp_copy(signature) && r.done();
}

// --- role state ---------------------------------------------------------------

struct SetupConfig {
  unsigned dh_bits = 256;
  unsigned rsa_bits = 512;
  bool sign_u2hg = true;          // append the user signature inside SETUP_U2HG
  bool preinstall_hg_pub = true;  // write the gateway public key into the device
  bool prefer_prime_g = true;     // pick a prime primitive root
};

// What the user writes into the device over the offline interface.
struct ProvisioningRecord {
  RsaKeyPair sd_priv;
  std::optional<RsaPublicKey> hg_pub;  // present in preinstalled mode
};

struct RoleState {
  RoleId role = RoleId::SD;
  Phase phase = Phase::Unprovisioned;
  std::optional<DhParams> params;
  std::optional<RsaPublicKey> peer_pub;
  std::uint32_t session_id = 0;
  std::uint64_t send_seq = 0;
  std::uint64_t recv_seq = 0;
};

struct PacketRecord {
  std::uint32_t session_id = 0;
  std::uint64_t seq = 0;
  Bytes payload;
};

struct RolePolicy {
  Tick response_timeout = 8;  // ticks to wait before retransmitting
  unsigned max_retries = 3;   // retransmissions before escalation
  Tick pending_ttl = 64;      // receiver-side lifetime of an unanswered offer
  bool auto_reinit = false;   // gateway: reinitialize on integrity failure
  bool prefer_prime_g = true;
};

// --- shared data-phase machinery ----------------------------------------------

class Role {
 public:
  Role(RoleId id, RandomSource rng, EventLog* log, RolePolicy policy)
      : rng_(std::move(rng)), log_(log), policy_(policy) {
    st_.role = id;
  }
  virtual ~Role() = default;

  Role(const Role&) = delete;
  Role& operator=(const Role&) = delete;

  const RoleState& state() const { return st_; }
  RoleId id() const { return st_.role; }

  // Hand one delivered message to the role; returns messages to transmit.
  std::vector<WireMessage> handle(const WireMessage& m, Tick now) {
    switch (m.type) {
      case MsgType::DhOffer: return handle_offer(m, now);
      case MsgType::DhResponse: return handle_response(m, now);
      case MsgType::Data: return handle_data(m, now);
      default: return handle_control(m, now);
    }
  }

  // Called once per tick: drives timeouts, retransmissions and the start of
  // the next packet exchange.
  std::vector<WireMessage> poll(Tick now) {
    std::vector<WireMessage> out;
    expire_pending(now);
    if (st_.phase == Phase::Established) {
      if (!pending_offer_ && !send_queue_.empty()) {
        start_next_packet(out, now);
      } else if (pending_offer_ && now >= pending_offer_->sent_at + policy_.response_timeout) {
        if (pending_offer_->retries < policy_.max_retries) {
          ++pending_offer_->retries;
          pending_offer_->sent_at = now;
          note(MsgType::DhOffer, pending_offer_->seq, Outcome::retransmit, now);
          out.push_back(pending_offer_->offer_msg);
        } else {
          // No response within budget: give the payload back to the queue and
          // ask for re-initialization.
          send_queue_.push_front(pending_offer_->payload);
          pending_offer_.reset();
          set_phase(Phase::ReinitPending, std::nullopt, 0, Outcome::escalated, now);
        }
      }
    }
    control_poll(out, now);
    return out;
  }

  // Enqueue application payload for transmission. Oversize payloads are split
  // into pad-sized fragments, each carried by its own exchange.
  void queue_payload(Bytes payload) {
    if (st_.phase == Phase::Established && !payload.empty() && usable_payload() == 0) {
      throw SizeError("queue_payload: pad too small for any payload under current params");
    }
    send_queue_.push_back(std::move(payload));
  }

  bool quiescent() const {
    return send_queue_.empty() && !pending_offer_ && !control_busy();
  }

  // Instrumentation for scenarios and tests.
  const std::vector<PacketRecord>& delivered() const { return delivered_; }
  const std::vector<PacketRecord>& sent_packets() const { return sent_; }
  const std::vector<Bytes>& key_fingerprints() const { return key_log_; }
  std::uint64_t integrity_failures() const { return integrity_failures_; }

 protected:
  virtual std::vector<WireMessage> handle_control(const WireMessage& m, Tick now) = 0;
  virtual void control_poll(std::vector<WireMessage>&, Tick) {}
  virtual bool control_busy() const { return false; }

  // Phase/session gate for OFFER/RESPONSE/DATA. The gateway overrides this to
  // treat the first valid offer of a session as confirmation of a pending
  // setup or re-initialization.
  virtual bool accept_data_message(const WireMessage& m, Tick now) {
    if (st_.phase != Phase::Established) {
      note(m.type, m.seq, Outcome::rejected_phase, now);
      return false;
    }
    if (m.session_id != st_.session_id) {
      note(m.type, m.seq, Outcome::rejected_stale_session, now);
      return false;
    }
    return true;
  }

  // Gateway hook: integrity failure seen by the receiver (bad crc, oversize
  // ciphertext, degenerate offer value).
  virtual std::vector<WireMessage> on_integrity_failure(Tick) { return {}; }

  std::size_t usable_payload() const {
    std::size_t width = otp_width(*st_.params);
    return width >= kFrameOverhead ? width - kFrameOverhead : 0;
  }

  void start_next_packet(std::vector<WireMessage>& out, Tick now) {
    Bytes payload = std::move(send_queue_.front());
    send_queue_.pop_front();
    const std::size_t limit = usable_payload();
    if (otp_width(*st_.params) < kFrameOverhead || (!payload.empty() && limit == 0)) {
      // Even an empty frame does not fit under these params.
      note(MsgType::Data, 0, Outcome::rejected_size, now);
      return;
    }
    if (payload.size() > limit) {
      // Keep the head fragment, push the rest back in order.
      Bytes rest(payload.begin() + static_cast<std::ptrdiff_t>(limit), payload.end());
      payload.resize(limit);
      send_queue_.push_front(std::move(rest));
    }
    const std::uint64_t seq = ++st_.send_seq;
    DhEphemeral eph = dh_offer(*st_.params, rng_);
    WireMessage offer =
        make_message(MsgType::DhOffer, st_.session_id, seq, {to_bytes(eph.public_value)});
    pending_offer_ = PendingOffer{seq, std::move(eph), std::move(payload), 0, now, offer};
    note(MsgType::DhOffer, seq, Outcome::offer_sent, now);
    out.push_back(std::move(offer));
  }

  std::vector<WireMessage> handle_offer(const WireMessage& m, Tick now) {
    if (!accept_data_message(m, now)) return {};
    if (m.fields.size() != 1) {
      note(m.type, m.seq, Outcome::rejected_decode, now);
      return {};
    }
    if (auto it = pending_keys_.find(m.seq); it != pending_keys_.end()) {
      // Retransmitted offer for an exchange still in flight: repeat the same
      // response so both sides keep deriving the same key.
      note(MsgType::DhResponse, m.seq, Outcome::retransmit, now);
      return {it->second.response_msg};
    }
    BigUint theirs = from_bytes(m.fields[0]);
    if (degenerate_public_value(theirs, *st_.params)) {
      note(m.type, m.seq, Outcome::rejected_degenerate_key, now);
      ++integrity_failures_;
      return on_integrity_failure(now);
    }
    DhEphemeral mine = dh_offer(*st_.params, rng_);
    SharedKey key = dh_combine(mine, theirs);
    WireMessage resp =
        make_message(MsgType::DhResponse, st_.session_id, m.seq, {to_bytes(mine.public_value)});
    pending_keys_.emplace(m.seq, PendingKey{std::move(key), now, resp});
    note(MsgType::DhResponse, m.seq, Outcome::response_sent, now);
    return {resp};
  }

  std::vector<WireMessage> handle_response(const WireMessage& m, Tick now) {
    if (!accept_data_message(m, now)) return {};
    if (!pending_offer_ || pending_offer_->seq != m.seq || m.fields.size() != 1) {
      note(m.type, m.seq, Outcome::rejected_orphan_response, now);
      return {};
    }
    BigUint theirs = from_bytes(m.fields[0]);
    if (degenerate_public_value(theirs, *st_.params)) {
      // Leave the offer pending; the timeout path retries or escalates.
      note(m.type, m.seq, Outcome::rejected_degenerate_key, now);
      ++integrity_failures_;
      return {};
    }
    SharedKey key = dh_combine(pending_offer_->eph, theirs);
    Bytes frame = frame_pack(m.seq, pending_offer_->payload);
    Bytes ciphertext = xor_otp(frame, key);
    WireMessage data = make_message(MsgType::Data, st_.session_id, m.seq, {std::move(ciphertext)});
    key_log_.push_back(key.otp);
    sent_.push_back(PacketRecord{st_.session_id, m.seq, std::move(pending_offer_->payload)});
    pending_offer_.reset();  // one key, one packet
    note(MsgType::Data, m.seq, Outcome::data_sent, now);
    return {data};
  }

  std::vector<WireMessage> handle_data(const WireMessage& m, Tick now) {
    if (!accept_data_message(m, now)) return {};
    if (m.fields.size() != 1) {
      note(m.type, m.seq, Outcome::rejected_decode, now);
      return {};
    }
    auto it = pending_keys_.find(m.seq);
    if (it == pending_keys_.end()) {
      note(m.type, m.seq, Outcome::rejected_orphan_data, now);
      return {};
    }
    PendingKey pk = std::move(it->second);
    pending_keys_.erase(it);  // consumed either way: one key, one packet
    key_log_.push_back(pk.key.otp);
    if (m.fields[0].size() > pk.key.otp.size()) {
      note(m.type, m.seq, Outcome::rejected_size, now);
      ++integrity_failures_;
      return on_integrity_failure(now);
    }
    Bytes plain = xor_otp(m.fields[0], pk.key);
    Frame frame;
    if (frame_unpack(plain, frame) != FrameError::none || frame.seq != m.seq) {
      // A replayed or tampered ciphertext decrypts under the wrong pad and is
      // not recognized.
      note(m.type, m.seq, Outcome::rejected_crc, now);
      ++integrity_failures_;
      return on_integrity_failure(now);
    }
    if (frame.seq <= st_.recv_seq) {
      note(m.type, m.seq, Outcome::rejected_replay, now);
      return {};
    }
    st_.recv_seq = frame.seq;
    delivered_.push_back(PacketRecord{st_.session_id, frame.seq, std::move(frame.payload)});
    note(m.type, m.seq, Outcome::delivered, now);
    return {};
  }

  // Adopt a session (initial setup or re-initialization): new params, reset
  // counters, drop per-session state, put any interrupted payload back.
  void start_session(DhParams params, std::uint32_t session, std::optional<MsgType> via,
                     Outcome outcome, Tick now) {
    st_.params = std::move(params);
    st_.session_id = session;
    st_.send_seq = 0;
    st_.recv_seq = 0;
    pending_keys_.clear();
    if (pending_offer_) {
      send_queue_.push_front(std::move(pending_offer_->payload));
      pending_offer_.reset();
    }
    set_phase(Phase::Established, via, 0, outcome, now);
  }

  void set_phase(Phase to, std::optional<MsgType> msg, std::uint64_t seq, Outcome outcome,
                 Tick now) {
    log_->record(Event{now, st_.role, st_.phase, to, msg, seq, outcome});
    st_.phase = to;
  }

  void note(std::optional<MsgType> msg, std::uint64_t seq, Outcome outcome, Tick now) {
    log_->record(Event{now, st_.role, st_.phase, st_.phase, msg, seq, outcome});
  }

  void expire_pending(Tick now) {
    for (auto it = pending_keys_.begin(); it != pending_keys_.end();) {
      if (now >= it->second.created + policy_.pending_ttl) {
        note(MsgType::DhOffer, it->first, Outcome::pending_expired, now);
        it = pending_keys_.erase(it);
      } else {
        ++it;
      }
    }
  }

  struct PendingOffer {
    std::uint64_t seq = 0;
    DhEphemeral eph;
    Bytes payload;
    unsigned retries = 0;
    Tick sent_at = 0;
    WireMessage offer_msg;
  };
  struct PendingKey {
    SharedKey key;
    Tick created = 0;
    WireMessage response_msg;
  };

  RoleState st_;
  RandomSource rng_;
  EventLog* log_;
  RolePolicy policy_;

  std::deque<Bytes> send_queue_;
  std::optional<PendingOffer> pending_offer_;
  std::map<std::uint64_t, PendingKey> pending_keys_;

  std::vector<PacketRecord> delivered_;
  std::vector<PacketRecord> sent_;
  std::vector<Bytes> key_log_;
  std::uint64_t integrity_failures_ = 0;
};

// --- smart device ---------------------------------------------------------------

class SmartDevice : public Role {
 public:
  SmartDevice(RandomSource rng, EventLog* log, RolePolicy policy = {})
      : Role(RoleId::SD, std::move(rng), log, policy) {}

  // The user's direct write over the offline interface.
  void provision(ProvisioningRecord record, Tick now) {
    prov_ = std::move(record);
    learned_hg_pub_.reset();
    pending_setup_.reset();
    st_.peer_pub = prov_->hg_pub;
    set_phase(Phase::Provisioned, std::nullopt, 0, Outcome::provisioned, now);
  }

  bool provisioned() const { return prov_.has_value(); }

 protected:
  std::vector<WireMessage> handle_control(const WireMessage& m, Tick now) override {
    switch (m.type) {
      case MsgType::SetupHg2Sd:
      case MsgType::Reinit:
        return handle_signed_params(m, now);
      case MsgType::PubkeyReply:
        return handle_pubkey_reply(m, now);
      default:
        note(m.type, m.seq, Outcome::rejected_phase, now);
        return {};
    }
  }

  void control_poll(std::vector<WireMessage>& out, Tick now) override {
    if (!pending_setup_ || !awaiting_pubkey_) return;
    if (now < pubkey_requested_at_ + policy_.response_timeout) return;
    if (pubkey_retries_ < policy_.max_retries) {
      ++pubkey_retries_;
      pubkey_requested_at_ = now;
      note(MsgType::PubkeyRequest, 0, Outcome::retransmit, now);
      out.push_back(make_message(MsgType::PubkeyRequest, pending_setup_->session, 0));
    } else {
      pending_setup_.reset();
      awaiting_pubkey_ = false;
      set_phase(Phase::Failed, MsgType::PubkeyRequest, 0, Outcome::failed, now);
    }
  }

  bool control_busy() const override { return pending_setup_.has_value(); }

 private:
  struct PendingSetup {
    MsgType origin = MsgType::SetupHg2Sd;
    std::uint32_t session = 0;
    Bytes params_bytes;
    Bytes signature;
  };

  std::vector<WireMessage> handle_signed_params(const WireMessage& m, Tick now) {
    if (!prov_) {
      note(m.type, m.seq, Outcome::rejected_phase, now);
      return {};
    }
    const bool is_reinit = m.type == MsgType::Reinit;
    const bool session_ok = is_reinit ? m.session_id == st_.session_id + 1
                                      : m.session_id > st_.session_id;
    if (!session_ok) {
      note(m.type, m.seq, Outcome::rejected_stale_session, now);
      return {};
    }
    if (m.fields.size() != 1) {
      note(m.type, m.seq, Outcome::rejected_decode, now);
      return {};
    }
    auto inner = rsa_decrypt(m.fields[0], prov_->sd_priv);
    Bytes params_bytes, signature;
    if (!inner || !decode_signed_params_inner(*inner, params_bytes, signature)) {
      set_phase(Phase::Failed, m.type, m.seq, Outcome::rejected_decode, now);
      return {};
    }
    PendingSetup ps{m.type, m.session_id, std::move(params_bytes), std::move(signature)};
    const RsaPublicKey* hg_pub = known_hg_pub();
    if (hg_pub) {
      verify_and_commit(ps, *hg_pub, now);
      return {};
    }
    // Paper-literal mode: the device has no gateway key yet and requests it
    // over the same insecure channel it is trying to authenticate.
    pending_setup_ = std::move(ps);
    awaiting_pubkey_ = true;
    pubkey_requested_at_ = now;
    pubkey_retries_ = 0;
    set_phase(Phase::SetupPending, MsgType::PubkeyRequest, 0, Outcome::pubkey_requested, now);
    return {make_message(MsgType::PubkeyRequest, pending_setup_->session, 0)};
  }

  std::vector<WireMessage> handle_pubkey_reply(const WireMessage& m, Tick now) {
    if (!pending_setup_ || !awaiting_pubkey_) {
      note(m.type, m.seq, Outcome::rejected_phase, now);
      return {};
    }
    if (m.session_id != pending_setup_->session) {
      note(m.type, m.seq, Outcome::rejected_stale_session, now);
      return {};
    }
    if (m.fields.size() != 2) {
      note(m.type, m.seq, Outcome::rejected_decode, now);
      return {};
    }
    learned_hg_pub_ = RsaPublicKey{from_bytes(m.fields[0]), from_bytes(m.fields[1])};
    awaiting_pubkey_ = false;
    note(m.type, m.seq, Outcome::pubkey_received, now);
    PendingSetup ps = std::move(*pending_setup_);
    pending_setup_.reset();
    verify_and_commit(ps, *learned_hg_pub_, now);
    return {};
  }

  void verify_and_commit(const PendingSetup& ps, const RsaPublicKey& hg_pub, Tick now) {
    // The authentication check: recover the signed pair with the gateway key
    // and require byte equality with the received pair.
    if (!rsa_verify(ps.params_bytes, ps.signature, hg_pub)) {
      set_phase(Phase::Failed, ps.origin, 0, Outcome::rejected_signature, now);
      note(ps.origin, 0, Outcome::escalated, now);
      return;
    }
    auto params = decode_params(ps.params_bytes);
    if (!params || validate_params(*params) != ParamsCheck::ok) {
      set_phase(Phase::Failed, ps.origin, 0, Outcome::rejected_params, now);
      return;
    }
    st_.peer_pub = hg_pub;
    start_session(std::move(*params), ps.session, ps.origin,
                  ps.origin == MsgType::Reinit ? Outcome::reinit_accepted : Outcome::established,
                  now);
  }

  const RsaPublicKey* known_hg_pub() const {
    if (prov_ && prov_->hg_pub) return &*prov_->hg_pub;
    if (learned_hg_pub_) return &*learned_hg_pub_;
    return nullptr;
  }

  std::optional<ProvisioningRecord> prov_;
  std::optional<RsaPublicKey> learned_hg_pub_;
  std::optional<PendingSetup> pending_setup_;
  bool awaiting_pubkey_ = false;
  Tick pubkey_requested_at_ = 0;
  unsigned pubkey_retries_ = 0;
};

// --- home gateway ----------------------------------------------------------------

class HomeGateway : public Role {
 public:
  HomeGateway(RsaKeyPair keys, RandomSource rng, EventLog* log, RolePolicy policy = {})
      : Role(RoleId::HG, std::move(rng), log, policy), keys_(std::move(keys)) {
    st_.phase = Phase::Provisioned;
  }

  const RsaPublicKey& pub() const { return keys_.pub; }
  void set_user_pub(RsaPublicKey pub) { user_pub_ = std::move(pub); }
  void require_setup_signature(bool require) { require_u2hg_sig_ = require; }
  bool has_device_key() const { return sd_pub_.has_value(); }

  // Mint a fresh structural pair and offer it to the device, signed. Valid
  // only after a completed setup taught the gateway the device key. The
  // protocol has no acknowledgment message, so the gateway adopts the new
  // session immediately and retransmits the offer until traffic under the new
  // session confirms it.
  std::vector<WireMessage> start_reinit(Tick now) {
    if (!sd_pub_ || !st_.params) {
      throw ProtocolError("start_reinit: no completed setup to reinitialize");
    }
    if (staged_) return {};  // one re-initialization in flight at a time
    const unsigned bits = bit_length(st_.params->p);
    DhParams params = generate_params(bits, rng_, policy_.prefer_prime_g);
    const std::uint32_t session = st_.session_id + 1;
    Bytes params_bytes = encode_params(params);
    Bytes inner = encode_signed_params_inner(params_bytes, rsa_sign(params_bytes, keys_));
    WireMessage msg =
        make_message(MsgType::Reinit, session, 0, {rsa_encrypt(inner, *sd_pub_)});
    staged_ = StagedReinit{msg, now, 0};
    start_session(std::move(params), session, MsgType::Reinit, Outcome::reinit_started, now);
    return {std::move(msg)};
  }

 protected:
  std::vector<WireMessage> handle_control(const WireMessage& m, Tick now) override {
    switch (m.type) {
      case MsgType::SetupU2Hg:
        return handle_setup(m, now);
      case MsgType::PubkeyRequest:
        note(m.type, m.seq, Outcome::pubkey_sent, now);
        return {make_message(MsgType::PubkeyReply, m.session_id, 0,
                             {to_bytes(keys_.pub.n), to_bytes(keys_.pub.e)})};
      default:
        note(m.type, m.seq, Outcome::rejected_phase, now);
        return {};
    }
  }

  bool accept_data_message(const WireMessage& m, Tick now) override {
    // Traffic under the new session confirms a pending re-initialization; the
    // device only sends after its signature check passed.
    if (staged_ && m.session_id == st_.session_id) staged_.reset();
    return Role::accept_data_message(m, now);
  }

  std::vector<WireMessage> on_integrity_failure(Tick now) override {
    if (!policy_.auto_reinit || st_.phase != Phase::Established || !sd_pub_) return {};
    return start_reinit(now);
  }

  void control_poll(std::vector<WireMessage>& out, Tick now) override {
    if (!staged_) return;
    if (now < staged_->sent_at + policy_.response_timeout) return;
    if (staged_->retries < policy_.max_retries) {
      ++staged_->retries;
      staged_->sent_at = now;
      note(MsgType::Reinit, 0, Outcome::retransmit, now);
      out.push_back(staged_->msg);
    } else {
      // The device never answered; stop retransmitting and let the data path
      // escalate again if it is still unreachable.
      staged_.reset();
      note(MsgType::Reinit, 0, Outcome::failed, now);
    }
  }

  bool control_busy() const override { return staged_.has_value(); }

 private:
  std::vector<WireMessage> handle_setup(const WireMessage& m, Tick now) {
    if (m.session_id <= last_setup_session_) {
      note(m.type, m.seq, Outcome::rejected_stale_session, now);
      return {};
    }
    if (m.fields.size() != 1) {
      note(m.type, m.seq, Outcome::rejected_decode, now);
      return {};
    }
    auto inner = rsa_decrypt(m.fields[0], keys_);
    Bytes core;
    std::optional<Bytes> signature;
    if (!inner || !decode_setup_u2hg_inner(*inner, core, signature)) {
      set_phase(Phase::Failed, m.type, m.seq, Outcome::rejected_decode, now);
      return {};
    }
    if (require_u2hg_sig_ || signature) {
      const bool sig_ok =
          signature && user_pub_ && rsa_verify(core, *signature, *user_pub_);
      if (!sig_ok) {
        set_phase(Phase::Failed, m.type, m.seq, Outcome::rejected_signature, now);
        return {};
      }
    }
    DhParams params;
    RsaPublicKey sd_pub;
    if (!decode_setup_core(core, params, sd_pub)) {
      set_phase(Phase::Failed, m.type, m.seq, Outcome::rejected_decode, now);
      return {};
    }
    if (validate_params(params) != ParamsCheck::ok) {
      set_phase(Phase::Failed, m.type, m.seq, Outcome::rejected_params, now);
      return {};
    }
    last_setup_session_ = m.session_id;
    sd_pub_ = std::move(sd_pub);
    st_.peer_pub = sd_pub_;
    staged_.reset();
    note(m.type, m.seq, Outcome::setup_accepted, now);

    Bytes params_bytes = encode_params(params);
    Bytes reply_inner = encode_signed_params_inner(params_bytes, rsa_sign(params_bytes, keys_));
    WireMessage reply = make_message(MsgType::SetupHg2Sd, m.session_id, 0,
                                     {rsa_encrypt(reply_inner, *sd_pub_)});
    start_session(std::move(params), m.session_id, MsgType::SetupHg2Sd, Outcome::setup_sent,
                  now);
    return {std::move(reply)};
  }

  struct StagedReinit {
    WireMessage msg;
    Tick sent_at = 0;
    unsigned retries = 0;
  };

  RsaKeyPair keys_;
  std::optional<RsaPublicKey> user_pub_;
  std::optional<RsaPublicKey> sd_pub_;
  bool require_u2hg_sig_ = false;
  std::uint32_t last_setup_session_ = 0;
  std::optional<StagedReinit> staged_;
};

// --- the user (one-time trusted server) -------------------------------------------

struct UserSetup {
  ProvisioningRecord record;  // written into the device directly
  WireMessage msg;            // SETUP_U2HG for the gateway
  DhParams params;            // kept here for scenario bookkeeping only
  RsaPublicKey sd_pub;
};

class UserAgent {
 public:
  explicit UserAgent(RandomSource rng) : rng_(std::move(rng)) {}

  // The user's own pair, for the optional signature inside SETUP_U2HG. The
  // gateway is assumed to know this key through the protected user<->gateway
  // relationship.
  const RsaPublicKey& pub(unsigned rsa_bits) {
    ensure_keys(rsa_bits);
    return keys_->pub;
  }

  UserSetup make_setup(const RsaPublicKey& hg_pub, const SetupConfig& cfg,
                       std::uint32_t session_id, EventLog* log, Tick now) {
    ensure_keys(cfg.rsa_bits);
    RsaKeyPair sd_keys = rsa_keygen(cfg.rsa_bits, rng_);
    DhParams params = generate_params(cfg.dh_bits, rng_, cfg.prefer_prime_g);

    Bytes core = encode_setup_core(params, sd_keys.pub);
    std::optional<Bytes> signature;
    if (cfg.sign_u2hg) signature = rsa_sign(core, *keys_);
    Bytes inner = encode_setup_u2hg_inner(core, signature ? &*signature : nullptr);
    WireMessage msg =
        make_message(MsgType::SetupU2Hg, session_id, 0, {rsa_encrypt(inner, hg_pub)});

    ProvisioningRecord record{sd_keys, std::nullopt};
    if (cfg.preinstall_hg_pub) record.hg_pub = hg_pub;
    if (log) {
      log->record(Event{now, RoleId::OTTS, Phase::Provisioned, Phase::Provisioned,
                        MsgType::SetupU2Hg, 0, Outcome::setup_sent});
    }
    return UserSetup{std::move(record), std::move(msg), std::move(params), sd_keys.pub};
  }

 private:
  void ensure_keys(unsigned rsa_bits) {
    if (!keys_) keys_ = rsa_keygen(rsa_bits, rng_);
  }

  RandomSource rng_;
  std::optional<RsaKeyPair> keys_;
};

}  // namespace otfdh
