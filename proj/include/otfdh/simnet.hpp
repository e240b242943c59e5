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
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "otfdh/roles.hpp"

// Deterministic simulated insecure channel plus pluggable adversaries. A run
// is a pure function of (configuration, seed): logical ticks instead of wall
// clock, explicit sub-streams per component, stable delivery order.

namespace otfdh {

enum class AdversaryKind : std::uint8_t { None, Eavesdrop, Replay, Tamper, Mitm };

inline const char* to_string(AdversaryKind k) {
  switch (k) {
    case AdversaryKind::None: return "none";
    case AdversaryKind::Eavesdrop: return "eavesdrop";
    case AdversaryKind::Replay: return "replay";
    case AdversaryKind::Tamper: return "tamper";
    case AdversaryKind::Mitm: return "mitm";
  }
  return "?";
}

struct CapturedMessage {
  Tick at = 0;
  RoleId from = RoleId::SD;
  RoleId to = RoleId::HG;
  Bytes bytes;
};

struct Injection {
  RoleId from = RoleId::SD;
  RoleId to = RoleId::HG;
  Bytes bytes;
};

struct AdversaryAction {
  std::optional<Bytes> forward;  // nullopt: swallow the message
  std::vector<Injection> injections;
};

// Base class doubles as the passive eavesdropper: records everything, changes
// nothing.
class Adversary {
 public:
  virtual ~Adversary() = default;

  virtual AdversaryKind kind() const { return AdversaryKind::Eavesdrop; }

  virtual AdversaryAction on_send(Tick now, RoleId from, RoleId to, const Bytes& bytes) {
    captured_.push_back(CapturedMessage{now, from, to, bytes});
    return AdversaryAction{bytes, {}};
  }

  // Scheduled traffic of the adversary's own making (replays).
  virtual std::vector<Injection> on_tick(Tick) { return {}; }

  // False while injections are still scheduled; keeps the simulation alive.
  virtual bool idle() const { return true; }

  const std::vector<CapturedMessage>& captured() const { return captured_; }
  std::uint64_t replayed() const { return replayed_; }
  std::uint64_t tampered() const { return tampered_; }
  std::uint64_t substituted() const { return substituted_; }
  std::uint64_t swallowed() const { return swallowed_; }
  virtual const std::vector<Bytes>& recovered_plaintexts() const { return no_plaintexts_; }

 protected:
  std::vector<CapturedMessage> captured_;
  std::uint64_t replayed_ = 0;
  std::uint64_t tampered_ = 0;
  std::uint64_t substituted_ = 0;
  std::uint64_t swallowed_ = 0;

 private:
  std::vector<Bytes> no_plaintexts_;
};

// Re-injects captured traffic of selected types after a fixed delay, in
// capture order.
struct ReplayConfig {
  bool replay_data = true;
  bool replay_offers = true;
  Tick delay = 7;  // long enough that the original exchange has completed
};

class ReplayAdversary : public Adversary {
 public:
  explicit ReplayAdversary(ReplayConfig cfg) : cfg_(cfg) {}

  AdversaryKind kind() const override { return AdversaryKind::Replay; }

  AdversaryAction on_send(Tick now, RoleId from, RoleId to, const Bytes& bytes) override {
    captured_.push_back(CapturedMessage{now, from, to, bytes});
    WireMessage m;
    if (parse(bytes, m) == ParseError::none) {
      const bool match = (m.type == MsgType::Data && cfg_.replay_data) ||
                         (m.type == MsgType::DhOffer && cfg_.replay_offers);
      if (match) scheduled_.push_back(Pending{now + cfg_.delay, from, to, bytes});
    }
    return AdversaryAction{bytes, {}};
  }

  std::vector<Injection> on_tick(Tick now) override {
    std::vector<Injection> out;
    while (!scheduled_.empty() && scheduled_.front().when <= now) {
      Pending p = std::move(scheduled_.front());
      scheduled_.pop_front();
      out.push_back(Injection{p.from, p.to, std::move(p.bytes)});
      ++replayed_;
    }
    return out;
  }

  bool idle() const override { return scheduled_.empty(); }

 private:
  struct Pending {
    Tick when;
    RoleId from, to;
    Bytes bytes;
  };
  ReplayConfig cfg_;
  std::deque<Pending> scheduled_;
};

// Flips one configured bit inside a field of matching in-flight messages.
struct TamperConfig {
  bool target_data = true;
  bool target_setup = false;   // SETUP_U2HG / SETUP_HG2SD
  bool target_reinit = false;
  bool target_offer = false;
  bool target_response = false;
  std::uint32_t field_index = 0;
  std::uint32_t byte_index = 0;  // taken modulo the field length
  std::uint32_t bit_index = 0;
  std::optional<std::uint64_t> only_nth;  // only the n-th matching message
  std::uint64_t max_count = UINT64_MAX;
};

class TamperAdversary : public Adversary {
 public:
  explicit TamperAdversary(TamperConfig cfg) : cfg_(cfg) {}

  AdversaryKind kind() const override { return AdversaryKind::Tamper; }

  AdversaryAction on_send(Tick now, RoleId from, RoleId to, const Bytes& bytes) override {
    captured_.push_back(CapturedMessage{now, from, to, bytes});
    WireMessage m;
    if (parse(bytes, m) != ParseError::none || !matches(m.type)) {
      return AdversaryAction{bytes, {}};
    }
    const std::uint64_t occurrence = seen_++;
    if (cfg_.only_nth && occurrence != *cfg_.only_nth) return AdversaryAction{bytes, {}};
    if (tampered_ >= cfg_.max_count) return AdversaryAction{bytes, {}};
    if (cfg_.field_index >= m.fields.size() || m.fields[cfg_.field_index].empty()) {
      return AdversaryAction{bytes, {}};
    }
    Bytes& field = m.fields[cfg_.field_index];
    field[cfg_.byte_index % field.size()] ^=
        static_cast<Byte>(1u << (cfg_.bit_index % 8));
    ++tampered_;
    return AdversaryAction{serialize(m), {}};
  }

 private:
  bool matches(MsgType t) const {
    switch (t) {
      case MsgType::Data: return cfg_.target_data;
      case MsgType::SetupU2Hg:
      case MsgType::SetupHg2Sd: return cfg_.target_setup;
      case MsgType::Reinit: return cfg_.target_reinit;
      case MsgType::DhOffer: return cfg_.target_offer;
      case MsgType::DhResponse: return cfg_.target_response;
      default: return false;
    }
  }

  TamperConfig cfg_;
  std::uint64_t seen_ = 0;
};

// Dan: holds his own key pair and full protocol logic. Substitutes his public
// key for the gateway's in PUBKEY_REPLY, re-signs his own structural pair into
// SETUP_HG2SD / REINIT, and, once the device talks to him, runs the data-phase
// exchange himself and reads the plaintext. Knows the device's *public* key
// (public keys are not secrets) but neither private key.
struct MitmConfig {
  unsigned dh_bits = 192;
  unsigned rsa_bits = 256;
  bool prefer_prime_g = true;
};

class MitmAdversary : public Adversary {
 public:
  MitmAdversary(MitmConfig cfg, RandomSource rng)
      : cfg_(cfg), rng_(std::move(rng)), keys_(rsa_keygen(cfg.rsa_bits, rng_)) {}

  AdversaryKind kind() const override { return AdversaryKind::Mitm; }

  void learn_sd_pub(RsaPublicKey pub) { sd_pub_ = std::move(pub); }
  const RsaPublicKey& pub() const { return keys_.pub; }
  const std::optional<DhParams>& forged_params() const { return forged_params_; }
  const std::vector<Bytes>& recovered_plaintexts() const override { return plaintexts_; }

  AdversaryAction on_send(Tick now, RoleId from, RoleId to, const Bytes& bytes) override {
    captured_.push_back(CapturedMessage{now, from, to, bytes});
    WireMessage m;
    if (parse(bytes, m) != ParseError::none) return AdversaryAction{bytes, {}};

    if (from == RoleId::HG && to == RoleId::SD) {
      if ((m.type == MsgType::SetupHg2Sd || m.type == MsgType::Reinit) && sd_pub_) {
        return AdversaryAction{forge_signed_params(m), {}};
      }
      if (m.type == MsgType::PubkeyReply) {
        WireMessage fake = make_message(MsgType::PubkeyReply, m.session_id, m.seq,
                                        {to_bytes(keys_.pub.n), to_bytes(keys_.pub.e)});
        ++substituted_;
        return AdversaryAction{serialize(fake), {}};
      }
    }

    if (from == RoleId::SD && to == RoleId::HG && forged_params_) {
      if (m.type == MsgType::DhOffer && m.fields.size() == 1) {
        // Answer the device ourselves; the gateway never sees this exchange.
        BigUint theirs = from_bytes(m.fields[0]);
        if (!degenerate_public_value(theirs, *forged_params_)) {
          DhEphemeral mine = dh_offer(*forged_params_, rng_);
          SharedKey key = dh_combine(mine, theirs);
          pending_.emplace(m.seq, std::move(key));
          WireMessage resp = make_message(MsgType::DhResponse, m.session_id, m.seq,
                                          {to_bytes(mine.public_value)});
          ++swallowed_;
          return AdversaryAction{std::nullopt,
                                 {Injection{RoleId::HG, RoleId::SD, serialize(resp)}}};
        }
      }
      if (m.type == MsgType::Data && m.fields.size() == 1) {
        auto it = pending_.find(m.seq);
        if (it != pending_.end()) {
          SharedKey key = std::move(it->second);
          pending_.erase(it);
          if (m.fields[0].size() <= key.otp.size()) {
            Frame frame;
            if (frame_unpack(xor_otp(m.fields[0], key), frame) == FrameError::none) {
              plaintexts_.push_back(std::move(frame.payload));
            }
          }
          ++swallowed_;
          return AdversaryAction{std::nullopt, {}};
        }
      }
    }
    return AdversaryAction{bytes, {}};
  }

 private:
  Bytes forge_signed_params(const WireMessage& original) {
    if (!forged_params_) {
      forged_params_ = generate_params(cfg_.dh_bits, rng_, cfg_.prefer_prime_g);
    }
    Bytes params_bytes = encode_params(*forged_params_);
    Bytes inner = encode_signed_params_inner(params_bytes, rsa_sign(params_bytes, keys_));
    WireMessage forged = make_message(original.type, original.session_id, original.seq,
                                      {rsa_encrypt(inner, *sd_pub_)});
    ++substituted_;
    return serialize(forged);
  }

  MitmConfig cfg_;
  RandomSource rng_;
  RsaKeyPair keys_;
  std::optional<RsaPublicKey> sd_pub_;
  std::optional<DhParams> forged_params_;
  std::map<std::uint64_t, SharedKey> pending_;
  std::vector<Bytes> plaintexts_;
};

// --- channel -------------------------------------------------------------------

struct ChannelConfig {
  double loss_rate = 0.0;
  Tick loss_after_tick = 0;     // loss applies from this tick on
  std::uint32_t delay_min = 0;  // extra ticks on top of the 1-tick transit
  std::uint32_t delay_max = 0;
};

struct Delivery {
  Tick at = 0;
  std::uint64_t serial = 0;
  RoleId from = RoleId::SD;
  RoleId to = RoleId::HG;
  Bytes bytes;
};

class Channel {
 public:
  Channel(ChannelConfig cfg, RandomSource rng) : cfg_(cfg), rng_(std::move(rng)) {}

  void attach(Adversary* adv) { adversary_ = adv; }

  // Role-origin traffic: adversary hooks first, then loss and delay.
  void send(Tick now, RoleId from, RoleId to, Bytes bytes) {
    ++injected_;
    Bytes wire = std::move(bytes);
    if (adversary_) {
      AdversaryAction action = adversary_->on_send(now, from, to, wire);
      for (Injection& inj : action.injections) {
        inject(now, inj.from, inj.to, std::move(inj.bytes));
      }
      if (!action.forward) {
        ++dropped_adversary_;
        return;
      }
      wire = std::move(*action.forward);
    }
    apply_physics(now, from, to, std::move(wire));
  }

  // Adversary-origin traffic: physics only, no re-capture.
  void inject(Tick now, RoleId from, RoleId to, Bytes bytes) {
    ++injected_;
    apply_physics(now, from, to, std::move(bytes));
  }

  std::vector<Delivery> collect_due(Tick now) {
    std::vector<Delivery> due;
    auto it = queue_.begin();
    while (it != queue_.end()) {
      if (it->at <= now) {
        due.push_back(std::move(*it));
        it = queue_.erase(it);
      } else {
        ++it;
      }
    }
    std::sort(due.begin(), due.end(), [](const Delivery& a, const Delivery& b) {
      return a.at != b.at ? a.at < b.at : a.serial < b.serial;
    });
    delivered_ += due.size();
    return due;
  }

  bool empty() const { return queue_.empty(); }
  std::size_t queued() const { return queue_.size(); }
  std::uint64_t injected() const { return injected_; }
  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t dropped_loss() const { return dropped_loss_; }
  std::uint64_t dropped_adversary() const { return dropped_adversary_; }

 private:
  void apply_physics(Tick now, RoleId from, RoleId to, Bytes bytes) {
    if (cfg_.loss_rate > 0.0 && now >= cfg_.loss_after_tick &&
        rng_.next_unit() < cfg_.loss_rate) {
      ++dropped_loss_;
      return;
    }
    Tick delay = cfg_.delay_max > cfg_.delay_min
                     ? rng_.uniform_range_u64(cfg_.delay_min, cfg_.delay_max)
                     : cfg_.delay_min;
    queue_.push_back(Delivery{now + 1 + delay, serial_++, from, to, std::move(bytes)});
  }

  ChannelConfig cfg_;
  RandomSource rng_;
  Adversary* adversary_ = nullptr;
  std::vector<Delivery> queue_;
  std::uint64_t serial_ = 0;
  std::uint64_t injected_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t dropped_loss_ = 0;
  std::uint64_t dropped_adversary_ = 0;
};

// --- scenario configuration ------------------------------------------------------

enum class DataDirection : std::uint8_t { SdToHg, HgToSd };

struct ScenarioConfig {
  std::string scenario = "honest";
  std::uint64_t seed = 1;
  unsigned dh_bits = 256;
  unsigned rsa_bits = 512;
  unsigned packets = 10;
  unsigned payload_len = 12;
  std::optional<Bytes> payload_fixed;  // overrides generated payloads
  DataDirection direction = DataDirection::SdToHg;
  bool sign_u2hg = true;
  bool preinstall_hg_pub = true;
  bool prefer_prime_g = true;
  bool auto_reinit = false;
  AdversaryKind adversary = AdversaryKind::None;
  ReplayConfig replay;
  TamperConfig tamper;
  double loss_rate = 0.0;
  Tick loss_after_tick = 0;
  std::uint32_t delay_min = 0;
  std::uint32_t delay_max = 0;
  Tick max_ticks = 0;         // 0: derived from packet count
  std::string trace_path;     // used by the CLI, not by Simulation itself
  std::string expect;         // expected verdict label; presets fill this in
};

// --- summary -----------------------------------------------------------------------

struct Summary {
  Tick ticks = 0;
  unsigned packets_requested = 0;
  std::uint64_t payloads_sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t corrupted = 0;
  std::uint64_t rejections = 0;
  std::map<Outcome, std::uint64_t> outcome_counts;
  bool sd_established = false;
  bool hg_established = false;
  bool params_divergence = false;  // both established, same session, different params
  bool params_changed = false;     // current params differ from the user's originals
  std::uint64_t reinits_completed = 0;
  std::uint64_t escalations = 0;
  bool key_reuse = false;
  std::uint64_t keys_used = 0;
  // channel accounting
  std::uint64_t injected = 0;
  std::uint64_t ch_delivered = 0;
  std::uint64_t dropped_loss = 0;
  std::uint64_t dropped_adversary = 0;
  std::uint64_t queued_at_end = 0;
  bool conservation_ok = false;
  // adversary
  std::uint64_t captured = 0;
  std::uint64_t replayed = 0;
  std::uint64_t tampered = 0;
  std::uint64_t substituted = 0;
  std::uint64_t adversary_plaintexts = 0;
  bool adversary_read_payload = false;  // a recovered plaintext equals a sent payload
  bool sd_params_forged = false;        // device params equal the adversary's pair
};

// --- simulation ----------------------------------------------------------------------

class Simulation {
 public:
  explicit Simulation(ScenarioConfig cfg) : cfg_(std::move(cfg)), master_(cfg_.seed) {
    setup_world();
  }

  void run() {
    const Tick limit = cfg_.max_ticks ? cfg_.max_ticks
                                      : 400 + static_cast<Tick>(cfg_.packets) * 50;
    while (tick_ < limit && !finished()) step();
  }

  void step() {
    ++tick_;
    // adversary-scheduled traffic
    if (adversary_) {
      for (Injection& inj : adversary_->on_tick(tick_)) {
        channel_.inject(tick_, inj.from, inj.to, std::move(inj.bytes));
        last_activity_ = tick_;
      }
    }
    // deliveries
    const std::size_t events_before = log_.events.size();
    for (Delivery& d : channel_.collect_due(tick_)) {
      last_activity_ = tick_;
      Role* dest = route(d.to);
      if (!dest) continue;  // traffic addressed to the user is outside the model
      WireMessage m;
      if (parse(d.bytes, m) != ParseError::none) {
        log_.record(Event{tick_, dest->id(), dest->state().phase, dest->state().phase,
                          std::nullopt, 0, Outcome::rejected_decode});
        continue;
      }
      dispatch(*dest, dest->handle(m, tick_));
    }
    // per-tick duties, fixed order
    dispatch(sd(), sd().poll(tick_));
    dispatch(hg(), hg().poll(tick_));
    // out-of-band escalation: a role that failed or ran out of retries asks
    // for re-initialization; the gateway acts if it still can
    for (std::size_t i = events_before; i < log_.events.size(); ++i) {
      if (log_.events[i].outcome == Outcome::escalated && reinit_budget_ > 0 &&
          hg().has_device_key() && hg().state().phase != Phase::Failed) {
        --reinit_budget_;
        ++escalations_served_;
        dispatch(hg(), hg().start_reinit(tick_));
      }
    }
    // mutual-knowledge check, every step
    if (sd().state().phase == Phase::Established && hg().state().phase == Phase::Established &&
        sd().state().session_id == hg().state().session_id &&
        sd().state().params != hg().state().params) {
      params_divergence_ = true;
    }
  }

  bool finished() const {
    if (!channel_.empty()) return false;
    if (adversary_ && !adversary_->idle()) return false;
    if (sd_->quiescent() && hg_->quiescent()) return true;
    return tick_ - last_activity_ > idle_grace_;
  }

  Tick now() const { return tick_; }
  const EventLog& log() const { return log_; }
  SmartDevice& sd() { return *sd_; }
  HomeGateway& hg() { return *hg_; }
  const SmartDevice& sd() const { return *sd_; }
  const HomeGateway& hg() const { return *hg_; }
  Adversary* adversary() { return adversary_.get(); }
  const DhParams& original_params() const { return original_params_; }

  Summary summarize() const {
    Summary s;
    s.ticks = tick_;
    s.packets_requested = cfg_.packets;
    for (const Event& e : log_.events) {
      ++s.outcome_counts[e.outcome];
      if (is_rejection(e.outcome)) ++s.rejections;
      if (e.outcome == Outcome::reinit_accepted) ++s.reinits_completed;
      if (e.outcome == Outcome::escalated) ++s.escalations;
    }
    const Role* sender = cfg_.direction == DataDirection::SdToHg
                             ? static_cast<const Role*>(sd_.get())
                             : static_cast<const Role*>(hg_.get());
    const Role* receiver = cfg_.direction == DataDirection::SdToHg
                               ? static_cast<const Role*>(hg_.get())
                               : static_cast<const Role*>(sd_.get());
    s.payloads_sent = sender->sent_packets().size();
    s.delivered = receiver->delivered().size();
    // duplicates and corruption, matched by (session, seq)
    std::set<std::pair<std::uint32_t, std::uint64_t>> seen;
    std::map<std::pair<std::uint32_t, std::uint64_t>, const PacketRecord*> sent_index;
    for (const PacketRecord& r : sender->sent_packets()) sent_index[{r.session_id, r.seq}] = &r;
    for (const PacketRecord& r : receiver->delivered()) {
      auto key = std::make_pair(r.session_id, r.seq);
      if (!seen.insert(key).second) ++s.duplicates;
      auto it = sent_index.find(key);
      if (it == sent_index.end() || it->second->payload != r.payload) ++s.corrupted;
    }
    // one key, one packet
    for (const Role* role : {static_cast<const Role*>(sd_.get()),
                             static_cast<const Role*>(hg_.get())}) {
      std::set<Bytes> keys(role->key_fingerprints().begin(), role->key_fingerprints().end());
      s.keys_used += role->key_fingerprints().size();
      if (keys.size() != role->key_fingerprints().size()) s.key_reuse = true;
    }
    s.sd_established = sd_->state().phase == Phase::Established;
    s.hg_established = hg_->state().phase == Phase::Established;
    s.params_divergence = params_divergence_;
    s.params_changed = sd_->state().params && *sd_->state().params != original_params_;
    s.injected = channel_.injected();
    s.ch_delivered = channel_.delivered();
    s.dropped_loss = channel_.dropped_loss();
    s.dropped_adversary = channel_.dropped_adversary();
    s.queued_at_end = channel_.queued();
    s.conservation_ok =
        s.injected == s.ch_delivered + s.dropped_loss + s.dropped_adversary + s.queued_at_end;
    if (adversary_) {
      s.captured = adversary_->captured().size();
      s.replayed = adversary_->replayed();
      s.tampered = adversary_->tampered();
      s.substituted = adversary_->substituted();
      const auto& plain = adversary_->recovered_plaintexts();
      s.adversary_plaintexts = plain.size();
      for (const Bytes& p : plain) {
        for (const PacketRecord& r : sender->sent_packets()) {
          if (r.payload == p) {
            s.adversary_read_payload = true;
            break;
          }
        }
      }
      if (auto* mitm = dynamic_cast<const MitmAdversary*>(adversary_.get())) {
        s.sd_params_forged = mitm->forged_params() && sd_->state().params &&
                             *sd_->state().params == *mitm->forged_params();
      }
    }
    return s;
  }

 private:
  void setup_world() {
    RandomSource hg_rng = master_.derive(1);
    RandomSource user_rng = master_.derive(2);
    RandomSource sd_rng = master_.derive(3);
    RandomSource channel_rng = master_.derive(4);
    RandomSource adversary_rng = master_.derive(5);
    RandomSource payload_rng = master_.derive(6);

    RolePolicy policy;
    policy.auto_reinit = cfg_.auto_reinit;
    policy.prefer_prime_g = cfg_.prefer_prime_g;

    RsaKeyPair hg_keys = rsa_keygen(cfg_.rsa_bits, hg_rng);
    hg_ = std::make_unique<HomeGateway>(std::move(hg_keys), std::move(hg_rng), &log_, policy);
    sd_ = std::make_unique<SmartDevice>(std::move(sd_rng), &log_, policy);
    user_ = std::make_unique<UserAgent>(std::move(user_rng));
    hg_->require_setup_signature(cfg_.sign_u2hg);
    hg_->set_user_pub(user_->pub(cfg_.rsa_bits));

    channel_ = Channel(
        ChannelConfig{cfg_.loss_rate, cfg_.loss_after_tick, cfg_.delay_min, cfg_.delay_max},
        std::move(channel_rng));
    switch (cfg_.adversary) {
      case AdversaryKind::None:
        break;
      case AdversaryKind::Eavesdrop:
        adversary_ = std::make_unique<Adversary>();
        break;
      case AdversaryKind::Replay:
        adversary_ = std::make_unique<ReplayAdversary>(cfg_.replay);
        break;
      case AdversaryKind::Tamper:
        adversary_ = std::make_unique<TamperAdversary>(cfg_.tamper);
        break;
      case AdversaryKind::Mitm: {
        MitmConfig mc;
        mc.dh_bits = cfg_.dh_bits;
        mc.rsa_bits = cfg_.rsa_bits;
        mc.prefer_prime_g = cfg_.prefer_prime_g;
        adversary_ = std::make_unique<MitmAdversary>(mc, std::move(adversary_rng));
        break;
      }
    }
    if (adversary_) channel_.attach(adversary_.get());

    SetupConfig setup_cfg{cfg_.dh_bits, cfg_.rsa_bits, cfg_.sign_u2hg, cfg_.preinstall_hg_pub,
                          cfg_.prefer_prime_g};
    UserSetup setup = user_->make_setup(hg_->pub(), setup_cfg, /*session_id=*/1, &log_, tick_);
    original_params_ = setup.params;
    sd_->provision(std::move(setup.record), tick_);
    if (auto* mitm = dynamic_cast<MitmAdversary*>(adversary_.get())) {
      mitm->learn_sd_pub(setup.sd_pub);
    }
    channel_.send(tick_, RoleId::OTTS, RoleId::HG, serialize(setup.msg));
    last_activity_ = tick_;

    Role& sender = cfg_.direction == DataDirection::SdToHg ? static_cast<Role&>(*sd_)
                                                           : static_cast<Role&>(*hg_);
    for (unsigned i = 0; i < cfg_.packets; ++i) {
      Bytes payload =
          cfg_.payload_fixed ? *cfg_.payload_fixed : payload_rng.bytes(cfg_.payload_len);
      sender.queue_payload(std::move(payload));
    }
  }

  Role* route(RoleId to) {
    switch (to) {
      case RoleId::SD: return sd_.get();
      case RoleId::HG: return hg_.get();
      case RoleId::OTTS: return nullptr;
    }
    return nullptr;
  }

  void dispatch(Role& from, std::vector<WireMessage> msgs) {
    for (WireMessage& m : msgs) {
      RoleId to = from.id() == RoleId::SD ? RoleId::HG : RoleId::SD;
      channel_.send(tick_, from.id(), to, serialize(m));
      last_activity_ = tick_;
    }
  }

  ScenarioConfig cfg_;
  RandomSource master_;
  EventLog log_;
  Channel channel_{ChannelConfig{}, RandomSource(0)};
  std::unique_ptr<SmartDevice> sd_;
  std::unique_ptr<HomeGateway> hg_;
  std::unique_ptr<UserAgent> user_;
  std::unique_ptr<Adversary> adversary_;
  DhParams original_params_;
  Tick tick_ = 0;
  Tick last_activity_ = 0;
  Tick idle_grace_ = 48;
  unsigned reinit_budget_ = 3;
  std::uint64_t escalations_served_ = 0;
  bool params_divergence_ = false;
};

}  // namespace otfdh
