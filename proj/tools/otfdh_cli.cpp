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

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "otfdh/goldens.hpp"
#include "otfdh/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

void print_summary(const otfdh::ScenarioConfig& cfg, const otfdh::Summary& s,
                   const otfdh::Verdict& v) {
  std::cout << "scenario: " << cfg.scenario << "  seed: " << cfg.seed
            << "  dh-bits: " << cfg.dh_bits << "  rsa-bits: " << cfg.rsa_bits << "\n";
  std::cout << "ticks: " << s.ticks << "  packets: " << s.packets_requested
            << "  payloads sent: " << s.payloads_sent << "  delivered: " << s.delivered << "\n";
  std::cout << "rejections: " << s.rejections;
  if (s.rejections > 0) {
    std::cout << " (";
    bool first = true;
    for (const auto& [outcome, count] : s.outcome_counts) {
      if (!otfdh::is_rejection(outcome)) continue;
      if (!first) std::cout << ' ';
      std::cout << otfdh::to_string(outcome) << "=" << count;
      first = false;
    }
    std::cout << ")";
  }
  std::cout << "  duplicates: " << s.duplicates << "  corrupted: " << s.corrupted << "\n";
  if (cfg.adversary != otfdh::AdversaryKind::None) {
    std::cout << "adversary: " << otfdh::to_string(cfg.adversary) << "  captured: " << s.captured
              << "  replayed: " << s.replayed << "  tampered: " << s.tampered
              << "  substituted: " << s.substituted
              << "  plaintexts-recovered: " << s.adversary_plaintexts << "\n";
  }
  if (s.reinits_completed > 0) {
    std::cout << "reinitializations: " << s.reinits_completed << "\n";
  }
  std::cout << "verdict: " << v.label << " (expected: "
            << (cfg.expect.empty() ? v.label : cfg.expect) << ") -> "
            << (v.pass ? "PASS" : "FAIL") << "\n";
  std::cout << "detail: " << v.detail << "\n";
}

int cmd_run(const otfdh::ScenarioConfig& cfg) {
  if (!otfdh::config_payload_feasible(cfg)) {
    std::cerr << "error: dh-bits " << cfg.dh_bits
              << " cannot carry a nonempty payload (frame overhead is 16 bytes; "
                 "need dh-bits >= 136)\n";
    return kExitUsage;
  }
  otfdh::ScenarioResult result = otfdh::run_scenario(cfg);
  if (!cfg.trace_path.empty()) {
    std::ofstream f(cfg.trace_path, std::ios::binary);
    if (!f) {
      std::cerr << "error: cannot write trace file " << cfg.trace_path << "\n";
      return kExitUsage;
    }
    f << result.trace;
  }
  print_summary(cfg, result.summary, result.verdict);
  return result.verdict.pass ? kExitOk : kExitFailure;
}

int cmd_keygen(unsigned bits, std::uint64_t seed) {
  otfdh::RandomSource rng(seed);
  otfdh::RsaKeyPair kp;
  try {
    kp = otfdh::rsa_keygen(bits, rng);
  } catch (const otfdh::GenerationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  // encrypt/decrypt self-test before printing anything
  otfdh::Bytes probe = rng.bytes(24);
  auto back = otfdh::rsa_decrypt(otfdh::rsa_encrypt(probe, kp.pub), kp);
  if (!back || *back != probe) {
    std::cerr << "error: generated pair failed self-test\n";
    return kExitFailure;
  }
  std::cout << "n = " << otfdh::to_hex(kp.pub.n) << "\n";
  std::cout << "e = " << otfdh::to_hex(kp.pub.e) << "\n";
  std::cout << "d = " << otfdh::to_hex(kp.d) << "\n";
  std::cout << "p = " << otfdh::to_hex(kp.p_factor) << "\n";
  std::cout << "q = " << otfdh::to_hex(kp.q_factor) << "\n";
  return kExitOk;
}

int cmd_params(unsigned bits, std::uint64_t seed, bool prefer_prime_g) {
  otfdh::RandomSource rng(seed);
  otfdh::DhParams params;
  try {
    params = otfdh::generate_params(bits, rng, prefer_prime_g);
  } catch (const otfdh::GenerationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  std::cout << "g = " << otfdh::to_hex(params.g) << "\n";
  std::cout << "p = " << otfdh::to_hex(params.p) << "\n";
  return kExitOk;
}

int cmd_goldens(const std::string& path, bool write) {
  if (write) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
      std::cerr << "error: cannot write " << path << "\n";
      return kExitUsage;
    }
    f << otfdh::golden_file_text();
    std::cout << "wrote " << path << "\n";
    return kExitOk;
  }
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    std::cerr << "error: cannot open " << path << "\n";
    return kExitUsage;
  }
  std::map<std::string, std::string> entries;
  std::string line;
  while (std::getline(f, line)) {
    line = otfdh::trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string name, hex;
    if (!(ls >> name >> hex)) {
      std::cerr << "error: malformed golden line: " << line << "\n";
      return kExitUsage;
    }
    entries[name] = hex;
  }
  if (entries.empty()) {
    std::cerr << "error: golden file has no vectors\n";
    return kExitUsage;
  }
  int mismatches = 0;
  for (const auto& [name, msg] : otfdh::golden_vectors()) {
    auto it = entries.find(name);
    if (it == entries.end()) {
      std::cout << "MISSING " << name << "\n";
      ++mismatches;
      continue;
    }
    const std::string expected_hex = otfdh::to_hex(otfdh::serialize(msg));
    if (it->second != expected_hex) {
      std::cout << "MISMATCH " << name << "\n";
      ++mismatches;
      entries.erase(it);
      continue;
    }
    // parse back and re-serialize: the codec must be a bijection on goldens
    otfdh::Bytes raw;
    otfdh::WireMessage parsed;
    if (!otfdh::from_hex(it->second, raw) ||
        otfdh::parse(raw, parsed) != otfdh::ParseError::none ||
        otfdh::serialize(parsed) != raw) {
      std::cout << "ROUNDTRIP-FAIL " << name << "\n";
      ++mismatches;
      entries.erase(it);
      continue;
    }
    std::cout << "OK " << name << "\n";
    entries.erase(it);
  }
  for (const auto& [name, hex] : entries) {
    std::cout << "UNEXPECTED " << name << "\n";
    ++mismatches;
  }
  return mismatches == 0 ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"on-the-fly Diffie-Hellman protocol simulator"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run a scenario and check its verdict");
  std::string scenario = "honest";
  std::string config_path;
  std::uint64_t seed = 1;
  unsigned dh_bits = 0, rsa_bits = 0, packets = 0, payload_len = 0;
  std::string adversary, trace_path, direction;
  double loss_rate = -1.0;
  bool sign_u2hg = true, preinstall = true, auto_reinit = false;
  auto* opt_scenario = run->add_option("--scenario", scenario, "named scenario");
  auto* opt_config = run->add_option("--config", config_path, "key=value scenario file");
  auto* opt_seed = run->add_option("--seed", seed, "master seed");
  opt_seed->envname("OTFDH_SEED");
  auto* opt_dh = run->add_option("--dh-bits", dh_bits, "safe-prime size");
  auto* opt_rsa = run->add_option("--rsa-bits", rsa_bits, "RSA modulus size");
  auto* opt_packets = run->add_option("--packets", packets, "packets to transmit");
  auto* opt_payload = run->add_option("--payload-len", payload_len, "payload bytes per packet");
  auto* opt_adv = run->add_option("--adversary", adversary,
                                  "none|eavesdrop|replay|tamper|mitm");
  auto* opt_loss = run->add_option("--loss-rate", loss_rate, "message loss probability");
  auto* opt_sign = run->add_option("--sign-u2hg", sign_u2hg, "user signs the setup message");
  auto* opt_pre = run->add_option("--preinstall-hg-pub", preinstall,
                                  "user writes the gateway key into the device");
  auto* opt_auto = run->add_option("--auto-reinit", auto_reinit,
                                   "gateway reinitializes on integrity failure");
  auto* opt_trace = run->add_option("--trace", trace_path, "JSON-lines event log path");
  auto* opt_dir = run->add_option("--direction", direction, "sd_to_hg|hg_to_sd");

  // keygen
  auto* keygen = app.add_subcommand("keygen", "generate a textbook RSA pair");
  unsigned kg_bits = 512;
  std::uint64_t kg_seed = 1;
  keygen->add_option("--bits", kg_bits, "modulus size (even, >= 64)");
  keygen->add_option("--seed", kg_seed, "seed")->envname("OTFDH_SEED");

  // params
  auto* params = app.add_subcommand("params", "generate a structural pair (g, p)");
  unsigned pr_bits = 256;
  std::uint64_t pr_seed = 1;
  bool pr_prefer_prime = true;
  params->add_option("--bits", pr_bits, "safe-prime size (>= 8)");
  params->add_option("--seed", pr_seed, "seed")->envname("OTFDH_SEED");
  params->add_option("--prefer-prime-g", pr_prefer_prime, "require a prime generator");

  // goldens
  auto* goldens = app.add_subcommand("goldens", "verify shipped wire-format vectors");
  std::string goldens_path;
  bool goldens_write = false;
  goldens->add_option("path", goldens_path, "golden vector file")->required();
  goldens->add_flag("--write", goldens_write, "regenerate the file instead of verifying");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) {
      otfdh::ScenarioConfig cfg;
      try {
        if (!config_path.empty()) {
          cfg = otfdh::load_config_file(config_path);
        } else {
          cfg = otfdh::scenario_preset(scenario);
        }
        if (opt_config->count() && opt_scenario->count()) {
          std::cerr << "error: --scenario and --config are mutually exclusive\n";
          return kExitUsage;
        }
      } catch (const otfdh::ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
      }
      if (opt_seed->count()) cfg.seed = seed;
      if (opt_dh->count()) cfg.dh_bits = dh_bits;
      if (opt_rsa->count()) cfg.rsa_bits = rsa_bits;
      if (opt_packets->count()) cfg.packets = packets;
      if (opt_payload->count()) cfg.payload_len = payload_len;
      if (opt_adv->count()) cfg.adversary = otfdh::parse_adversary(adversary);
      if (opt_loss->count()) cfg.loss_rate = loss_rate;
      if (opt_sign->count()) cfg.sign_u2hg = sign_u2hg;
      if (opt_pre->count()) cfg.preinstall_hg_pub = preinstall;
      if (opt_auto->count()) cfg.auto_reinit = auto_reinit;
      if (opt_trace->count()) cfg.trace_path = trace_path;
      if (opt_dir->count()) {
        if (direction == "sd_to_hg") cfg.direction = otfdh::DataDirection::SdToHg;
        else if (direction == "hg_to_sd") cfg.direction = otfdh::DataDirection::HgToSd;
        else {
          std::cerr << "error: bad --direction\n";
          return kExitUsage;
        }
      }
      return cmd_run(cfg);
    }
    if (keygen->parsed()) return cmd_keygen(kg_bits, kg_seed);
    if (params->parsed()) return cmd_params(pr_bits, pr_seed, pr_prefer_prime);
    if (goldens->parsed()) return cmd_goldens(goldens_path, goldens_write);
  } catch (const otfdh::ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
