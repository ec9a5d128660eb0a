#include "praclab/attacks/aes.hpp"

#include <memory>
#include <random>

namespace praclab::attacks {

AesBlock aesFirstRoundLines(const AesBlock& key, const AesBlock& plaintext) {
  AesBlock lines{};
  for (std::size_t i = 0; i < 16; ++i) lines[i] = static_cast<std::uint8_t>((plaintext[i] ^ key[i]) >> 4);
  return lines;
}

namespace {

class VictimActor : public sim::Actor {
 public:
  explicit VictimActor(const AesAttackConfig& cfg) : cfg_(cfg), rng_(deriveStream(cfg.seed, 0)) {}

  std::optional<sim::Access> next(Ns) override {
    if (lookup_ == 16) {
      lookup_ = 0;
      ++done_;
    }
    if (done_ >= cfg_.encryptions) return std::nullopt;
    if (lookup_ == 0) {
      AesBlock pt{};
      std::uniform_int_distribution<int> byte(0, 255);
      for (auto& b : pt) b = static_cast<std::uint8_t>(byte(rng_));
      pt[static_cast<std::size_t>(cfg_.byteIndex)] = cfg_.fixedPlaintextByte;
      lines_ = aesFirstRoundLines(cfg_.key, pt);
    }
    const std::uint8_t line = lines_[lookup_++];
    ++histogram[line];
    return sim::Access{cfg_.bank, cfg_.tableRowBase + line, 0};
  }

  Histogram histogram{};

 private:
  const AesAttackConfig& cfg_;
  std::mt19937_64 rng_;
  AesBlock lines_{};
  std::size_t lookup_ = 0;
  int done_ = 0;
};

class ProbeActor : public sim::Actor {
 public:
  ProbeActor(const AesAttackConfig& cfg, Ns think, Ns threshold, std::int64_t budget)
      : cfg_(cfg), think_(think), threshold_(threshold), budget_(budget) {}

  std::optional<sim::Access> next(Ns now) override {
    if (spikeAt >= 0 || probes_ >= budget_) return std::nullopt;
    const auto line = static_cast<RowId>(probes_ % 16);
    return sim::Access{cfg_.bank, cfg_.tableRowBase + line, probes_ == 0 ? 0 : now + think_};
  }
  void onComplete(const sim::AccessRecord& r) override {
    ++probes_;
    if (r.latency() > threshold_) spikeAt = probes_;
  }

  std::int64_t spikeAt = -1;  // 1-based index of the spiking probe

 private:
  const AesAttackConfig& cfg_;
  Ns think_;
  Ns threshold_;
  std::int64_t budget_;
  std::int64_t probes_ = 0;
};

}  // namespace

Histogram runAesVictim(sim::MemorySystem& system, const AesAttackConfig& cfg) {
  if (cfg.byteIndex < 0 || cfg.byteIndex > 15) throw InvalidCall("byte index must be in 0..15");
  auto id = system.addActor(std::make_unique<VictimActor>(cfg));
  system.run(dram::kNever - 1);
  return system.actor<VictimActor>(id).histogram;
}

SideChannelResult runProbeAttack(sim::MemorySystem& system, const AesAttackConfig& cfg, Ns threshold) {
  const auto nBO = static_cast<std::int64_t>(system.config().prac.nBO);
  const Ns think = pacedThink(system.config().timings);
  auto id = system.addActor(std::make_unique<ProbeActor>(cfg, think, threshold, 16 * nBO));
  system.run(dram::kNever - 1);
  const auto& probe = system.actor<ProbeActor>(id);
  SideChannelResult res;
  res.totalProbes = probe.spikeAt >= 0 ? probe.spikeAt : 16 * nBO;
  if (probe.spikeAt < 1) return res;
  // The probe that pushed a row to nBO is the one before the spike.
  const std::int64_t crossing = probe.spikeAt - 1;
  if (crossing < 1) return res;
  res.triggered = true;
  res.firstAboRow = static_cast<int>((crossing - 1) % 16);
  res.attackerProbesOnThatRow = (crossing - 1) / 16 + 1;
  res.recoveredNibble = static_cast<std::uint8_t>(res.firstAboRow ^ (cfg.fixedPlaintextByte >> 4));
  return res;
}

SideChannelResult attackByte(const AesAttackConfig& cfg, const AttackSetup& setup) {
  sim::MemorySystem system(setup.toSystem(prac::ResetPolicy::PerTrefw));
  const auto& t = setup.timings;
  // Calibrate on a bank the victim does not use.
  const BankId calBank = cfg.bank == 1 ? 2 : 1;
  const Ns threshold = calibrateMaxLatency(system, calBank, pacedThink(t), 3 * t.tREFI) + t.tRFMab / 2;
  const Histogram hist = runAesVictim(system, cfg);
  SideChannelResult res = runProbeAttack(system, cfg, threshold);
  res.victimHistogram = hist;
  res.alerts = system.prac().alerts();
  return res;
}

KeyRecovery recoverKeyNibbles(const AesBlock& key, int encryptions, const AttackSetup& setupIn, std::uint64_t seed,
                              std::uint8_t fixedPlaintextByte) {
  AttackSetup setup = setupIn;
  if (setup.defense == sim::Defense::Tprac && !setup.tbWindow)
    setup.tbWindow = setup.resolveTbWindow(prac::ResetPolicy::PerTrefw);
  KeyRecovery out;
  int correct = 0;
  for (int i = 0; i < 16; ++i) {
    AesAttackConfig cfg;
    cfg.key = key;
    cfg.byteIndex = i;
    cfg.fixedPlaintextByte = fixedPlaintextByte;
    cfg.encryptions = encryptions;
    cfg.seed = seed + static_cast<std::uint64_t>(i);
    out.runs[i] = attackByte(cfg, setup);
    out.nibbles[i] = out.runs[i].recoveredNibble;
    out.alerts += out.runs[i].alerts;
    if (out.nibbles[i] && *out.nibbles[i] == (key[i] >> 4)) ++correct;
  }
  out.accuracy = correct / 16.0;
  return out;
}

}  // namespace praclab::attacks
