#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "praclab/attacks/setup.hpp"

namespace praclab::attacks {

using AesBlock = std::array<std::uint8_t, 16>;

// T-table cache line touched by byte i in the first round: (p_i ^ k_i) >> 4.
AesBlock aesFirstRoundLines(const AesBlock& key, const AesBlock& plaintext);

struct AesAttackConfig {
  AesBlock key{};
  int byteIndex = 0;
  std::uint8_t fixedPlaintextByte = 0;
  int encryptions = 100;
  RowId tableRowBase = 0;
  BankId bank = 0;
  std::uint64_t seed = 1;
};

using Histogram = std::array<std::int64_t, 16>;

// Victim: n encryptions, plaintext byte i fixed and the rest uniformly
// random; each of the 16 first-round lookups activates row base + line.
Histogram runAesVictim(sim::MemorySystem& system, const AesAttackConfig& cfg);

struct SideChannelResult {
  Histogram victimHistogram{};
  bool triggered = false;
  int firstAboRow = -1;  // line index 0..15
  std::int64_t attackerProbesOnThatRow = 0;
  std::int64_t totalProbes = 0;
  std::optional<std::uint8_t> recoveredNibble;
  std::uint64_t alerts = 0;
};

// Probes rows base..base+15 round-robin, one activation each, until the
// latency spike of an ABO burst. Gives up after nBO rounds.
SideChannelResult runProbeAttack(sim::MemorySystem& system, const AesAttackConfig& cfg, Ns threshold);

// Calibrate, run the victim, then probe, on a fresh system.
SideChannelResult attackByte(const AesAttackConfig& cfg, const AttackSetup& setup);

struct KeyRecovery {
  std::array<std::optional<std::uint8_t>, 16> nibbles{};
  std::array<SideChannelResult, 16> runs{};
  double accuracy = 0;
  std::uint64_t alerts = 0;
};

KeyRecovery recoverKeyNibbles(const AesBlock& key, int encryptions, const AttackSetup& setup, std::uint64_t seed,
                              std::uint8_t fixedPlaintextByte = 0);

}  // namespace praclab::attacks
