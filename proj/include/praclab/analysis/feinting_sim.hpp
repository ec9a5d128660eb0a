#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "praclab/common.hpp"
#include "praclab/dram/timing.hpp"
#include "praclab/prac/prac_engine.hpp"

namespace praclab::analysis {

enum class AttackPattern {
  Feinting,            // adaptive decoy rounds, target last, then hammer the target
  EqualActivations,    // round-robin over the whole pool, mitigated rows included
  DelayedActivations,  // decoy rounds first, then hammer the target
  EarlyAggressive,     // hammer the target from the start
  Random,              // seeded random rows from the pool
};

std::string_view toString(AttackPattern p);

struct FeintingSimConfig {
  dram::TimingParams timings = dram::noRefreshTimings();
  int numBanks = 2;
  int rowsPerBank = 4096;
  prac::PracConfig prac{};
  std::optional<Ns> tbWindow;  // nullopt: no timing-based RFMs
  AttackPattern pattern = AttackPattern::Feinting;
  std::int64_t r1 = 4;  // pool size; the target is the last row of the pool
  std::uint64_t seed = 1;
  // Non-adaptive patterns run this many TB-Windows (or tREFI when no
  // TB-Window is configured).
  std::int64_t windows = 64;
  std::int64_t decoyRounds = 8;     // DelayedActivations phase length
  std::int64_t activationLimit = 20'000'000;
  // Begin right after the first TB-RFM so every window has the same phase.
  bool alignToFirstRfm = true;
};

struct FeintingSimResult {
  std::int64_t targetMax = 0;  // highest counter value the target reached
  std::uint64_t alerts = 0;
  std::int64_t activations = 0;
  std::int64_t tbRfms = 0;
  // Most target activations between consecutive TB-RFM block starts.
  std::int64_t maxTargetActsPerWindow = 0;
  bool targetMitigated = false;
  Ns endTime = 0;
};

FeintingSimResult feintingSimulate(const FeintingSimConfig& config);

}  // namespace praclab::analysis
