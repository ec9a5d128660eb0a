#pragma once

#include <cstdint>
#include <optional>

#include "praclab/common.hpp"
#include "praclab/sim/system.hpp"

namespace praclab::attacks {

// Shared knobs for the attack experiments. nMit defaults to 4 so an ABO
// burst (>= 1400 ns) stands well clear of refresh stalls.
struct AttackSetup {
  sim::Defense defense = sim::Defense::AboOnly;
  std::uint32_t nBO = 256;
  int nMit = 4;
  std::uint32_t bat = 75;        // used by AboAcb only
  std::optional<Ns> tbWindow;    // Tprac only; nullopt = derive from the analysis
  bool trefSkip = false;
  std::optional<int> trefPeriod;
  dram::TimingParams timings{};
  dram::DramGeometry geometry{32, 32 * 1024};
  bool logEvents = false;

  sim::SystemConfig toSystem(prac::ResetPolicy reset) const;
  // TB-Window actually used for a Tprac run with the given reset policy.
  Ns resolveTbWindow(prac::ResetPolicy reset) const;
};

// Idle-phase latency probe: accesses `bank` for at least `duration`,
// pacing each access `think` ns after the previous completion, and returns
// the largest latency seen. Run before the experiment proper so refresh
// (and TB-RFM) stalls are part of the baseline.
Ns calibrateMaxLatency(sim::MemorySystem& system, BankId bank, Ns think, Ns duration);

// Gap after a completion that keeps consecutive paced accesses more than
// tABOACT + tRC apart at start, so an alert raised by access j is always
// serviced before access j+1 starts.
Ns pacedThink(const dram::TimingParams& t);

}  // namespace praclab::attacks
