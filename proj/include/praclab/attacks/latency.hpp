#pragma once

#include <string>

#include "praclab/attacks/setup.hpp"

namespace praclab::attacks {

struct LatencyConfig {
  AttackSetup setup{};
  int bursts = 8;
  Ns idleGap = 20'000;       // trigger pause between bursts
  bool triggerActive = true;
  int observerRows = 4096;
};

struct LatencyResult {
  int nMit = 0;
  double avgNsIdle = 0;
  double avgNsAbo = 0;
  std::size_t idleSamples = 0;
  std::size_t aboSamples = 0;
  std::size_t aboBursts = 0;
  std::string eventsCsv;  // filled when the setup asks for an event log
};

// Observer: dependent access loop over rows of bank 0. Trigger: alternates
// a fresh row pair of bank 1 until both reach nBO, then idles. Samples whose
// [issue, completion] overlaps an ABO burst are the "during ABO" set.
LatencyResult runLatencyCharacterization(const LatencyConfig& config);

}  // namespace praclab::attacks
